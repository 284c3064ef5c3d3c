#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "a2v/dsp.h"
#include "a2v/error.h"
#include "a2v/frontend.h"
#include "test_util.h"

using namespace a2v;

namespace {
FrontendConfig tiny_config() {
  FrontendConfig config;
  config.n_filters = 6;
  config.sample_rate = 1000;
  config.conv_layers = {{8, 4, 2}, {8, 3, 2}};
  return config;
}
}  // namespace

TEST_CASE("sinc kernel length follows floor(rate/126), forced odd") {
  CHECK(sinc_kernel_length(8000) == 63);    // MeerKAT
  CHECK(sinc_kernel_length(32000) == 253);  // NIPS4Bplus rule value
  CHECK(sinc_kernel_length(126) == 1);
  CHECK(sinc_kernel_length(504) == 3);      // floor = 4, decremented to odd
  CHECK_THROWS_AS(sinc_kernel_length(125), ArgumentError);
}

TEST_CASE("full-band sinc kernel is a windowed delta") {
  SincFilter filter{0.0, 4000.0, 63};
  const auto kernel = sinc_kernel(filter, 8000.0);
  const int center = 31;
  CHECK(kernel[center] == doctest::Approx(1.0).epsilon(1e-9));
  for (int n = 0; n < 63; ++n) {
    if (n == center) continue;
    CHECK(std::fabs(kernel[static_cast<size_t>(n)]) < 1e-12);
  }
}

TEST_CASE("zero bandwidth gives an all-zero kernel") {
  SincFilter filter{300.0, 0.0, 63};
  for (double v : sinc_kernel(filter, 8000.0)) CHECK(v == 0.0);
}

TEST_CASE("band-pass kernel passes in-band and rejects out-of-band") {
  SincFilter filter{300.0, 500.0, 63};  // 300..800 Hz at 8 kHz
  const auto kernel = sinc_kernel(filter, 8000.0);
  const double inband = dsp::fir_response_mag(kernel, 8000.0, 550.0);
  const double outband = dsp::fir_response_mag(kernel, 8000.0, 2000.0);
  CHECK(inband >= 10.0 * outband);
}

TEST_CASE("sinc kernels are exactly symmetric") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    SincFilter filter{rng.uniform(0.0, 3500.0), rng.uniform(1.0, 1500.0), 63};
    const auto kernel = sinc_kernel(filter, 8000.0);
    for (size_t i = 0; i < kernel.size(); ++i) {
      CHECK(kernel[i] == kernel[kernel.size() - 1 - i]);
    }
  }
}

TEST_CASE("mel initialization: increasing edges, widening bands") {
  FrontendConfig config;
  config.n_filters = 127;
  config.sample_rate = 8000;
  const auto filters = mel_initialize(config);
  REQUIRE(filters.size() == 127);
  for (size_t i = 0; i + 1 < filters.size(); ++i) {
    CHECK(filters[i].f_low < filters[i + 1].f_low);
    // Mel compresses low frequencies: bandwidths never shrink with i.
    CHECK(filters[i + 1].bandwidth >= filters[i].bandwidth - 1e-9);
  }
  CHECK(filters.front().f_low == doctest::Approx(30.0));
  CHECK(filters.back().f_low + filters.back().bandwidth ==
        doctest::Approx(4000.0).epsilon(1e-9));
}

TEST_CASE("mel-initialized CFR peaks below 500 Hz") {
  FrontendConfig config;
  config.n_filters = 127;
  config.sample_rate = 8000;
  const auto filters = mel_initialize(config);
  const auto cfr = cumulative_frequency_response(filters, 8000.0, 512);
  const auto argmax = std::max_element(cfr.begin(), cfr.end()) - cfr.begin();
  const double peak_hz = 4000.0 * static_cast<double>(argmax) / 511.0;
  CHECK(peak_hz < 500.0);
}

TEST_CASE("CFR of one full-band filter is flat") {
  std::vector<SincFilter> filters{{0.0, 4000.0, 63}};
  const auto cfr = cumulative_frequency_response(filters, 8000.0, 128);
  const double first = cfr[0];
  for (double v : cfr) CHECK(v == doctest::Approx(first).epsilon(1e-9));
}

TEST_CASE("CFR normalization cancels duplicated filters") {
  std::vector<SincFilter> one{{250.0, 400.0, 63}};
  std::vector<SincFilter> two{{250.0, 400.0, 63}, {250.0, 400.0, 63}};
  const auto a = cumulative_frequency_response(one, 8000.0, 128);
  const auto b = cumulative_frequency_response(two, 8000.0, 128);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("CFR is non-negative with unit trapezoidal area") {
  FrontendConfig config;
  config.n_filters = 16;
  config.sample_rate = 8000;
  const auto filters = mel_initialize(config);
  const int n_bins = 256;
  const auto cfr = cumulative_frequency_response(filters, 8000.0, n_bins);
  const double df = 4000.0 / (n_bins - 1);
  double area = 0.0;
  for (int b = 0; b + 1 < n_bins; ++b) {
    CHECK(cfr[static_cast<size_t>(b)] >= 0.0);
    area += 0.5 * (cfr[static_cast<size_t>(b)] + cfr[static_cast<size_t>(b + 1)]) * df;
  }
  CHECK(std::fabs(area - 1.0) < 1e-9);
}

TEST_CASE("receptive field recursion") {
  SUBCASE("single layer without sinc") {
    FrontendConfig config;
    config.sample_rate = 8000;
    config.conv_layers = {{4, 10, 5}};
    CHECK(receptive_field(config, 0).first == 10);
  }
  SUBCASE("table layout plus kernel 63 gives 302 samples = 37.75 ms") {
    FrontendConfig config;
    config.sample_rate = 8000;
    config.conv_layers = FrontendConfig::meerkat_layout();
    const auto [samples, ms] = receptive_field(config, 63);
    CHECK(samples == 302);
    CHECK(ms == doctest::Approx(37.75).epsilon(1e-12));
  }
  SUBCASE("appending a stride-1 width-2 layer adds the product of prior strides") {
    FrontendConfig config;
    config.sample_rate = 8000;
    config.conv_layers = FrontendConfig::meerkat_layout();
    const auto base = receptive_field(config, 63).first;
    config.conv_layers.push_back({512, 2, 1});
    const auto grown = receptive_field(config, 63).first;
    CHECK(grown - base == 40);  // total stride of the prior stack
  }
}

TEST_CASE("frontend length recursion: 80000 samples -> 1993 frames") {
  FrontendConfig config;
  config.sample_rate = 8000;
  config.conv_layers = FrontendConfig::meerkat_layout();
  CHECK(frontend_output_length(config, 80000, 63) == 1993);
  // 1993 frames over 10 s is the paper's ~200 Hz effective rate.
  CHECK(1993.0 / 10.0 == doctest::Approx(200.0).epsilon(0.005));
  CHECK(config.effective_rate() == doctest::Approx(200.0));
  CHECK_THROWS_AS(frontend_output_length(config, 100, 63), ShapeError);
}

TEST_CASE("frontend forward length matches the recursion on varied inputs") {
  const FrontendConfig config = tiny_config();
  Rng rng(4);
  ParamSet params = init_frontend_params(config, rng);
  const int k = sinc_kernel_length(config.sample_rate);
  for (int64_t len : {40, 61, 97, 128}) {
    Tensor wave({len}, 0.0);
    for (auto& v : wave.v) v = rng.normal();
    const auto out = frontend_forward(wave, params, config);
    CHECK(out.rows() == frontend_output_length(config, len, k));
    CHECK(out.cols() == config.output_channels());
  }
}

TEST_CASE("zero waveform produces zero activations through the sinc stage") {
  const FrontendConfig config = tiny_config();
  Rng rng(5);
  ParamSet params = init_frontend_params(config, rng);
  const int k = sinc_kernel_length(config.sample_rate);
  Tensor wave({64}, 0.0);
  Tensor wave_col({64, 1}, 0.0);
  auto kernels = ad::sinc_kernels(params.get("sinc.f_low"),
                                  params.get("sinc.bandwidth"), k,
                                  config.sample_rate);
  const Tensor pre_norm =
      ad::conv1d_valid(ad::Var::constant(wave_col), kernels, ad::Var(), k, 1)
          .value();
  for (double v : pre_norm.v) CHECK(v == 0.0);
  // And the full frontend output is zero as well (affine norms carry beta=0).
  const auto out = frontend_forward(wave, params, config);
  for (double v : out.value().v) CHECK(v == 0.0);
}

TEST_CASE("too-short input raises a shape error") {
  const FrontendConfig config = tiny_config();
  Rng rng(6);
  ParamSet params = init_frontend_params(config, rng);
  Tensor wave({5}, 0.0);
  CHECK_THROWS_AS(frontend_forward(wave, params, config), ShapeError);
}

TEST_CASE("sinc_kernels op agrees with the plain kernel builder") {
  const FrontendConfig config = tiny_config();
  Rng rng(7);
  ParamSet params = init_frontend_params(config, rng);
  const int k = sinc_kernel_length(config.sample_rate);
  const Tensor kernels = ad::sinc_kernels(params.get("sinc.f_low"),
                                          params.get("sinc.bandwidth"), k,
                                          config.sample_rate).value();
  const auto filters = frontend_filters(params, config);
  for (int i = 0; i < config.n_filters; ++i) {
    const auto expect = sinc_kernel(filters[static_cast<size_t>(i)],
                                    config.sample_rate);
    for (int n = 0; n < k; ++n) {
      CHECK(kernels.at(i, n) == doctest::Approx(expect[static_cast<size_t>(n)])
                                    .epsilon(1e-12));
    }
  }
}

TEST_CASE("sinc parameter gradients match finite differences") {
  Rng rng(8);
  const int k = 9;
  ad::Var f_low = ad::Var::param(Tensor::from_vector({120.0, 800.0, 40.0}));
  ad::Var bw = ad::Var::param(Tensor::from_vector({200.0, 350.0, 90.0}));
  const Tensor w = testutil::random_tensor({3, k}, rng);
  const double worst = testutil::check_gradients(
      {f_low, bw},
      [&]() {
        return ad::sum_all(ad::mul(ad::sinc_kernels(f_low, bw, k, 1000.0),
                                   ad::Var::constant(w))).value().at(0);
      },
      [&]() {
        return ad::sum_all(ad::mul(ad::sinc_kernels(f_low, bw, k, 1000.0),
                                   ad::Var::constant(w)));
      });
  CHECK(worst < 1e-6);
}
