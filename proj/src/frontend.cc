#include "a2v/frontend.h"

#include <algorithm>
#include <cmath>

#include "a2v/dsp.h"
#include "a2v/error.h"

namespace a2v {

int FrontendConfig::total_stride() const {
  int s = 1;
  for (const auto& layer : conv_layers) s *= layer.stride;
  return s;
}

std::vector<ConvLayerSpec> FrontendConfig::meerkat_layout(int channels) {
  return {
      {channels, 10, 5}, {channels, 3, 2}, {channels, 3, 2}, {channels, 3, 2},
      {channels, 3, 1}, {channels, 2, 1}, {channels, 2, 1},
  };
}

int sinc_kernel_length(int sample_rate) {
  if (sample_rate < 126) {
    throw ArgumentError("sinc_kernel_length: sample_rate must be >= 126");
  }
  int k = sample_rate / 126;
  if (k % 2 == 0) --k;
  return k;
}

std::vector<double> sinc_kernel(const SincFilter& filter, double sample_rate) {
  const int k = filter.kernel_length;
  if (k < 1 || k % 2 == 0) throw ArgumentError("sinc_kernel: odd kernel required");
  const double nyq = sample_rate / 2.0;
  const double f1 = std::min(std::fabs(filter.f_low), nyq - 1.0);
  const double f2 = std::min(f1 + std::fabs(filter.bandwidth), nyq);
  std::vector<double> kernel(static_cast<size_t>(k));
  const int center = (k - 1) / 2;
  for (int n = 0; n < k; ++n) {
    const double tau = static_cast<double>(n - center) / sample_rate;
    const double hi = (2.0 * f2 / sample_rate) * dsp::sinc(2.0 * f2 * tau);
    const double lo = (2.0 * f1 / sample_rate) * dsp::sinc(2.0 * f1 * tau);
    kernel[static_cast<size_t>(n)] = (hi - lo) * dsp::hamming(n, k);
  }
  return kernel;
}

std::vector<SincFilter> mel_initialize(const FrontendConfig& config) {
  if (config.n_filters < 2) throw ArgumentError("mel_initialize: need >= 2 filters");
  const double nyq = config.sample_rate / 2.0;
  const double lo_hz = 30.0;
  const int n_points = config.n_filters + 2;
  const double mel_lo = dsp::hz_to_mel(lo_hz);
  const double mel_hi = dsp::hz_to_mel(nyq);
  std::vector<double> points(static_cast<size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * i / (n_points - 1);
    points[static_cast<size_t>(i)] = dsp::mel_to_hz(mel);
  }
  const int k = sinc_kernel_length(config.sample_rate);
  std::vector<SincFilter> filters(static_cast<size_t>(config.n_filters));
  for (int i = 0; i < config.n_filters; ++i) {
    filters[static_cast<size_t>(i)].f_low = points[static_cast<size_t>(i)];
    filters[static_cast<size_t>(i)].bandwidth =
        points[static_cast<size_t>(i + 2)] - points[static_cast<size_t>(i)];
    filters[static_cast<size_t>(i)].kernel_length = k;
  }
  return filters;
}

std::vector<double> cumulative_frequency_response(
    const std::vector<SincFilter>& filters, double sample_rate, int n_bins) {
  if (n_bins < 16) throw ArgumentError("cumulative_frequency_response: n_bins");
  const double nyq = sample_rate / 2.0;
  std::vector<double> cfr(static_cast<size_t>(n_bins), 0.0);
  for (const auto& filter : filters) {
    const auto kernel = sinc_kernel(filter, sample_rate);
    for (int b = 0; b < n_bins; ++b) {
      const double f = nyq * b / (n_bins - 1);
      cfr[static_cast<size_t>(b)] += dsp::fir_response_mag(kernel, sample_rate, f);
    }
  }
  // Trapezoidal area over [0, Nyquist] normalized to 1.
  const double df = nyq / (n_bins - 1);
  double area = 0.0;
  for (int b = 0; b + 1 < n_bins; ++b) {
    area += 0.5 * (cfr[static_cast<size_t>(b)] + cfr[static_cast<size_t>(b + 1)]) * df;
  }
  if (area > 0.0) {
    for (auto& v : cfr) v /= area;
  }
  return cfr;
}

std::pair<int64_t, double> receptive_field(const FrontendConfig& config,
                                           int sinc_kernel_len) {
  int64_t rf = 1;
  for (auto it = config.conv_layers.rbegin(); it != config.conv_layers.rend(); ++it) {
    rf = (rf - 1) * it->stride + it->width;
  }
  if (sinc_kernel_len > 0) rf = (rf - 1) * 1 + sinc_kernel_len;
  const double ms = static_cast<double>(rf) / config.sample_rate * 1000.0;
  return {rf, ms};
}

int64_t frontend_output_length(const FrontendConfig& config, int64_t input_len,
                               int sinc_kernel_len) {
  int64_t len = input_len - sinc_kernel_len + 1;
  if (len < 1) throw ShapeError("frontend_output_length: input too short");
  for (const auto& layer : config.conv_layers) {
    len = (len - layer.width) / layer.stride + 1;
    if (len < 1) throw ShapeError("frontend_output_length: input too short");
  }
  return len;
}

ParamSet init_frontend_params(const FrontendConfig& config, Rng& rng) {
  ParamSet params;
  const auto filters = mel_initialize(config);
  Tensor f_low({config.n_filters}, 0.0);
  Tensor bandwidth({config.n_filters}, 0.0);
  for (int i = 0; i < config.n_filters; ++i) {
    f_low.at(i) = filters[static_cast<size_t>(i)].f_low;
    bandwidth.at(i) = filters[static_cast<size_t>(i)].bandwidth;
  }
  params.add("sinc.f_low", std::move(f_low));
  params.add("sinc.bandwidth", std::move(bandwidth));
  params.add("sinc.pswish.alpha", Tensor({config.n_filters}, 2.0));
  params.add("sinc.pswish.beta", Tensor({config.n_filters}, 0.0));
  params.add("sinc.norm.gamma", Tensor({config.n_filters}, 1.0));
  params.add("sinc.norm.beta", Tensor({config.n_filters}, 0.0));

  int in_channels = config.n_filters;
  for (size_t li = 0; li < config.conv_layers.size(); ++li) {
    const auto& layer = config.conv_layers[li];
    const int64_t fan_in = static_cast<int64_t>(in_channels) * layer.width;
    Tensor w({layer.channels, fan_in}, 0.0);
    const double sd = std::sqrt(1.0 / static_cast<double>(fan_in));
    for (auto& v : w.v) v = sd * rng.normal();
    const std::string prefix = "conv" + std::to_string(li);
    params.add(prefix + ".w", std::move(w));
    params.add(prefix + ".b", Tensor({layer.channels}, 0.0));
    params.add(prefix + ".norm.gamma", Tensor({layer.channels}, 1.0));
    params.add(prefix + ".norm.beta", Tensor({layer.channels}, 0.0));
    if (config.conv_activation == "pswish") {
      params.add(prefix + ".pswish.alpha", Tensor({layer.channels}, 2.0));
      params.add(prefix + ".pswish.beta", Tensor({layer.channels}, 0.0));
    }
    in_channels = layer.channels;
  }
  return params;
}

ad::Var frontend_forward(const Tensor& wave, const ParamSet& params,
                         const FrontendConfig& config) {
  if (wave.rank() != 1) throw ShapeError("frontend_forward: wave must be 1-D");
  const int k = sinc_kernel_length(config.sample_rate);
  Tensor wave_col({wave.numel(), 1}, 0.0);
  wave_col.v = wave.v;

  auto kernels = ad::sinc_kernels(params.get("sinc.f_low"),
                                  params.get("sinc.bandwidth"), k,
                                  config.sample_rate);
  auto x = ad::conv1d_valid(ad::Var::constant(std::move(wave_col)), kernels,
                            ad::Var(), k, 1);
  x = ad::pswish(x, params.get("sinc.pswish.alpha"),
                 params.get("sinc.pswish.beta"));
  x = ad::layer_norm(x, params.get("sinc.norm.gamma"),
                     params.get("sinc.norm.beta"), 1e-5);

  for (size_t li = 0; li < config.conv_layers.size(); ++li) {
    const auto& layer = config.conv_layers[li];
    const std::string prefix = "conv" + std::to_string(li);
    x = ad::conv1d_valid(x, params.get(prefix + ".w"), params.get(prefix + ".b"),
                         layer.width, layer.stride);
    if (config.conv_activation == "pswish") {
      x = ad::pswish(x, params.get(prefix + ".pswish.alpha"),
                     params.get(prefix + ".pswish.beta"));
    } else if (config.conv_activation == "leaky_relu") {
      x = ad::leaky_relu(x, 0.01);
    } else {
      x = ad::gelu(x);
    }
    x = ad::layer_norm(x, params.get(prefix + ".norm.gamma"),
                       params.get(prefix + ".norm.beta"), 1e-5);
  }
  return x;
}

std::vector<SincFilter> frontend_filters(const ParamSet& params,
                                         const FrontendConfig& config) {
  const auto f_low = params.get("sinc.f_low").value();
  const auto bandwidth = params.get("sinc.bandwidth").value();
  const int k = sinc_kernel_length(config.sample_rate);
  std::vector<SincFilter> filters(static_cast<size_t>(config.n_filters));
  for (int i = 0; i < config.n_filters; ++i) {
    filters[static_cast<size_t>(i)] = {f_low.at(i), bandwidth.at(i), k};
  }
  return filters;
}

}  // namespace a2v
