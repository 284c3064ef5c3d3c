#ifndef A2V_FRONTEND_H_
#define A2V_FRONTEND_H_

#include <string>
#include <utility>
#include <vector>

#include "a2v/autodiff.h"
#include "a2v/params.h"
#include "a2v/rng.h"
#include "a2v/tensor.h"

namespace a2v {

// Band-pass filter parameterized by its lower cutoff and bandwidth (Hz).
struct SincFilter {
  double f_low = 0.0;
  double bandwidth = 0.0;
  int kernel_length = 0;
};

struct ConvLayerSpec {
  int channels = 0;
  int width = 0;
  int stride = 1;
};

struct FrontendConfig {
  int n_filters = 32;
  int sample_rate = 8000;
  std::vector<ConvLayerSpec> conv_layers;
  // Activation of the conv stack (the sinc stage always uses PSwish):
  // "gelu", "pswish" or "leaky_relu".
  std::string conv_activation = "gelu";

  int total_stride() const;
  double effective_rate() const {
    return static_cast<double>(sample_rate) / total_stride();
  }
  int output_channels() const {
    return conv_layers.empty() ? n_filters : conv_layers.back().channels;
  }

  // Table layout (512,10,5)(512,3,2)x3(512,3,1)(512,2,1)(512,2,1):
  // total stride 40, i.e. 200 Hz at 8 kHz input.
  static std::vector<ConvLayerSpec> meerkat_layout(int channels = 512);
};

// floor(sample_rate / 126), decremented to the next odd value when even, so
// kernels stay symmetric.
int sinc_kernel_length(int sample_rate);

// Hamming-windowed difference of two sinc low-passes; cutoffs are clamped
// the same way the autodiff op clamps them.
std::vector<double> sinc_kernel(const SincFilter& filter, double sample_rate);

// Band edges on consecutive (i, i+2) pairs of n_filters + 2 points equally
// spaced on the Mel scale between 30 Hz and Nyquist.
std::vector<SincFilter> mel_initialize(const FrontendConfig& config);

// Area-normalized sum of filter magnitude responses on n_bins frequencies
// in [0, Nyquist] (trapezoidal area 1).
std::vector<double> cumulative_frequency_response(
    const std::vector<SincFilter>& filters, double sample_rate, int n_bins);

// (samples, milliseconds) of input influencing one output frame.
std::pair<int64_t, double> receptive_field(const FrontendConfig& config,
                                           int sinc_kernel_len);

// Frame count after the valid-convolution length recursion.
int64_t frontend_output_length(const FrontendConfig& config, int64_t input_len,
                               int sinc_kernel_len);

// Trainable frontend parameters; one PSwish per sinc filter.
ParamSet init_frontend_params(const FrontendConfig& config, Rng& rng);

// Raw waveform -> [T, output_channels] feature graph: sinc filterbank
// (stride 1, valid) -> per-filter PSwish -> layer norm -> conv stack with
// valid convolutions, activation and layer norm per layer.
ad::Var frontend_forward(const Tensor& wave, const ParamSet& params,
                         const FrontendConfig& config);

// Filters materialized from the current parameter values.
std::vector<SincFilter> frontend_filters(const ParamSet& params,
                                         const FrontendConfig& config);

}  // namespace a2v

#endif  // A2V_FRONTEND_H_
