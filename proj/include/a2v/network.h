#ifndef A2V_NETWORK_H_
#define A2V_NETWORK_H_

#include <optional>
#include <utility>
#include <vector>

#include "a2v/autodiff.h"
#include "a2v/params.h"
#include "a2v/rng.h"
#include "a2v/tensor.h"

namespace a2v {

struct NetworkConfig {
  int layers = 2;
  int heads = 4;
  int embed_dim = 64;
  int ffn_dim = 256;  // 4 x embed_dim by default
  double dropout = 0.0;
  double layerdrop = 0.0;
  // Convolutional positional encoding; kernel 0 disables it.
  int pos_kernel = 19;
  int pos_groups = 8;
  int decoder_dim = 64;
  int decoder_kernel = 7;
  int decoder_groups = 4;
  int decoder_layers = 2;
  int n_classes = 3;
  int input_dim = 64;  // frontend output channels
};

// Softmax attention matrices collected during a forward pass: one [L, L]
// matrix per (layer, head), plus the global average.
struct AttentionMaps {
  int layers = 0;
  int heads = 0;
  std::vector<Tensor> maps;  // layers*heads entries, row-major by layer
  Tensor averaged;

  const Tensor& map(int layer, int head) const {
    return maps[static_cast<size_t>(layer * heads + head)];
  }
};

// Post-block outputs of every layer (pre final norm) and the final
// (post final norm) sequence.
struct LayerOutputs {
  std::vector<ad::Var> per_layer;
  ad::Var final;
};

ParamSet init_transformer_params(const NetworkConfig& config, Rng& rng);
ParamSet init_decoder_params(const NetworkConfig& config, Rng& rng);
ParamSet init_head_params(const NetworkConfig& config, Rng& rng);

// Scaled dot-product attention for one head; n is the normalization constant
// (the per-head dimension). Returns the output and, optionally, a copy of
// the attention matrix.
std::pair<ad::Var, ad::Var> attention(const ad::Var& q, const ad::Var& k,
                                      const ad::Var& v, double n);

// Pre-norm encoder over frames [T, input_dim]: input projection, optional
// convolutional positional encoding, then `layers` blocks of self-attention
// + feed-forward with residuals. LayerDrop skips whole blocks (train only).
LayerOutputs transformer_forward(const ad::Var& frames, const ParamSet& params,
                                 const NetworkConfig& config, bool train,
                                 Rng* rng, AttentionMaps* collect = nullptr);

// Grouped 1-D conv stack over the full-length sequence (masked rows already
// noise-filled), same-length output, final projection back to embed_dim.
ad::Var conv_decoder(const ad::Var& sequence, const ParamSet& params,
                     const NetworkConfig& config);

// Arithmetic mean of the last K per-layer outputs (K = layers for all).
ad::Var layer_average(const LayerOutputs& outputs, int k);

ad::Var head_logits(const ad::Var& features, const ParamSet& head);
// Per-frame, per-class independent sigmoid likelihoods.
ad::Var classification_head(const ad::Var& features, const ParamSet& head);

// (x - mean) / sqrt(var + eps) over the time axis, per dimension.
Tensor instance_norm_time(const Tensor& x, double eps = 1e-5);

}  // namespace a2v

#endif  // A2V_NETWORK_H_
