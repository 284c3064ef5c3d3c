#include "a2v/network.h"

#include <cmath>
#include <string>

#include "a2v/error.h"

namespace a2v {

namespace {

Tensor randn(const std::vector<int64_t>& shape, double sd, Rng& rng) {
  Tensor t(shape, 0.0);
  for (auto& v : t.v) v = sd * rng.normal();
  return t;
}

std::string block_prefix(int layer) { return "block" + std::to_string(layer); }

}  // namespace

ParamSet init_transformer_params(const NetworkConfig& config, Rng& rng) {
  if (config.embed_dim % config.heads != 0) {
    throw ArgumentError("transformer: embed_dim must be divisible by heads");
  }
  ParamSet params;
  const int d = config.embed_dim;
  const double sd = std::sqrt(1.0 / d);
  params.add("input_proj.w", randn({config.input_dim, d},
                                   std::sqrt(1.0 / config.input_dim), rng));
  params.add("input_proj.b", Tensor({d}, 0.0));
  if (config.pos_kernel > 0) {
    if (d % config.pos_groups != 0) {
      throw ArgumentError("transformer: embed_dim must be divisible by pos_groups");
    }
    const int64_t fan_in = static_cast<int64_t>(d / config.pos_groups) *
                           config.pos_kernel;
    params.add("pos_conv.w",
               randn({d, fan_in}, std::sqrt(1.0 / static_cast<double>(fan_in)), rng));
    params.add("pos_conv.b", Tensor({d}, 0.0));
  }
  for (int l = 0; l < config.layers; ++l) {
    const std::string p = block_prefix(l);
    params.add(p + ".ln1.gamma", Tensor({d}, 1.0));
    params.add(p + ".ln1.beta", Tensor({d}, 0.0));
    params.add(p + ".wq", randn({d, d}, sd, rng));
    params.add(p + ".bq", Tensor({d}, 0.0));
    params.add(p + ".wk", randn({d, d}, sd, rng));
    params.add(p + ".bk", Tensor({d}, 0.0));
    params.add(p + ".wv", randn({d, d}, sd, rng));
    params.add(p + ".bv", Tensor({d}, 0.0));
    params.add(p + ".wo", randn({d, d}, sd, rng));
    params.add(p + ".bo", Tensor({d}, 0.0));
    params.add(p + ".ln2.gamma", Tensor({d}, 1.0));
    params.add(p + ".ln2.beta", Tensor({d}, 0.0));
    params.add(p + ".ffn.w1", randn({d, config.ffn_dim}, sd, rng));
    params.add(p + ".ffn.b1", Tensor({config.ffn_dim}, 0.0));
    params.add(p + ".ffn.w2",
               randn({config.ffn_dim, d}, std::sqrt(1.0 / config.ffn_dim), rng));
    params.add(p + ".ffn.b2", Tensor({d}, 0.0));
  }
  params.add("final_norm.gamma", Tensor({d}, 1.0));
  params.add("final_norm.beta", Tensor({d}, 0.0));
  return params;
}

ParamSet init_decoder_params(const NetworkConfig& config, Rng& rng) {
  ParamSet params;
  const int d = config.embed_dim;
  const int dec = config.decoder_dim;
  const int g = config.decoder_groups;
  if (d % g != 0 || dec % g != 0) {
    throw ArgumentError("decoder: dims must be divisible by groups");
  }
  int in_dim = d;
  for (int l = 0; l < config.decoder_layers; ++l) {
    const int64_t fan_in =
        static_cast<int64_t>(in_dim / g) * config.decoder_kernel;
    const std::string p = "deconv" + std::to_string(l);
    params.add(p + ".w",
               randn({dec, fan_in}, std::sqrt(1.0 / static_cast<double>(fan_in)), rng));
    params.add(p + ".b", Tensor({dec}, 0.0));
    in_dim = dec;
  }
  params.add("proj.w", randn({dec, d}, std::sqrt(1.0 / dec), rng));
  params.add("proj.b", Tensor({d}, 0.0));
  return params;
}

ParamSet init_head_params(const NetworkConfig& config, Rng& rng) {
  ParamSet params;
  params.add("head.w", randn({config.embed_dim, config.n_classes},
                             std::sqrt(1.0 / config.embed_dim), rng));
  params.add("head.b", Tensor({config.n_classes}, 0.0));
  return params;
}

std::pair<ad::Var, ad::Var> attention(const ad::Var& q, const ad::Var& k,
                                      const ad::Var& v, double n) {
  if (n <= 0.0) throw ArgumentError("attention: n must be > 0");
  auto logits = ad::scale(ad::matmul_nt(q, k), 1.0 / std::sqrt(n));
  auto a = ad::softmax_rows(logits);
  auto out = ad::matmul(a, v);
  return {out, a};
}

LayerOutputs transformer_forward(const ad::Var& frames, const ParamSet& params,
                                 const NetworkConfig& config, bool train,
                                 Rng* rng, AttentionMaps* collect) {
  if ((train && (config.dropout > 0.0 || config.layerdrop > 0.0)) && rng == nullptr) {
    throw ArgumentError("transformer_forward: train mode needs an rng");
  }
  const int d = config.embed_dim;
  const int heads = config.heads;
  const int dh = d / heads;

  auto x = ad::linear(frames, params.get("input_proj.w"),
                      params.get("input_proj.b"));
  if (config.pos_kernel > 0) {
    auto pos = ad::conv1d_same_grouped(x, params.get("pos_conv.w"),
                                       params.get("pos_conv.b"),
                                       config.pos_kernel, config.pos_groups);
    x = ad::add(x, ad::gelu(pos));
  }

  if (collect) {
    collect->layers = config.layers;
    collect->heads = heads;
    collect->maps.clear();
  }

  LayerOutputs outputs;
  for (int l = 0; l < config.layers; ++l) {
    const bool skip = train && config.layerdrop > 0.0 &&
                      rng->uniform() < config.layerdrop;
    if (skip) {
      if (collect) {
        // Skipped blocks contribute no attention; keep indexing dense by
        // recording an identity-free empty map of zero rows.
        for (int h = 0; h < heads; ++h) {
          collect->maps.push_back(Tensor({0, 0}, 0.0));
        }
      }
      outputs.per_layer.push_back(x);
      continue;
    }
    const std::string p = block_prefix(l);
    auto x_norm = ad::layer_norm(x, params.get(p + ".ln1.gamma"),
                                 params.get(p + ".ln1.beta"), 1e-5);
    auto q = ad::linear(x_norm, params.get(p + ".wq"), params.get(p + ".bq"));
    auto k = ad::linear(x_norm, params.get(p + ".wk"), params.get(p + ".bk"));
    auto v = ad::linear(x_norm, params.get(p + ".wv"), params.get(p + ".bv"));
    std::vector<ad::Var> head_outputs;
    head_outputs.reserve(static_cast<size_t>(heads));
    for (int h = 0; h < heads; ++h) {
      auto qh = ad::slice_cols(q, static_cast<int64_t>(h) * dh, dh);
      auto kh = ad::slice_cols(k, static_cast<int64_t>(h) * dh, dh);
      auto vh = ad::slice_cols(v, static_cast<int64_t>(h) * dh, dh);
      auto [oh, ah] = attention(qh, kh, vh, static_cast<double>(dh));
      if (collect) collect->maps.push_back(ah.value());
      head_outputs.push_back(oh);
    }
    auto att = ad::concat_cols(head_outputs);
    att = ad::linear(att, params.get(p + ".wo"), params.get(p + ".bo"));
    if (train && rng) att = ad::dropout(att, config.dropout, *rng, train);
    x = ad::add(x, att);

    auto y_norm = ad::layer_norm(x, params.get(p + ".ln2.gamma"),
                                 params.get(p + ".ln2.beta"), 1e-5);
    auto f = ad::linear(y_norm, params.get(p + ".ffn.w1"), params.get(p + ".ffn.b1"));
    f = ad::gelu(f);
    f = ad::linear(f, params.get(p + ".ffn.w2"), params.get(p + ".ffn.b2"));
    if (train && rng) f = ad::dropout(f, config.dropout, *rng, train);
    x = ad::add(x, f);
    outputs.per_layer.push_back(x);
  }

  outputs.final = ad::layer_norm(x, params.get("final_norm.gamma"),
                                 params.get("final_norm.beta"), 1e-5);

  if (collect) {
    // Average over heads and non-skipped layers.
    const int64_t L = frames.rows();
    collect->averaged = Tensor({L, L}, 0.0);
    int64_t counted = 0;
    for (const auto& m : collect->maps) {
      if (m.rows() != L) continue;
      for (size_t i = 0; i < m.v.size(); ++i) collect->averaged.v[i] += m.v[i];
      ++counted;
    }
    if (counted > 0) {
      for (auto& v : collect->averaged.v) v /= static_cast<double>(counted);
    }
  }
  return outputs;
}

ad::Var conv_decoder(const ad::Var& sequence, const ParamSet& params,
                     const NetworkConfig& config) {
  auto x = sequence;
  for (int l = 0; l < config.decoder_layers; ++l) {
    const std::string p = "deconv" + std::to_string(l);
    x = ad::conv1d_same_grouped(x, params.get(p + ".w"), params.get(p + ".b"),
                                config.decoder_kernel, config.decoder_groups);
    if (l + 1 < config.decoder_layers) x = ad::gelu(x);
  }
  return ad::linear(x, params.get("proj.w"), params.get("proj.b"));
}

ad::Var layer_average(const LayerOutputs& outputs, int k) {
  const int n = static_cast<int>(outputs.per_layer.size());
  if (k < 1 || k > n) throw ArgumentError("layer_average: K out of range");
  auto acc = outputs.per_layer[static_cast<size_t>(n - k)];
  for (int l = n - k + 1; l < n; ++l) {
    acc = ad::add(acc, outputs.per_layer[static_cast<size_t>(l)]);
  }
  return ad::scale(acc, 1.0 / static_cast<double>(k));
}

ad::Var head_logits(const ad::Var& features, const ParamSet& head) {
  return ad::linear(features, head.get("head.w"), head.get("head.b"));
}

ad::Var classification_head(const ad::Var& features, const ParamSet& head) {
  return ad::sigmoid(head_logits(features, head));
}

Tensor instance_norm_time(const Tensor& x, double eps) {
  const int64_t T = x.rows(), d = x.cols();
  Tensor out({T, d}, 0.0);
  for (int64_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (int64_t t = 0; t < T; ++t) mean += x.at(t, j);
    mean /= static_cast<double>(T);
    double var = 0.0;
    for (int64_t t = 0; t < T; ++t) {
      const double dv = x.at(t, j) - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(T);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int64_t t = 0; t < T; ++t) out.at(t, j) = (x.at(t, j) - mean) * inv;
  }
  return out;
}

}  // namespace a2v
