// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Heavy end-to-end runs write their artifacts under the
// system temp directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "a2v/checkpoint.h"
#include "a2v/error.h"
#include "a2v/evaluate.h"
#include "a2v/finetune.h"
#include "a2v/frontend.h"
#include "a2v/masking.h"
#include "a2v/model.h"
#include "a2v/pretrain.h"
#include "a2v/runner.h"
#include "a2v/synthdata.h"

using namespace a2v;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Result {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

std::string work_dir() {
  static std::string dir = [] {
    const fs::path p = fs::temp_directory_path() / "a2v_acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
  }();
  return dir;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("missing " + path);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", x);
  return buf;
}

// ---------------------------------------------------------------- criterion 1

Result c1_mask_coverage() {
  Result r{1, "mask coverage Monte Carlo (p=0.065, M=10) ~ 49%"};
  MaskConfig config{0.065, 10, 1, 2024};
  const MaskPlan plan = sample_mask(1000000, config);
  const MaskStatistics stats = mask_statistics(plan, 5.0);
  const double closed_form = 1.0 - std::pow(1.0 - 0.065, 10.0);  // 0.4899
  r.pass = std::fabs(stats.coverage - closed_form) < 0.005;
  r.detail = "coverage=" + fmt(stats.coverage) + " closed_form=" + fmt(closed_form);
  return r;
}

// ---------------------------------------------------------------- criterion 2

FrontendConfig grad_frontend() {
  FrontendConfig config;
  config.n_filters = 6;
  config.sample_rate = 1000;
  config.conv_layers = {{8, 4, 2}, {8, 3, 2}};
  return config;
}

NetworkConfig grad_network() {
  NetworkConfig config;
  config.layers = 2;
  config.heads = 2;
  config.embed_dim = 8;
  config.ffn_dim = 16;
  config.pos_kernel = 3;
  config.pos_groups = 2;
  config.decoder_dim = 8;
  config.decoder_kernel = 3;
  config.decoder_groups = 2;
  config.decoder_layers = 2;
  config.n_classes = 3;
  config.input_dim = 8;
  return config;
}

double worst_gradient_error(std::vector<ad::Var> params,
                            const std::function<ad::Var()>& loss_graph) {
  for (auto& p : params) p.grad().fill(0.0);
  ad::backward(loss_graph());
  std::vector<Tensor> analytic;
  for (auto& p : params) analytic.push_back(p.grad());
  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& theta = params[pi].mutable_value();
    for (int64_t i = 0; i < theta.numel(); ++i) {
      const double orig = theta.at(i);
      const double h = 1e-5 * std::max(1.0, std::fabs(orig));
      theta.at(i) = orig + h;
      const double up = loss_graph().value().at(0);
      theta.at(i) = orig - h;
      const double down = loss_graph().value().at(0);
      theta.at(i) = orig;
      const double fd = (up - down) / (2.0 * h);
      const double an = analytic[pi].at(i);
      worst = std::max(worst, std::fabs(an - fd) /
                                  std::max({1e-6, std::fabs(an), std::fabs(fd)}));
    }
  }
  return worst;
}

Result c2_gradient_suite() {
  Result r{2, "finite-difference gradient suite on the tiny network"};
  ModelState model = init_model(grad_frontend(), grad_network(), 7);
  Rng rng(5);
  // Generic position: off the Nyquist clamp kink and any exact zeros.
  for (auto& [name, var] : model.frontend.items) {
    if (name == "sinc.bandwidth") {
      for (auto& v : var.mutable_value().v) v *= 0.9;
    }
  }
  for (auto* set : {&model.frontend, &model.transformer, &model.decoder, &model.head}) {
    for (auto& [name, var] : set->items) {
      for (auto& v : var.mutable_value().v) v += 1e-3 * rng.normal();
    }
  }

  Tensor wave({58}, 0.0);
  for (auto& v : wave.v) v = 0.3 * rng.normal();
  const int64_t frames = frontend_output_length(grad_frontend(), 58, 7);
  const MaskPlan plan = sample_mask(frames, {0.3, 2, 1, 77});
  const auto& mask = plan.masks[0];
  const auto kept = kept_indices(mask);
  const auto masked = masked_indices(mask);
  const Tensor noise_base =
      fill_masked_noise(Tensor({frames, 8}, 0.0), mask, 99);
  Tensor target({frames, 8}, 0.0);
  for (auto& v : target.v) v = rng.normal();
  Tensor labels({frames, 3}, 0.0);
  for (auto& v : labels.v) v = rng.bernoulli(0.4) ? 1.0 : 0.0;

  std::vector<ad::Var> distill_params;
  for (auto* set : {&model.frontend, &model.transformer, &model.decoder}) {
    for (auto& [name, var] : set->items) distill_params.push_back(var);
  }
  auto distill_graph = [&]() {
    auto features = frontend_forward(wave, model.frontend, model.frontend_cfg);
    auto student_in = ad::gather_rows(features, kept);
    auto outputs = transformer_forward(student_in, model.transformer,
                                       model.net_cfg, false, nullptr);
    auto full = ad::scatter_rows(outputs.final, kept, noise_base);
    auto pred = conv_decoder(full, model.decoder, model.net_cfg);
    return ad::mse_rows(pred, target, masked);
  };
  const double worst_distill = worst_gradient_error(distill_params, distill_graph);

  std::vector<ad::Var> focal_params;
  for (auto* set : {&model.frontend, &model.transformer, &model.head}) {
    for (auto& [name, var] : set->items) focal_params.push_back(var);
  }
  double worst_focal = 0.0;
  for (double gamma : {0.0, 1.0, 2.0}) {
    auto focal_graph = [&]() {
      auto features = frontend_forward(wave, model.frontend, model.frontend_cfg);
      auto outputs = transformer_forward(features, model.transformer,
                                         model.net_cfg, false, nullptr);
      auto pooled = layer_average(outputs, model.net_cfg.layers);
      return ad::focal_loss_from_logits(head_logits(pooled, model.head), labels,
                                        gamma);
    };
    worst_focal = std::max(worst_focal,
                           worst_gradient_error(focal_params, focal_graph));
  }
  r.pass = worst_distill < 1e-4 && worst_focal < 1e-4;
  r.detail = "worst_rel_err distill=" + fmt(worst_distill) +
             " focal=" + fmt(worst_focal);
  return r;
}

// ---------------------------------------------------------------- criterion 3

Result c3_ema_closed_form() {
  Result r{3, "EMA geometric closed form at tau=0.999 over 100 steps"};
  ParamSet student;
  Rng rng(2);
  Tensor init({16, 16}, 0.0);
  for (auto& v : init.v) v = rng.normal();
  student.add("w", init);
  std::vector<Tensor> teacher;
  Tensor t0({16, 16}, 0.0);
  for (auto& v : t0.v) v = rng.normal();
  teacher.push_back(t0);
  for (int step = 0; step < 100; ++step) ema_update(teacher, student, 0.999);
  const double tau_n = std::pow(0.999, 100.0);
  double worst = 0.0;
  for (size_t i = 0; i < t0.v.size(); ++i) {
    const double expect =
        tau_n * t0.v[i] + (1.0 - tau_n) * student.items[0].second.value().v[i];
    worst = std::max(worst, std::fabs(teacher[0].v[i] - expect));
  }
  r.pass = worst < 1e-10;
  r.detail = "max_abs_dev=" + fmt(worst);
  return r;
}

// ---------------------------------------------------------------- criterion 4

Result c4_shape_law() {
  Result r{4, "frontend shape law: 80000 samples -> 1993 frames at ~200 Hz"};
  FrontendConfig config;
  config.n_filters = 16;
  config.sample_rate = 8000;
  config.conv_layers = FrontendConfig::meerkat_layout(8);
  const int64_t predicted = frontend_output_length(config, 80000, 63);
  Rng rng(3);
  ParamSet params = init_frontend_params(config, rng);
  Tensor wave({80000}, 0.0);
  for (auto& v : wave.v) v = 0.1 * rng.normal();
  const auto out = frontend_forward(wave, params, config);
  const double rate = static_cast<double>(out.rows()) / 10.0;
  r.pass = predicted == 1993 && out.rows() == 1993 &&
           std::fabs(rate - 200.0) / 200.0 < 0.01 &&
           config.effective_rate() == 200.0;
  r.detail = "frames=" + std::to_string(out.rows()) + " rate=" + fmt(rate) + " Hz";
  return r;
}

// ---------------------------------------------------------------- criterion 5

Result c5_pswish_identity() {
  Result r{5, "PSwish at (alpha=2, beta=0) leaves the frontend bit-identical"};
  FrontendConfig config = grad_frontend();
  Rng rng(11);
  ParamSet params = init_frontend_params(config, rng);
  const int k = sinc_kernel_length(config.sample_rate);

  // The same stack with the sinc-stage activation bypassed entirely.
  auto linear_path = [&](const Tensor& wave) {
    Tensor wave_col({wave.numel(), 1}, 0.0);
    wave_col.v = wave.v;
    auto kernels = ad::sinc_kernels(params.get("sinc.f_low"),
                                    params.get("sinc.bandwidth"), k,
                                    config.sample_rate);
    auto x = ad::conv1d_valid(ad::Var::constant(std::move(wave_col)), kernels,
                              ad::Var(), k, 1);
    x = ad::layer_norm(x, params.get("sinc.norm.gamma"),
                       params.get("sinc.norm.beta"), 1e-5);
    for (size_t li = 0; li < config.conv_layers.size(); ++li) {
      const auto& layer = config.conv_layers[li];
      const std::string prefix = "conv" + std::to_string(li);
      x = ad::conv1d_valid(x, params.get(prefix + ".w"), params.get(prefix + ".b"),
                           layer.width, layer.stride);
      x = ad::gelu(x);
      x = ad::layer_norm(x, params.get(prefix + ".norm.gamma"),
                         params.get(prefix + ".norm.beta"), 1e-5);
    }
    return x.value();
  };

  bool all_equal = true;
  for (int trial = 0; trial < 100 && all_equal; ++trial) {
    Tensor wave({64 + static_cast<int64_t>(rng.uniform_int(64))}, 0.0);
    for (auto& v : wave.v) v = rng.normal();
    const Tensor with_pswish = frontend_forward(wave, params, config).value();
    const Tensor without = linear_path(wave);
    all_equal = with_pswish.v == without.v;
  }
  r.pass = all_equal;
  r.detail = all_equal ? "100/100 inputs bit-identical" : "mismatch found";
  return r;
}

// ---------------------------------------------------------------- criterion 6

// Independent greedy matcher: repeated full scans for the best remaining
// pair, same descending-IOU order and tie-breaking as the library contract.
MatchResult oracle_match(const std::vector<EventPrediction>& preds,
                         const std::vector<LabelEvent>& truth, int class_id,
                         double iou_min) {
  MatchResult result;
  std::vector<bool> pred_used(preds.size(), false), truth_used(truth.size(), false);
  while (true) {
    double best = -1.0;
    size_t best_p = 0, best_t = 0;
    for (size_t pi = 0; pi < preds.size(); ++pi) {
      if (pred_used[pi] || preds[pi].class_id != class_id) continue;
      for (size_t ti = 0; ti < truth.size(); ++ti) {
        if (truth_used[ti] || truth[ti].class_id != class_id) continue;
        const double overlap = iou({preds[pi].onset_s, preds[pi].offset_s},
                                   {truth[ti].onset_s, truth[ti].offset_s});
        if (overlap > best) {
          best = overlap;
          best_p = pi;
          best_t = ti;
        }
      }
    }
    if (best <= iou_min) break;
    pred_used[best_p] = true;
    truth_used[best_t] = true;
    result.true_positives.emplace_back(preds[best_p], truth[best_t], best);
  }
  for (size_t pi = 0; pi < preds.size(); ++pi) {
    if (preds[pi].class_id == class_id && !pred_used[pi]) {
      result.false_positives.push_back(preds[pi]);
    }
  }
  for (size_t ti = 0; ti < truth.size(); ++ti) {
    if (truth[ti].class_id == class_id && !truth_used[ti]) {
      result.false_negatives.push_back(truth[ti]);
    }
  }
  return result;
}

double oracle_ap(const std::vector<std::pair<double, bool>>& scored,
                 int64_t n_truth, int n_levels) {
  std::vector<double> thresholds;
  for (const auto& [like, tp] : scored) thresholds.push_back(like);
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  std::vector<std::pair<double, double>> points;
  for (double threshold : thresholds) {
    int64_t tp = 0, fp = 0;
    for (const auto& [like, is_tp] : scored) {
      if (like >= threshold) (is_tp ? tp : fp) += 1;
    }
    if (tp + fp == 0) continue;
    points.emplace_back(static_cast<double>(tp) / n_truth,
                        static_cast<double>(tp) / (tp + fp));
  }
  double acc = 0.0;
  for (int level = 0; level < n_levels; ++level) {
    const double recall = static_cast<double>(level) / (n_levels - 1);
    double best = 0.0;
    for (const auto& [r2, p2] : points) {
      if (r2 >= recall - 1e-12) best = std::max(best, p2);
    }
    acc += best;
  }
  return acc / n_levels;
}

Result c6_metrics_oracle() {
  Result r{6, "metrics equal the brute-force oracle on 1000 random instances"};
  Rng rng(17);
  ClassTable table;
  table.names = {"a", "b"};
  double worst = 0.0;
  int64_t bucket_mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::map<int, DetectionPool> pools;
    std::map<int, std::vector<std::pair<double, bool>>> oracle_scored;
    std::map<int, int64_t> oracle_truth;
    for (int c = 0; c < 2; ++c) {
      std::vector<EventPrediction> preds;
      std::vector<LabelEvent> truth;
      const int n_preds = static_cast<int>(rng.uniform_int(10));
      const int n_truth = 1 + static_cast<int>(rng.uniform_int(9));
      for (int i = 0; i < n_preds; ++i) {
        const double onset = rng.uniform(0.0, 4.0);
        preds.push_back({c, onset, onset + rng.uniform(0.05, 1.0),
                         std::round(rng.uniform() * 16.0) / 16.0});
      }
      for (int i = 0; i < n_truth; ++i) {
        const double onset = rng.uniform(0.0, 4.0);
        truth.push_back({c, onset, onset + rng.uniform(0.05, 1.0), false});
      }
      const MatchResult lib = match_events(preds, truth, c, 0.5);
      const MatchResult want = oracle_match(preds, truth, c, 0.5);
      if (lib.true_positives.size() != want.true_positives.size() ||
          lib.false_positives.size() != want.false_positives.size() ||
          lib.false_negatives.size() != want.false_negatives.size()) {
        ++bucket_mismatches;
      }
      DetectionPool pool;
      pool.add(lib);
      pools[c] = pool;
      for (const auto& [pred, gt, overlap] : want.true_positives) {
        oracle_scored[c].emplace_back(pred.likelihood, true);
      }
      for (const auto& pred : want.false_positives) {
        oracle_scored[c].emplace_back(pred.likelihood, false);
      }
      oracle_truth[c] = static_cast<int64_t>(truth.size());
    }
    for (int c = 0; c < 2; ++c) {
      const PRCurve curve = pr_curve(pools[c], 101);
      worst = std::max(worst, std::fabs(curve.ap - oracle_ap(oracle_scored[c],
                                                             oracle_truth[c], 101)));
      // Spot-check curve points against a full rescan.
      for (const auto& point : curve.points) {
        int64_t tp = 0, fp = 0;
        for (const auto& [like, is_tp] : oracle_scored[c]) {
          if (like >= point.threshold) (is_tp ? tp : fp) += 1;
        }
        worst = std::max(worst, std::fabs(point.precision -
                                          static_cast<double>(tp) / (tp + fp)));
        worst = std::max(worst, std::fabs(point.recall -
                                          static_cast<double>(tp) / oracle_truth[c]));
      }
    }
    const AggregateResult agg = aggregate(pools, table, 101);
    std::vector<std::pair<double, bool>> pooled = oracle_scored[0];
    pooled.insert(pooled.end(), oracle_scored[1].begin(), oracle_scored[1].end());
    worst = std::max(worst, std::fabs(agg.micro.ap -
                                      oracle_ap(pooled, oracle_truth[0] + oracle_truth[1], 101)));
    const double macro_want = 0.5 * (oracle_ap(oracle_scored[0], oracle_truth[0], 101) +
                                     oracle_ap(oracle_scored[1], oracle_truth[1], 101));
    worst = std::max(worst, std::fabs(agg.macro_ap - macro_want));
  }
  r.pass = worst < 1e-12 && bucket_mismatches == 0;
  r.detail = "worst_abs_dev=" + fmt(worst) +
             " bucket_mismatches=" + std::to_string(bucket_mismatches);
  return r;
}

// ---------------------------------------------------------------- criterion 7

Result c7_extraction_exactness() {
  Result r{7, "event extraction equals direct simulation on 25 traces"};
  const double rate = 200.0;
  std::vector<std::vector<double>> traces;
  // Pulses of several widths and positions, including edge-touching runs.
  for (int width : {1, 3, 10, 25, 60}) {
    std::vector<double> t(200, 0.0);
    for (int i = 40; i < 40 + width; ++i) t[static_cast<size_t>(i)] = 1.0;
    traces.push_back(t);
  }
  for (int start : {0, 150}) {  // runs touching either edge
    std::vector<double> t(200, 0.0);
    for (int i = start; i < start + 50; ++i) t[static_cast<size_t>(i)] = 0.95;
    traces.push_back(t);
  }
  {
    std::vector<double> t(200, 1.0);  // saturated
    traces.push_back(t);
    traces.push_back(std::vector<double>(200, 0.0));  // silent
    traces.push_back(std::vector<double>(200, 0.51));  // barely above
    traces.push_back(std::vector<double>(200, 0.49));  // barely below
    traces.push_back(std::vector<double>(200, 0.5));   // exactly at threshold
  }
  // Plateaus separated by gaps of varying width (merge behavior).
  for (int gap : {1, 5, 10, 30}) {
    std::vector<double> t(300, 0.0);
    for (int i = 50; i < 100; ++i) t[static_cast<size_t>(i)] = 1.0;
    for (int i = 100 + gap; i < 160 + gap; ++i) t[static_cast<size_t>(i)] = 1.0;
    traces.push_back(t);
  }
  // Staircases and ramps.
  {
    std::vector<double> t(250, 0.0);
    for (int i = 0; i < 250; ++i) t[static_cast<size_t>(i)] = i / 249.0;
    traces.push_back(t);
    for (int i = 0; i < 250; ++i) t[static_cast<size_t>(i)] = 1.0 - i / 249.0;
    traces.push_back(t);
  }
  // Alternating combs at several duty cycles.
  for (int period : {2, 4, 8, 16}) {
    std::vector<double> t(240, 0.0);
    for (int i = 0; i < 240; ++i) {
      t[static_cast<size_t>(i)] = (i % period) < period / 2 ? 0.9 : 0.1;
    }
    traces.push_back(t);
  }
  // Short spikes near both edges plus a center plateau.
  {
    std::vector<double> t(200, 0.0);
    t[0] = t[1] = 1.0;
    t[198] = t[199] = 1.0;
    for (int i = 95; i < 105; ++i) t[static_cast<size_t>(i)] = 1.0;
    traces.push_back(t);
  }
  // Noise-like deterministic pattern.
  {
    Rng rng(7);
    std::vector<double> t(320);
    for (auto& v : t) v = rng.uniform();
    traces.push_back(t);
    for (auto& v : t) v = rng.uniform() * 0.6;
    traces.push_back(t);
  }
  while (traces.size() < 25) {
    std::vector<double> t(64, 0.0);
    for (size_t i = traces.size(); i < 40; i += 7) t[i] = 1.0;
    traces.push_back(t);
  }

  int mismatches = 0;
  for (const auto& trace : traces) {
    const auto got = extract_events(trace, rate, 0.1, 0.5, 0);
    // Direct simulation of the pooled step function.
    const int64_t T = static_cast<int64_t>(trace.size());
    const int64_t w = 20;
    std::vector<bool> on(static_cast<size_t>(T));
    for (int64_t t = 0; t < T; ++t) {
      double acc = 0.0;
      int64_t count = 0;
      for (int64_t j = t - (w - 1) / 2; j <= t + w / 2; ++j) {
        if (j < 0 || j >= T) continue;
        acc += trace[static_cast<size_t>(j)];
        ++count;
      }
      on[static_cast<size_t>(t)] = acc / count > 0.5;
    }
    std::vector<std::pair<double, double>> want;
    int64_t start = -1;
    for (int64_t t = 0; t <= T; ++t) {
      const bool active = t < T && on[static_cast<size_t>(t)];
      if (active && start < 0) start = t;
      if (!active && start >= 0) {
        want.emplace_back(start / rate, t / rate);
        start = -1;
      }
    }
    if (got.size() != want.size()) {
      ++mismatches;
      continue;
    }
    for (size_t i = 0; i < got.size(); ++i) {
      if (std::fabs(got[i].onset_s - want[i].first) > 1e-12 ||
          std::fabs(got[i].offset_s - want[i].second) > 1e-12) {
        ++mismatches;
        break;
      }
    }
  }
  r.pass = mismatches == 0 && traces.size() >= 25;
  r.detail = std::to_string(traces.size()) + " traces, " +
             std::to_string(mismatches) + " mismatches";
  return r;
}

// ---------------------------------------------------------------- criterion 8

Result c8_focal_reductions() {
  Result r{8, "focal loss: gamma=0 is BCE; worked value 0.25 ln 2"};
  Rng rng(23);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double p = rng.uniform(1e-6, 1.0 - 1e-6);
    const double y = rng.uniform();
    const double bce = -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    worst = std::max(worst, std::fabs(focal_loss(p, y, 0.0) - bce));
  }
  const double worked = std::fabs(focal_loss(0.5, 1.0, 2.0) - 0.25 * std::log(2.0));
  r.pass = worst < 1e-12 && worked < 1e-12;
  r.detail = "worst_bce_dev=" + fmt(worst) + " worked_dev=" + fmt(worked);
  return r;
}

// ------------------------------------------------------- desk-scale pipeline

struct DeskArtifacts {
  std::string config_path;
  std::string corpus_dir;
  std::string pretrain_dir;
  std::string finetune100_dir;
  double micro_ap_100 = 0.0;
  bool pretrain_ok = false;
};

void write_desk_config(const std::string& path, const std::string& corpus_dir) {
  std::ofstream config(path);
  config << "data.dir = " << corpus_dir << "\n"
         << "data.sample_rate = 8000\n"
         << "model.n_filters = 24\n"
         << "model.conv_layers = (32,10,5)(32,3,2)(32,3,2)(32,3,2)(32,3,1)(32,2,1)(32,2,1)\n"
         << "model.layers = 2\n"
         << "model.heads = 4\n"
         << "model.embed_dim = 64\n"
         << "model.ffn_dim = 192\n"
         << "model.dropout = 0.1\n"
         << "model.layerdrop = 0.0\n"
         << "model.pos_kernel = 19\n"
         << "model.pos_groups = 8\n"
         << "model.decoder_dim = 64\n"
         << "model.decoder_kernel = 7\n"
         << "model.decoder_groups = 4\n"
         << "model.decoder_layers = 2\n"
         << "mask.p = 0.15\n"
         << "mask.M = 2\n"
         << "mask.clones = 2\n"
         << "bcl.token_prob = 1.0\n"
         << "bcl.input_strength = 0.5\n"
         << "bcl.target_strength = 0.5\n"
         << "bcl.window_s = 0.05\n"
         << "pretrain.lr = 0.002\n"
         << "pretrain.warmup_steps = 200\n"
         << "pretrain.total_steps = 4000\n"
         << "pretrain.batch_clips = 3\n"
         << "pretrain.crop_seconds = 1.5\n"
         << "pretrain.tau_start = 0.95\n"
         << "pretrain.tau_end = 0.998\n"
         << "pretrain.tau_anneal = 600\n"
         << "pretrain.checkpoint_every = 500\n"
         << "finetune.lr = 0.002\n"
         << "finetune.warmup_steps = 100\n"
         << "finetune.frozen_steps = 200\n"
         << "finetune.total_steps = 1500\n"
         << "finetune.batch_clips = 4\n"
         << "finetune.crop_seconds = 1.5\n"
         << "finetune.mask.p = 0.02\n"
         << "finetune.mask.M = 4\n"
         << "finetune.bcl.token_prob = 0.25\n"
         << "focal.gamma = 2\n"
         << "corpus.folds = 5\n"
         << "synth.n_clips = 200\n"
         << "synth.clip_seconds = 5.0\n";
}

Result c9_end_to_end(DeskArtifacts& desk) {
  Result r{9, "end-to-end desk run: pretrain, finetune, micro AP >= 0.95"};
  desk.corpus_dir = work_dir() + "/corpus";
  desk.config_path = work_dir() + "/desk.conf";
  write_desk_config(desk.config_path, desk.corpus_dir);

  RunOptions synth;
  synth.config_path = desk.config_path;
  synth.out_dir = desk.corpus_dir;
  synth.seed = 7;
  if (run_synth(synth) != 0) {
    r.detail = "synth failed";
    return r;
  }

  desk.pretrain_dir = work_dir() + "/pretrain";
  RunOptions pretrain;
  pretrain.config_path = desk.config_path;
  pretrain.out_dir = desk.pretrain_dir;
  pretrain.seed = 1;
  if (run_pretrain(pretrain) != 0) {
    r.detail = "pretrain failed";
    return r;
  }

  // Collapse monitor and loss-halving from the training log.
  std::ifstream log(desk.pretrain_dir + "/pretrain.log.jsonl");
  std::string line;
  std::vector<double> losses, collapses;
  while (std::getline(log, line)) {
    const json entry = json::parse(line);
    if (!entry.contains("loss")) continue;
    losses.push_back(entry["loss"].get<double>());
    collapses.push_back(entry["collapse"].get<double>());
  }
  const int64_t warmup = 200;
  double post_warmup = 0.0, final_loss = 0.0;
  for (int64_t i = warmup; i < warmup + 50; ++i) post_warmup += losses[static_cast<size_t>(i)];
  post_warmup /= 50.0;
  for (size_t i = losses.size() - 50; i < losses.size(); ++i) final_loss += losses[i];
  final_loss /= 50.0;
  double min_collapse = 1e300;
  for (size_t i = static_cast<size_t>(warmup); i < collapses.size(); ++i) {
    min_collapse = std::min(min_collapse, collapses[i]);
  }
  desk.pretrain_ok = losses.size() == 4000 && min_collapse > 0.01 &&
                     final_loss <= 0.5 * post_warmup;

  desk.finetune100_dir = work_dir() + "/finetune100";
  RunOptions finetune;
  finetune.config_path = desk.config_path;
  finetune.out_dir = desk.finetune100_dir;
  finetune.seed = 2;
  finetune.checkpoint = desk.pretrain_dir + "/checkpoint_final.ckpt";
  finetune.labels_fraction = 1.0;
  finetune.fold = 0;
  if (run_finetune(finetune) != 0) {
    r.detail = "finetune failed";
    return r;
  }
  const json summary = json::parse(slurp(desk.finetune100_dir + "/summary.json"));
  desk.micro_ap_100 = summary["micro_ap"].get<double>();

  r.pass = desk.pretrain_ok && desk.micro_ap_100 >= 0.95;
  r.detail = "loss " + fmt(post_warmup) + "->" + fmt(final_loss) +
             " min_collapse=" + fmt(min_collapse) +
             " micro_ap=" + fmt(desk.micro_ap_100);
  return r;
}

// --------------------------------------------------------------- criterion 10

Result c10_fewshot(const DeskArtifacts& desk) {
  Result r{10, "few-shot ordering and pretraining gain >= 0.10 AP at 1%"};
  if (desk.pretrain_dir.empty()) {
    r.detail = "skipped: desk pretrain missing";
    return r;
  }
  auto finetune_ap = [&](double fraction, bool pretrained,
                         const std::string& tag) {
    RunOptions options;
    options.config_path = desk.config_path;
    options.out_dir = work_dir() + "/finetune_" + tag;
    options.seed = 2;
    if (pretrained) {
      options.checkpoint = desk.pretrain_dir + "/checkpoint_final.ckpt";
    }
    options.labels_fraction = fraction;
    options.fold = 0;
    if (run_finetune(options) != 0) return -1.0;
    const json summary = json::parse(slurp(options.out_dir + "/summary.json"));
    return summary["micro_ap"].get<double>();
  };
  const double ap_1 = finetune_ap(0.01, true, "p01");
  const double ap_25 = finetune_ap(0.25, true, "p25");
  const double ap_100 = desk.micro_ap_100;
  const double ap_rand = finetune_ap(0.01, false, "rand01");
  r.pass = ap_1 >= 0.0 && ap_25 >= 0.0 && ap_rand >= 0.0 && ap_1 <= ap_25 &&
           ap_25 <= ap_100 && (ap_1 - ap_rand) >= 0.10;
  r.detail = "ap(1%)=" + fmt(ap_1) + " ap(25%)=" + fmt(ap_25) +
             " ap(100%)=" + fmt(ap_100) + " ap(rand,1%)=" + fmt(ap_rand);
  return r;
}

// --------------------------------------------------------------- criterion 11

Result c11_cfr_adaptation() {
  Result r{11, "CFR mass moves into the 800-1200 Hz call band after pretraining"};
  const std::string corpus_dir = work_dir() + "/cfr_corpus";
  const std::string config_path = work_dir() + "/cfr.conf";
  {
    std::ofstream config(config_path);
    std::ifstream base(work_dir() + "/desk.conf");
    std::string line;
    while (std::getline(base, line)) {
      if (line.rfind("data.dir", 0) == 0) continue;
      if (line.rfind("pretrain.total_steps", 0) == 0) continue;
      if (line.rfind("pretrain.warmup_steps", 0) == 0) continue;
      if (line.rfind("pretrain.tau_anneal", 0) == 0) continue;
      if (line.rfind("synth.", 0) == 0) continue;
      config << line << "\n";
    }
    config << "data.dir = " << corpus_dir << "\n"
           << "pretrain.total_steps = 600\n"
           << "pretrain.warmup_steps = 60\n"
           << "pretrain.tau_anneal = 200\n"
           << "synth.n_clips = 80\n"
           << "synth.clip_seconds = 3.0\n"
           << "synth.classes = callband:800:1200:90:250:1.5\n";
  }
  RunOptions synth;
  synth.config_path = config_path;
  synth.out_dir = corpus_dir;
  synth.seed = 9;
  if (run_synth(synth) != 0) {
    r.detail = "synth failed";
    return r;
  }
  RunOptions pretrain;
  pretrain.config_path = config_path;
  pretrain.out_dir = work_dir() + "/cfr_pretrain";
  pretrain.seed = 3;
  if (run_pretrain(pretrain) != 0) {
    r.detail = "pretrain failed";
    return r;
  }

  FrontendConfig fcfg;
  fcfg.n_filters = 24;
  fcfg.sample_rate = 8000;
  auto band_mass = [&](const std::vector<SincFilter>& filters) {
    const int n_bins = 1024;
    const auto cfr = cumulative_frequency_response(filters, 8000.0, n_bins);
    const double df = 4000.0 / (n_bins - 1);
    double mass = 0.0;
    for (int b = 0; b + 1 < n_bins; ++b) {
      const double f = 4000.0 * b / (n_bins - 1);
      if (f >= 800.0 && f < 1200.0) {
        mass += 0.5 * (cfr[static_cast<size_t>(b)] + cfr[static_cast<size_t>(b + 1)]) * df;
      }
    }
    return mass;
  };
  const double init_mass = band_mass(mel_initialize(fcfg));

  const Checkpoint ckpt =
      load_checkpoint(work_dir() + "/cfr_pretrain/checkpoint_final.ckpt");
  const Tensor* f_low = ckpt.find("frontend.sinc.f_low");
  const Tensor* bw = ckpt.find("frontend.sinc.bandwidth");
  std::vector<SincFilter> trained;
  const int k = sinc_kernel_length(8000);
  for (int64_t i = 0; i < f_low->numel(); ++i) {
    trained.push_back({f_low->at(i), bw->at(i), k});
  }
  const double trained_mass = band_mass(trained);
  r.pass = trained_mass > init_mass;
  r.detail = "band mass " + fmt(init_mass) + " -> " + fmt(trained_mass);
  return r;
}

// --------------------------------------------------------------- criterion 12

Result c12_attention(const DeskArtifacts& desk) {
  Result r{12, "attention rows sum to 1; trained map is diagonal-dominant"};
  if (desk.finetune100_dir.empty()) {
    r.detail = "skipped: finetuned checkpoint missing";
    return r;
  }
  RunOptions attention;
  attention.config_path = desk.config_path;
  attention.out_dir = work_dir() + "/attention";
  attention.seed = 4;
  attention.checkpoint = desk.finetune100_dir + "/checkpoint_final.ckpt";
  attention.wav = desk.corpus_dir + "/clip_0000.wav";
  if (run_attention(attention) != 0) {
    r.detail = "attention export failed";
    return r;
  }
  const Checkpoint container =
      load_checkpoint(attention.out_dir + "/attention.bin");
  double worst_row_sum = 0.0;
  const Tensor* averaged = nullptr;
  for (const auto& [name, tensor] : container.arrays) {
    if (name.rfind("attn.", 0) != 0 || tensor.rows() == 0) continue;
    if (name == "attn.averaged") averaged = &tensor;
    for (int64_t i = 0; i < tensor.rows(); ++i) {
      double sum = 0.0;
      for (int64_t j = 0; j < tensor.cols(); ++j) sum += tensor.at(i, j);
      worst_row_sum = std::max(worst_row_sum, std::fabs(sum - 1.0));
    }
  }
  double diag = 0.0, off = 0.0;
  if (averaged != nullptr) {
    const int64_t L = averaged->rows();
    for (int64_t i = 0; i < L; ++i) {
      for (int64_t j = 0; j < L; ++j) {
        (i == j ? diag : off) += averaged->at(i, j);
      }
    }
    diag /= static_cast<double>(L);
    off /= static_cast<double>(L) * static_cast<double>(L - 1);
  }
  r.pass = averaged != nullptr && worst_row_sum < 1e-6 && diag > off;
  r.detail = "worst_row_dev=" + fmt(worst_row_sum) + " mean_diag=" + fmt(diag) +
             " mean_offdiag=" + fmt(off);
  return r;
}

// --------------------------------------------------------------- criterion 13

Result c13_determinism() {
  Result r{13, "byte-identical reruns and checkpoint-resume equivalence"};
  const std::string corpus_dir = work_dir() + "/det_corpus";
  const std::string config_path = work_dir() + "/det.conf";
  {
    std::ofstream config(config_path);
    config << "data.dir = " << corpus_dir << "\n"
           << "model.n_filters = 8\n"
           << "model.conv_layers = (16,10,5)(16,3,2)(16,3,2)(16,3,2)(16,3,1)(16,2,1)(16,2,1)\n"
           << "model.layers = 2\nmodel.heads = 2\nmodel.embed_dim = 32\n"
           << "model.ffn_dim = 64\nmodel.dropout = 0.1\nmodel.layerdrop = 0.1\n"
           << "model.pos_kernel = 5\nmodel.pos_groups = 4\n"
           << "model.decoder_dim = 32\nmodel.decoder_kernel = 3\n"
           << "model.decoder_groups = 2\nmodel.decoder_layers = 1\n"
           << "mask.p = 0.15\nmask.M = 2\nmask.clones = 2\n"
           << "bcl.token_prob = 1.0\n"
           << "pretrain.lr = 0.0005\npretrain.warmup_steps = 5\n"
           << "pretrain.total_steps = 30\npretrain.batch_clips = 2\n"
           << "pretrain.crop_seconds = 1.0\npretrain.checkpoint_every = 10\n"
           << "finetune.lr = 0.001\nfinetune.warmup_steps = 5\n"
           << "finetune.frozen_steps = 10\nfinetune.total_steps = 30\n"
           << "finetune.batch_clips = 2\nfinetune.crop_seconds = 1.0\n"
           << "corpus.folds = 3\n"
           << "synth.n_clips = 9\nsynth.clip_seconds = 2.0\n";
  }
  RunOptions synth;
  synth.config_path = config_path;
  synth.out_dir = corpus_dir;
  synth.seed = 5;
  if (run_synth(synth) != 0) {
    r.detail = "synth failed";
    return r;
  }

  auto pretrain_to = [&](const std::string& out, const std::string& resume) {
    RunOptions options;
    options.config_path = config_path;
    options.out_dir = out;
    options.seed = 6;
    options.resume = resume;
    return run_pretrain(options);
  };
  if (pretrain_to(work_dir() + "/det_a", "") != 0 ||
      pretrain_to(work_dir() + "/det_b", "") != 0) {
    r.detail = "pretrain failed";
    return r;
  }
  const bool logs_equal = slurp(work_dir() + "/det_a/pretrain.log.jsonl") ==
                          slurp(work_dir() + "/det_b/pretrain.log.jsonl");
  const bool ckpt_equal = slurp(work_dir() + "/det_a/checkpoint_final.ckpt") ==
                          slurp(work_dir() + "/det_b/checkpoint_final.ckpt");

  if (pretrain_to(work_dir() + "/det_resume",
                  work_dir() + "/det_a/checkpoint_step00000020.ckpt") != 0) {
    r.detail = "resume failed";
    return r;
  }
  const bool resume_equal =
      slurp(work_dir() + "/det_a/checkpoint_final.ckpt") ==
      slurp(work_dir() + "/det_resume/checkpoint_final.ckpt");

  auto finetune_to = [&](const std::string& out) {
    RunOptions options;
    options.config_path = config_path;
    options.out_dir = out;
    options.seed = 8;
    options.checkpoint = work_dir() + "/det_a/checkpoint_final.ckpt";
    options.fold = 0;
    return run_finetune(options);
  };
  if (finetune_to(work_dir() + "/det_fa") != 0 ||
      finetune_to(work_dir() + "/det_fb") != 0) {
    r.detail = "finetune failed";
    return r;
  }
  const bool metrics_equal =
      slurp(work_dir() + "/det_fa/metrics.csv") ==
          slurp(work_dir() + "/det_fb/metrics.csv") &&
      slurp(work_dir() + "/det_fa/summary.json") ==
          slurp(work_dir() + "/det_fb/summary.json") &&
      slurp(work_dir() + "/det_fa/pr.csv") == slurp(work_dir() + "/det_fb/pr.csv") &&
      slurp(work_dir() + "/det_fa/checkpoint_final.ckpt") ==
          slurp(work_dir() + "/det_fb/checkpoint_final.ckpt");

  r.pass = logs_equal && ckpt_equal && resume_equal && metrics_equal;
  r.detail = std::string("logs=") + (logs_equal ? "ok" : "DIFF") +
             " ckpt=" + (ckpt_equal ? "ok" : "DIFF") +
             " resume=" + (resume_equal ? "ok" : "DIFF") +
             " metrics=" + (metrics_equal ? "ok" : "DIFF");
  return r;
}

}  // namespace

int main() {
  std::vector<Result> results;
  DeskArtifacts desk;
  const auto t_begin = Clock::now();

  auto run = [&](auto&& fn, auto&&... args) {
    const auto t0 = Clock::now();
    Result r;
    try {
      r = fn(args...);
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("[%s] criterion %2d: %s (%s) [%.1f s]\n",
                r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                r.detail.c_str(), r.seconds);
    std::fflush(stdout);
    results.push_back(r);
  };

  run(c1_mask_coverage);
  run(c2_gradient_suite);
  run(c3_ema_closed_form);
  run(c4_shape_law);
  run(c5_pswish_identity);
  run(c6_metrics_oracle);
  run(c7_extraction_exactness);
  run(c8_focal_reductions);
  run([&](DeskArtifacts& d) { return c9_end_to_end(d); }, desk);
  run([&](const DeskArtifacts& d) { return c10_fewshot(d); }, desk);
  run(c11_cfr_adaptation);
  run([&](const DeskArtifacts& d) { return c12_attention(d); }, desk);
  run(c13_determinism);

  // Criterion runtimes that are part of the contract.
  for (auto& r : results) {
    if (r.id == 1 && r.seconds >= 10.0) {
      r.pass = false;
      std::printf("[FAIL] criterion  1 runtime bound: %.1f s >= 10 s\n", r.seconds);
    }
    if (r.id == 2 && r.seconds >= 300.0) {
      r.pass = false;
      std::printf("[FAIL] criterion  2 runtime bound: %.1f s >= 300 s\n", r.seconds);
    }
  }
  double desk_seconds = 0.0;
  for (const auto& r : results) {
    if (r.id >= 9 && r.id <= 11) desk_seconds += r.seconds;
  }
  std::printf("desk-scale runtime (criteria 9-11): %.1f s\n", desk_seconds);

  int failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  const double total = std::chrono::duration<double>(Clock::now() - t_begin).count();
  std::printf("%d/%zu criteria passed in %.1f s\n", static_cast<int>(results.size()) - failed,
              results.size(), total);
  return failed;
}
