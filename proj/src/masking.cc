#include "a2v/masking.h"

#include <algorithm>

#include "a2v/error.h"
#include "a2v/rng.h"

namespace a2v {

namespace {

void draw_one(Rng& rng, int64_t frames, double p, int span,
              std::vector<bool>& mask, std::vector<int64_t>& starts) {
  mask.assign(static_cast<size_t>(frames), false);
  starts.clear();
  for (int64_t t = 0; t < frames; ++t) {
    if (rng.uniform() < p) starts.push_back(t);
  }
  for (int64_t s : starts) {
    const int64_t end = std::min<int64_t>(frames, s + span);
    for (int64_t t = s; t < end; ++t) mask[static_cast<size_t>(t)] = true;
  }
}

}  // namespace

MaskPlan sample_mask(int64_t frames, const MaskConfig& config) {
  if (frames < 1) throw ArgumentError("sample_mask: frames must be >= 1");
  if (config.p < 0.0 || config.p > 1.0) throw ArgumentError("sample_mask: p");
  if (config.span_length < 1) throw ArgumentError("sample_mask: M must be >= 1");
  if (config.clones < 1) throw ArgumentError("sample_mask: clones must be >= 1");

  MaskPlan plan;
  plan.masks.resize(static_cast<size_t>(config.clones));
  plan.starts.resize(static_cast<size_t>(config.clones));
  Rng base(config.seed);
  for (int c = 0; c < config.clones; ++c) {
    Rng rng = base.split(static_cast<uint64_t>(c));
    auto& mask = plan.masks[static_cast<size_t>(c)];
    auto& starts = plan.starts[static_cast<size_t>(c)];
    draw_one(rng, frames, config.p, config.span_length, mask, starts);
    if (starts.empty() && config.p > 0.0) {
      // One redraw keeps regression targets non-degenerate without
      // materially biasing coverage.
      draw_one(rng, frames, config.p, config.span_length, mask, starts);
    }
  }
  return plan;
}

MaskStatistics mask_statistics(const MaskPlan& plan, double frame_ms) {
  if (plan.masks.empty() || plan.frames() == 0) {
    throw ArgumentError("mask_statistics: empty plan");
  }
  MaskStatistics stats;
  const int64_t T = plan.frames();
  int64_t masked_total = 0;
  std::vector<bool> any(static_cast<size_t>(T), false);
  for (const auto& mask : plan.masks) {
    int64_t run = 0;
    for (int64_t t = 0; t < T; ++t) {
      if (mask[static_cast<size_t>(t)]) {
        ++masked_total;
        ++run;
        any[static_cast<size_t>(t)] = true;
      } else if (run > 0) {
        stats.run_length_histogram[run] += 1;
        run = 0;
      }
    }
    if (run > 0) stats.run_length_histogram[run] += 1;
  }
  stats.coverage = static_cast<double>(masked_total) /
                   (static_cast<double>(T) * static_cast<double>(plan.masks.size()));
  stats.union_coverage =
      static_cast<double>(std::count(any.begin(), any.end(), true)) /
      static_cast<double>(T);
  int64_t mode_run = 0, mode_count = -1;
  for (const auto& [run, count] : stats.run_length_histogram) {
    if (count > mode_count) {
      mode_count = count;
      mode_run = run;
    }
  }
  stats.mode_ms = static_cast<double>(mode_run) * frame_ms;
  return stats;
}

std::vector<int64_t> kept_indices(const std::vector<bool>& mask) {
  std::vector<int64_t> idx;
  for (size_t t = 0; t < mask.size(); ++t) {
    if (!mask[t]) idx.push_back(static_cast<int64_t>(t));
  }
  return idx;
}

std::vector<int64_t> masked_indices(const std::vector<bool>& mask) {
  std::vector<int64_t> idx;
  for (size_t t = 0; t < mask.size(); ++t) {
    if (mask[t]) idx.push_back(static_cast<int64_t>(t));
  }
  return idx;
}

std::pair<Tensor, std::vector<int64_t>> apply_mask_student(
    const Tensor& frames, const std::vector<bool>& mask) {
  if (static_cast<int64_t>(mask.size()) != frames.rows()) {
    throw ShapeError("apply_mask_student: mask length mismatch");
  }
  auto idx = kept_indices(mask);
  if (idx.empty()) {
    throw ArgumentError("apply_mask_student: all frames masked");
  }
  const int64_t d = frames.cols();
  Tensor kept({static_cast<int64_t>(idx.size()), d}, 0.0);
  for (size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(frames.data() + idx[i] * d, d,
                kept.data() + static_cast<int64_t>(i) * d);
  }
  return {std::move(kept), std::move(idx)};
}

Tensor fill_masked_noise(const Tensor& frames, const std::vector<bool>& mask,
                         uint64_t seed) {
  if (static_cast<int64_t>(mask.size()) != frames.rows()) {
    throw ShapeError("fill_masked_noise: mask length mismatch");
  }
  Tensor out = frames;
  Rng rng(seed);
  const int64_t d = frames.cols();
  for (int64_t t = 0; t < frames.rows(); ++t) {
    if (!mask[static_cast<size_t>(t)]) continue;
    for (int64_t j = 0; j < d; ++j) out.at(t, j) = rng.normal();
  }
  return out;
}

}  // namespace a2v
