#include "a2v/evaluate.h"

#include <algorithm>
#include <cmath>

#include "a2v/error.h"

namespace a2v {

double iou(const Interval& a, const Interval& b) {
  const double inter =
      std::max(0.0, std::min(a.offset_s, b.offset_s) - std::max(a.onset_s, b.onset_s));
  if (inter <= 0.0) return 0.0;
  const double uni = (a.offset_s - a.onset_s) + (b.offset_s - b.onset_s) - inter;
  return inter / uni;
}

std::vector<EventPrediction> extract_events(const std::vector<double>& likelihoods,
                                            double frame_rate,
                                            double pool_width_s,
                                            double threshold, int class_id) {
  const int64_t T = static_cast<int64_t>(likelihoods.size());
  if (T < 1) throw ArgumentError("extract_events: empty trace");
  if (threshold <= 0.0 || threshold >= 1.0) {
    throw ArgumentError("extract_events: threshold must be in (0,1)");
  }
  const int64_t width = std::max<int64_t>(
      1, static_cast<int64_t>(std::llround(pool_width_s * frame_rate)));
  // Window [t - floor((w-1)/2), t + floor(w/2)], truncated at the edges.
  const int64_t left = (width - 1) / 2;
  const int64_t right = width / 2;

  std::vector<bool> active(static_cast<size_t>(T), false);
  for (int64_t t = 0; t < T; ++t) {
    const int64_t lo = std::max<int64_t>(0, t - left);
    const int64_t hi = std::min<int64_t>(T - 1, t + right);
    double acc = 0.0;
    for (int64_t j = lo; j <= hi; ++j) acc += likelihoods[static_cast<size_t>(j)];
    const double pooled = acc / static_cast<double>(hi - lo + 1);
    active[static_cast<size_t>(t)] = pooled > threshold;
  }

  std::vector<EventPrediction> events;
  int64_t run_start = -1;
  for (int64_t t = 0; t <= T; ++t) {
    const bool on = t < T && active[static_cast<size_t>(t)];
    if (on && run_start < 0) {
      run_start = t;
    } else if (!on && run_start >= 0) {
      EventPrediction ev;
      ev.class_id = class_id;
      ev.onset_s = static_cast<double>(run_start) / frame_rate;
      ev.offset_s = static_cast<double>(t) / frame_rate;
      double mean = 0.0;
      for (int64_t j = run_start; j < t; ++j) mean += likelihoods[static_cast<size_t>(j)];
      ev.likelihood = mean / static_cast<double>(t - run_start);
      events.push_back(ev);
      run_start = -1;
    }
  }
  return events;
}

MatchResult match_events(const std::vector<EventPrediction>& predictions,
                         const std::vector<LabelEvent>& truth, int class_id,
                         double iou_min) {
  MatchResult result;
  std::vector<std::tuple<double, size_t, size_t>> pairs;  // (iou, pred, truth)
  for (size_t pi = 0; pi < predictions.size(); ++pi) {
    if (predictions[pi].class_id != class_id) continue;
    for (size_t ti = 0; ti < truth.size(); ++ti) {
      if (truth[ti].class_id != class_id) continue;
      const double overlap =
          iou({predictions[pi].onset_s, predictions[pi].offset_s},
              {truth[ti].onset_s, truth[ti].offset_s});
      if (overlap > iou_min) pairs.emplace_back(overlap, pi, ti);
    }
  }
  // Descending IOU; ties resolved by prediction then truth order so the
  // matching is deterministic.
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  std::vector<bool> pred_used(predictions.size(), false);
  std::vector<bool> truth_used(truth.size(), false);
  for (const auto& [overlap, pi, ti] : pairs) {
    if (pred_used[pi] || truth_used[ti]) continue;
    pred_used[pi] = true;
    truth_used[ti] = true;
    result.true_positives.emplace_back(predictions[pi], truth[ti], overlap);
  }
  for (size_t pi = 0; pi < predictions.size(); ++pi) {
    if (predictions[pi].class_id != class_id) continue;
    if (!pred_used[pi]) result.false_positives.push_back(predictions[pi]);
  }
  for (size_t ti = 0; ti < truth.size(); ++ti) {
    if (truth[ti].class_id != class_id) continue;
    if (!truth_used[ti]) result.false_negatives.push_back(truth[ti]);
  }
  return result;
}

void DetectionPool::add(const MatchResult& match) {
  for (const auto& [pred, gt, overlap] : match.true_positives) {
    scored.emplace_back(pred.likelihood, true);
    ++n_truth;
  }
  for (const auto& pred : match.false_positives) {
    scored.emplace_back(pred.likelihood, false);
  }
  n_truth += static_cast<int64_t>(match.false_negatives.size());
}

void DetectionPool::merge(const DetectionPool& other) {
  scored.insert(scored.end(), other.scored.begin(), other.scored.end());
  n_truth += other.n_truth;
}

PRCurve pr_curve(const DetectionPool& pool, int n_levels) {
  if (pool.n_truth <= 0) {
    throw MetricError("pr_curve: no ground-truth events, AP undefined");
  }
  auto scored = pool.scored;
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first > b.first;
  });
  PRCurve curve;
  int64_t tp = 0, fp = 0;
  for (size_t i = 0; i < scored.size(); ++i) {
    if (scored[i].second) {
      ++tp;
    } else {
      ++fp;
    }
    // Emit one point per distinct threshold (inclusive).
    if (i + 1 < scored.size() && scored[i + 1].first == scored[i].first) continue;
    PRPoint point;
    point.threshold = scored[i].first;
    point.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    point.recall = static_cast<double>(tp) / static_cast<double>(pool.n_truth);
    curve.points.push_back(point);
  }
  curve.ap = average_precision(curve, n_levels);
  return curve;
}

double average_precision(const PRCurve& curve, int n_levels) {
  if (n_levels < 2) throw ArgumentError("average_precision: n_levels >= 2");
  double acc = 0.0;
  for (int level = 0; level < n_levels; ++level) {
    const double r = static_cast<double>(level) / (n_levels - 1);
    double best = 0.0;
    for (const auto& point : curve.points) {
      if (point.recall >= r - 1e-12) best = std::max(best, point.precision);
    }
    acc += best;
  }
  return acc / static_cast<double>(n_levels);
}

AggregateResult aggregate(const std::map<int, DetectionPool>& per_class,
                          const ClassTable& table, int n_levels) {
  AggregateResult result;
  DetectionPool pooled;
  double ap_sum = 0.0;
  int n_classes = 0;
  for (const auto& [class_id, pool] : per_class) {
    if (table.is_focal(class_id)) continue;
    pooled.merge(pool);
    if (pool.n_truth > 0) {
      ap_sum += pr_curve(pool, n_levels).ap;
      ++n_classes;
    }
  }
  if (n_classes == 0) {
    throw MetricError("aggregate: no non-focal class with ground truth");
  }
  result.micro = pr_curve(pooled, n_levels);
  result.macro_ap = ap_sum / static_cast<double>(n_classes);
  return result;
}

FrameScores frame_binary_scores(const Tensor& likelihoods,
                                const FrameTargets& truth, double threshold) {
  if (!likelihoods.same_shape(truth.frames)) {
    throw ShapeError("frame_binary_scores: shape mismatch");
  }
  const int64_t T = likelihoods.rows(), C = likelihoods.cols();
  int64_t tp = 0, fp = 0, fn = 0;
  for (int64_t t = 0; t < T; ++t) {
    bool pred = false, pos = false;
    for (int64_t c = 0; c < C; ++c) {
      pred = pred || likelihoods.at(t, c) > threshold;
      pos = pos || truth.frames.at(t, c) > 0.5;
    }
    if (pred && pos) ++tp;
    if (pred && !pos) ++fp;
    if (!pred && pos) ++fn;
  }
  FrameScores scores;
  scores.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp);
  scores.recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / (tp + fn);
  scores.f1 = (scores.precision + scores.recall) == 0.0
                  ? 0.0
                  : 2.0 * scores.precision * scores.recall /
                        (scores.precision + scores.recall);
  return scores;
}

}  // namespace a2v
