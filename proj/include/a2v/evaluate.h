#ifndef A2V_EVALUATE_H_
#define A2V_EVALUATE_H_

#include <map>
#include <tuple>
#include <vector>

#include "a2v/labels.h"
#include "a2v/tensor.h"

namespace a2v {

struct EventPrediction {
  int class_id = 0;
  double onset_s = 0.0;
  double offset_s = 0.0;
  double likelihood = 0.0;
};

struct Interval {
  double onset_s = 0.0;
  double offset_s = 0.0;
};

// |a intersect b| / |a union b|; 0 when disjoint.
double iou(const Interval& a, const Interval& b);

// Moving average of width round(pool_width_s * frame_rate) frames (window
// truncated and renormalized at the edges), binarized strictly above
// threshold; maximal runs become events. onset = run start frame time,
// offset = run end frame time + one frame period. The likelihood carried by
// an event is the mean of the raw (unpooled) trace inside the run.
std::vector<EventPrediction> extract_events(const std::vector<double>& likelihoods,
                                            double frame_rate,
                                            double pool_width_s,
                                            double threshold, int class_id);

struct MatchResult {
  std::vector<std::tuple<EventPrediction, LabelEvent, double>> true_positives;
  std::vector<EventPrediction> false_positives;
  std::vector<LabelEvent> false_negatives;
};

// Greedy one-to-one matching in descending IOU order; pairs with
// IOU > iou_min become true positives.
MatchResult match_events(const std::vector<EventPrediction>& predictions,
                         const std::vector<LabelEvent>& truth, int class_id,
                         double iou_min);

// Scored detections pooled over clips (and over classes for the micro
// average): final likelihood plus whether the detection was matched.
struct DetectionPool {
  std::vector<std::pair<double, bool>> scored;  // (likelihood, is_tp)
  int64_t n_truth = 0;

  void add(const MatchResult& match);
  void merge(const DetectionPool& other);
};

struct PRPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct PRCurve {
  std::vector<PRPoint> points;
  double ap = 0.0;
};

// One point per distinct observed likelihood (threshold inclusive:
// detections with likelihood >= threshold count). AP by interpolated
// precision at n_levels evenly spaced recall levels.
PRCurve pr_curve(const DetectionPool& pool, int n_levels = 101);
double average_precision(const PRCurve& curve, int n_levels = 101);

struct AggregateResult {
  PRCurve micro;
  double macro_ap = 0.0;
};

// Micro: pool detections of all non-focal classes; macro: unweighted mean of
// non-focal class APs.
AggregateResult aggregate(const std::map<int, DetectionPool>& per_class,
                          const ClassTable& table, int n_levels = 101);

struct FrameScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// A frame counts as predicted-positive when any class exceeds the threshold
// and truth-positive when any class bit is set.
FrameScores frame_binary_scores(const Tensor& likelihoods,
                                const FrameTargets& truth, double threshold);

}  // namespace a2v

#endif  // A2V_EVALUATE_H_
