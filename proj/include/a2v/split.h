#ifndef A2V_SPLIT_H_
#define A2V_SPLIT_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace a2v {

// k-fold assignment over clip ids; folds partition the clip set.
struct SplitPlan {
  std::map<std::string, int> fold_assignments;
  int k = 0;
  double fraction = 1.0;

  std::vector<std::string> fold_ids(int fold) const;
  std::vector<std::string> complement_ids(int fold) const;  // training split
};

// A clip and the multiset of class ids of its events.
using ClipLabels = std::vector<std::pair<std::string, std::vector<int>>>;

// Iterative stratification (rarest-label-first) for multi-label k-fold
// cross-validation. Deterministic for a fixed seed.
SplitPlan stratified_kfold(const ClipLabels& clips, int k, uint64_t seed);

// Stratified few-shot subset of a training split: about round(fraction * N)
// clips, per-class proportions preserved by floor + largest remainder, with
// at least one clip kept for every class present in the split.
std::vector<std::string> fewshot_subsample(
    const std::vector<std::string>& train_ids,
    const std::map<std::string, std::vector<int>>& labels_by_id,
    double fraction, uint64_t seed);

}  // namespace a2v

#endif  // A2V_SPLIT_H_
