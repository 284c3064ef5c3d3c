#include "a2v/split.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "a2v/error.h"
#include "a2v/rng.h"

namespace a2v {

std::vector<std::string> SplitPlan::fold_ids(int fold) const {
  std::vector<std::string> out;
  for (const auto& [id, f] : fold_assignments) {
    if (f == fold) out.push_back(id);
  }
  return out;
}

std::vector<std::string> SplitPlan::complement_ids(int fold) const {
  std::vector<std::string> out;
  for (const auto& [id, f] : fold_assignments) {
    if (f != fold) out.push_back(id);
  }
  return out;
}

SplitPlan stratified_kfold(const ClipLabels& clips, int k, uint64_t seed) {
  if (k < 2) throw ArgumentError("stratified_kfold: k must be >= 2");
  if (static_cast<int>(clips.size()) < k) {
    throw ArgumentError("stratified_kfold: fewer clips than folds");
  }

  // Work on ids sorted for determinism regardless of caller order.
  std::vector<int> order(clips.size());
  for (size_t i = 0; i < clips.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return clips[static_cast<size_t>(a)].first < clips[static_cast<size_t>(b)].first;
  });

  int n_labels = 0;
  for (const auto& [id, labels] : clips) {
    for (int l : labels) n_labels = std::max(n_labels, l + 1);
  }

  // Remaining desired examples per (label, fold) and per fold.
  std::vector<double> label_count(static_cast<size_t>(n_labels), 0.0);
  for (const auto& [id, labels] : clips) {
    for (int l : labels) label_count[static_cast<size_t>(l)] += 1.0;
  }
  std::vector<std::vector<double>> desire(
      static_cast<size_t>(n_labels),
      std::vector<double>(static_cast<size_t>(k), 0.0));
  for (int l = 0; l < n_labels; ++l) {
    for (int f = 0; f < k; ++f) {
      desire[static_cast<size_t>(l)][static_cast<size_t>(f)] =
          label_count[static_cast<size_t>(l)] / k;
    }
  }
  std::vector<double> capacity(static_cast<size_t>(k),
                               static_cast<double>(clips.size()) / k);

  Rng rng(seed);
  std::vector<int> assignment(clips.size(), -1);
  std::vector<bool> assigned(clips.size(), false);

  // Count of unassigned clips per label.
  std::vector<int> remaining(static_cast<size_t>(n_labels), 0);
  for (const auto& [id, labels] : clips) {
    std::set<int> uniq(labels.begin(), labels.end());
    for (int l : uniq) remaining[static_cast<size_t>(l)] += 1;
  }

  auto pick_fold = [&](const std::vector<double>* lab_desire) {
    double best_primary = -1e300;
    std::vector<int> tied;
    for (int f = 0; f < k; ++f) {
      const double primary =
          lab_desire ? (*lab_desire)[static_cast<size_t>(f)]
                     : capacity[static_cast<size_t>(f)];
      if (primary > best_primary + 1e-12) {
        best_primary = primary;
        tied = {f};
      } else if (primary > best_primary - 1e-12) {
        tied.push_back(f);
      }
    }
    if (tied.size() > 1 && lab_desire) {
      // Break by largest remaining fold capacity.
      double best_cap = -1e300;
      std::vector<int> tied2;
      for (int f : tied) {
        const double c = capacity[static_cast<size_t>(f)];
        if (c > best_cap + 1e-12) {
          best_cap = c;
          tied2 = {f};
        } else if (c > best_cap - 1e-12) {
          tied2.push_back(f);
        }
      }
      tied = tied2;
    }
    return tied[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(tied.size())))];
  };

  auto commit = [&](int clip_idx, int fold) {
    assignment[static_cast<size_t>(clip_idx)] = fold;
    assigned[static_cast<size_t>(clip_idx)] = true;
    capacity[static_cast<size_t>(fold)] -= 1.0;
    const auto& labels = clips[static_cast<size_t>(clip_idx)].second;
    std::set<int> uniq(labels.begin(), labels.end());
    for (int l : uniq) {
      desire[static_cast<size_t>(l)][static_cast<size_t>(fold)] -= 1.0;
      remaining[static_cast<size_t>(l)] -= 1;
    }
  };

  // Rarest label first, then every unassigned clip carrying it.
  while (true) {
    int best_label = -1;
    for (int l = 0; l < n_labels; ++l) {
      if (remaining[static_cast<size_t>(l)] <= 0) continue;
      if (best_label < 0 ||
          remaining[static_cast<size_t>(l)] < remaining[static_cast<size_t>(best_label)]) {
        best_label = l;
      }
    }
    if (best_label < 0) break;
    for (int idx : order) {
      if (assigned[static_cast<size_t>(idx)]) continue;
      const auto& labels = clips[static_cast<size_t>(idx)].second;
      if (std::find(labels.begin(), labels.end(), best_label) == labels.end()) {
        continue;
      }
      commit(idx, pick_fold(&desire[static_cast<size_t>(best_label)]));
    }
  }

  // Label-free clips go to folds with the most remaining room.
  for (int idx : order) {
    if (!assigned[static_cast<size_t>(idx)]) commit(idx, pick_fold(nullptr));
  }

  SplitPlan plan;
  plan.k = k;
  for (size_t i = 0; i < clips.size(); ++i) {
    plan.fold_assignments[clips[i].first] = assignment[i];
  }
  return plan;
}

std::vector<std::string> fewshot_subsample(
    const std::vector<std::string>& train_ids,
    const std::map<std::string, std::vector<int>>& labels_by_id,
    double fraction, uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0) {
    throw ArgumentError("fewshot_subsample: fraction must be in (0, 1]");
  }
  if (train_ids.empty()) {
    throw ArgumentError("fewshot_subsample: empty training split");
  }
  std::vector<std::string> ids = train_ids;
  std::sort(ids.begin(), ids.end());
  if (fraction == 1.0) return ids;

  const int64_t n = static_cast<int64_t>(ids.size());
  int64_t target_total = std::max<int64_t>(1, std::llround(fraction * static_cast<double>(n)));

  int n_labels = 0;
  for (const auto& id : ids) {
    auto it = labels_by_id.find(id);
    if (it == labels_by_id.end()) continue;
    for (int l : it->second) n_labels = std::max(n_labels, l + 1);
  }

  // Per-class clip counts within the split (clip counted once per class).
  std::vector<int64_t> class_count(static_cast<size_t>(n_labels), 0);
  std::vector<std::vector<int>> clips_of_class(static_cast<size_t>(n_labels));
  for (size_t i = 0; i < ids.size(); ++i) {
    auto it = labels_by_id.find(ids[i]);
    if (it == labels_by_id.end()) continue;
    std::set<int> uniq(it->second.begin(), it->second.end());
    for (int l : uniq) {
      class_count[static_cast<size_t>(l)] += 1;
      clips_of_class[static_cast<size_t>(l)].push_back(static_cast<int>(i));
    }
  }

  // floor + largest remainder, minimum 1 for every nonempty class.
  std::vector<int64_t> target(static_cast<size_t>(n_labels), 0);
  std::vector<std::pair<double, int>> remainders;
  int64_t floor_sum = 0;
  for (int l = 0; l < n_labels; ++l) {
    if (class_count[static_cast<size_t>(l)] == 0) continue;
    const double exact = fraction * static_cast<double>(class_count[static_cast<size_t>(l)]);
    target[static_cast<size_t>(l)] = static_cast<int64_t>(std::floor(exact));
    remainders.push_back({exact - std::floor(exact), l});
    floor_sum += target[static_cast<size_t>(l)];
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  // Distribute leftover so class totals round like the overall fraction.
  double exact_sum = 0.0;
  for (int l = 0; l < n_labels; ++l) {
    if (class_count[static_cast<size_t>(l)] > 0) {
      exact_sum += fraction * static_cast<double>(class_count[static_cast<size_t>(l)]);
    }
  }
  int64_t leftover = std::llround(exact_sum) - floor_sum;
  for (int64_t i = 0; i < leftover && i < static_cast<int64_t>(remainders.size()); ++i) {
    target[static_cast<size_t>(remainders[static_cast<size_t>(i)].second)] += 1;
  }
  for (int l = 0; l < n_labels; ++l) {
    if (class_count[static_cast<size_t>(l)] > 0) {
      target[static_cast<size_t>(l)] = std::max<int64_t>(1, target[static_cast<size_t>(l)]);
    }
  }

  Rng rng(seed);
  std::vector<bool> selected(ids.size(), false);
  std::vector<int64_t> have(static_cast<size_t>(n_labels), 0);

  // Rarest class first so scarce classes are not crowded out.
  std::vector<int> class_order;
  for (int l = 0; l < n_labels; ++l) {
    if (class_count[static_cast<size_t>(l)] > 0) class_order.push_back(l);
  }
  std::sort(class_order.begin(), class_order.end(), [&](int a, int b) {
    if (class_count[static_cast<size_t>(a)] != class_count[static_cast<size_t>(b)])
      return class_count[static_cast<size_t>(a)] < class_count[static_cast<size_t>(b)];
    return a < b;
  });

  auto labels_of = [&](size_t idx) {
    std::set<int> uniq;
    auto it = labels_by_id.find(ids[idx]);
    if (it != labels_by_id.end()) uniq.insert(it->second.begin(), it->second.end());
    return uniq;
  };

  for (int l : class_order) {
    auto candidates = clips_of_class[static_cast<size_t>(l)];
    // Seeded shuffle; selection within a class is otherwise unbiased.
    for (size_t i = candidates.size(); i > 1; --i) {
      std::swap(candidates[i - 1],
                candidates[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(i)))]);
    }
    for (int idx : candidates) {
      if (have[static_cast<size_t>(l)] >= target[static_cast<size_t>(l)]) break;
      if (selected[static_cast<size_t>(idx)]) continue;
      selected[static_cast<size_t>(idx)] = true;
      for (int lab : labels_of(static_cast<size_t>(idx))) {
        have[static_cast<size_t>(lab)] += 1;
      }
    }
  }

  // Top up with unlabeled / leftover clips toward the overall target size.
  int64_t selected_count = static_cast<int64_t>(
      std::count(selected.begin(), selected.end(), true));
  if (selected_count < target_total) {
    std::vector<int> pool;
    for (size_t i = 0; i < ids.size(); ++i) {
      if (!selected[i]) pool.push_back(static_cast<int>(i));
    }
    for (size_t i = pool.size(); i > 1; --i) {
      std::swap(pool[i - 1],
                pool[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(i)))]);
    }
    for (int idx : pool) {
      if (selected_count >= target_total) break;
      selected[static_cast<size_t>(idx)] = true;
      ++selected_count;
    }
  }

  std::vector<std::string> out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (selected[i]) out.push_back(ids[i]);
  }
  if (out.empty()) throw ArgumentError("fewshot_subsample: empty subset");
  return out;
}

}  // namespace a2v
