#ifndef A2V_LABELS_H_
#define A2V_LABELS_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "a2v/tensor.h"

namespace a2v {

// Interval annotation. focal marks calls produced by the collar wearer.
struct LabelEvent {
  int class_id = 0;
  double onset_s = 0.0;
  double offset_s = 0.0;
  bool focal = false;

  bool operator==(const LabelEvent&) const = default;
};

// Ordered class names; focal_index (if any) names the superordinate focal
// class, which is excluded from micro/macro metric averages.
struct ClassTable {
  std::vector<std::string> names;
  std::optional<int> focal_index;

  int size() const { return static_cast<int>(names.size()); }
  int index_of(const std::string& name) const;  // -1 when absent
  bool is_focal(int class_id) const {
    return focal_index && *focal_index == class_id;
  }

  // One name per line; an optional "#focal=<name>" line designates the
  // focal class. Throws on duplicates or empty tables.
  static ClassTable load(const std::string& path);
  static ClassTable parse(const std::string& text, const std::string& origin);
  void save(const std::string& path) const;
};

// T x C binary matrix on the frame grid (one row per frame).
struct FrameTargets {
  Tensor frames;
  double frame_rate = 0.0;
};

// Label manifest rows grouped by clip id, each group sorted by onset.
using LabelManifest = std::map<std::string, std::vector<LabelEvent>>;

// CSV schema: clip_id,class,onset_s,offset_s,focal. Errors carry the
// offending 1-based row number.
LabelManifest load_label_manifest(const std::string& path,
                                  const ClassTable& table);
LabelManifest parse_label_manifest(const std::string& text,
                                   const ClassTable& table,
                                   const std::string& origin);

// All events of a manifest regardless of clip, sorted by onset. Convenience
// form for single-clip manifests.
std::vector<LabelEvent> load_labels(const std::string& path,
                                    const ClassTable& table);

std::string serialize_label_manifest(const LabelManifest& manifest,
                                     const ClassTable& table);
void save_label_manifest(const std::string& path, const LabelManifest& manifest,
                         const ClassTable& table);

// Fixed-point seconds with >= 3 fractional digits, shortest representation
// that parses back to the same double.
std::string format_seconds(double s);

// Frame t (center (t+0.5)/frame_rate) gets a 1 for class c iff the center
// lies inside an event of class c; a focal event additionally sets the focal
// column when the table has one. Events outside [0, duration_s] are label
// errors.
FrameTargets frame_targets(const std::vector<LabelEvent>& events,
                           double duration_s, double frame_rate,
                           const ClassTable& table);

}  // namespace a2v

#endif  // A2V_LABELS_H_
