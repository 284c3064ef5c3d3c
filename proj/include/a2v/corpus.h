#ifndef A2V_CORPUS_H_
#define A2V_CORPUS_H_

#include <map>
#include <string>
#include <vector>

#include "a2v/audio.h"
#include "a2v/labels.h"

namespace a2v {

// In-memory dataset: every WAV under audio_dir (sorted by id), resampled to
// sample_rate, plus the label manifest and class table.
struct Corpus {
  ClassTable table;
  std::vector<std::string> ids;
  std::map<std::string, AudioClip> clips;
  LabelManifest labels;
  int sample_rate = 0;

  const AudioClip& clip(const std::string& id) const;
  // Events of a clip; empty when the clip has none.
  const std::vector<LabelEvent>& events_of(const std::string& id) const;

  // workers = 0 loads sequentially; > 0 preloads clips on that many threads
  // (results land in fixed slots, so contents do not depend on scheduling).
  static Corpus load(const std::string& audio_dir,
                     const std::string& manifest_path,
                     const std::string& classes_path, int sample_rate,
                     int workers);
};

}  // namespace a2v

#endif  // A2V_CORPUS_H_
