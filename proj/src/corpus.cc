#include "a2v/corpus.h"

#include <algorithm>
#include <filesystem>
#include <thread>

#include "a2v/error.h"
#include "a2v/resample.h"
#include "a2v/wav.h"

namespace a2v {

const AudioClip& Corpus::clip(const std::string& id) const {
  auto it = clips.find(id);
  if (it == clips.end()) throw StateError("unknown clip id " + id);
  return it->second;
}

const std::vector<LabelEvent>& Corpus::events_of(const std::string& id) const {
  static const std::vector<LabelEvent> empty;
  auto it = labels.find(id);
  return it == labels.end() ? empty : it->second;
}

Corpus Corpus::load(const std::string& audio_dir,
                    const std::string& manifest_path,
                    const std::string& classes_path, int sample_rate,
                    int workers) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(audio_dir)) {
    throw FormatError("audio dir not found: " + audio_dir);
  }
  Corpus corpus;
  corpus.sample_rate = sample_rate;
  corpus.table = ClassTable::load(classes_path);
  corpus.labels = load_label_manifest(manifest_path, corpus.table);

  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(audio_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw FormatError("no .wav files in " + audio_dir);

  std::vector<AudioClip> loaded(paths.size());
  auto load_range = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      AudioClip clip = load_clip(paths[i]);
      if (clip.sample_rate != sample_rate) clip = resample(clip, sample_rate);
      loaded[i] = std::move(clip);
    }
  };
  if (workers <= 1) {
    load_range(0, paths.size());
  } else {
    const size_t n = paths.size();
    const size_t per = (n + static_cast<size_t>(workers) - 1) /
                       static_cast<size_t>(workers);
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
      const size_t begin = static_cast<size_t>(w) * per;
      const size_t end = std::min(n, begin + per);
      if (begin >= end) break;
      threads.emplace_back(load_range, begin, end);
    }
    for (auto& t : threads) t.join();
  }
  for (auto& clip : loaded) {
    corpus.ids.push_back(clip.id);
    corpus.clips.emplace(clip.id, std::move(clip));
  }
  return corpus;
}

}  // namespace a2v
