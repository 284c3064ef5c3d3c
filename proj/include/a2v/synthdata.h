#ifndef A2V_SYNTHDATA_H_
#define A2V_SYNTHDATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "a2v/labels.h"

namespace a2v {

// One synthetic call class: band-limited chirped tone bursts with a Hann
// envelope, drawn duration, and a mean number of calls per clip.
struct SynthClass {
  std::string name;
  double band_lo_hz = 0.0;
  double band_hi_hz = 0.0;
  double dur_lo_ms = 80.0;
  double dur_hi_ms = 300.0;
  double calls_per_clip = 1.0;  // Poisson mean
};

struct SynthSpec {
  int n_clips = 240;
  double clip_s = 5.0;
  int sample_rate = 8000;
  std::vector<SynthClass> classes;
  // Broadband impulsive noise bursts (foraging-style clutter).
  double bursts_per_clip = 6.0;
  double burst_ms = 12.0;
  double burst_amplitude = 0.15;
  double background_rms = 0.01;
  double call_amplitude_lo = 0.35;
  double call_amplitude_hi = 0.60;
  uint64_t seed = 7;

  // Three well-separated bands, ~7% labeled duration at the default rates.
  static SynthSpec defaults();
};

struct SynthResult {
  std::vector<std::string> clip_ids;
  int64_t n_events = 0;
};

// Writes <out_dir>/clip_XXXX.wav, <out_dir>/manifest.csv and
// <out_dir>/classes.txt. Regeneration with the same spec is byte-identical.
SynthResult generate(const SynthSpec& spec, const std::string& out_dir);

// Manifest rows for one clip without touching the disk (unit-test hook).
std::vector<LabelEvent> synth_clip(const SynthSpec& spec, int clip_index,
                                   std::vector<double>& samples);

}  // namespace a2v

#endif  // A2V_SYNTHDATA_H_
