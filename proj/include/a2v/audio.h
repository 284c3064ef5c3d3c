#ifndef A2V_AUDIO_H_
#define A2V_AUDIO_H_

#include <cstdint>
#include <string>
#include <vector>

namespace a2v {

// Mono PCM waveform. Samples are amplitudes in [-1, 1] (PCM16 value / 32768).
struct AudioClip {
  std::string id;
  std::vector<double> samples;
  int sample_rate = 0;
  std::string source_path;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

}  // namespace a2v

#endif  // A2V_AUDIO_H_
