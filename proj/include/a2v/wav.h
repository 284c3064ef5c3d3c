#ifndef A2V_WAV_H_
#define A2V_WAV_H_

#include <string>
#include <vector>

#include "a2v/audio.h"

namespace a2v {

// Reads a RIFF/WAVE file. Only PCM signed 16-bit little-endian mono is
// accepted; anything else raises UnsupportedFormatError (no silent downmix).
// The clip id is the file stem.
AudioClip load_clip(const std::string& path);

// Writes mono PCM16 (values clamped to [-1, 1], scaled by 32767).
void write_wav_pcm16(const std::string& path, const std::vector<double>& samples,
                     int sample_rate);

}  // namespace a2v

#endif  // A2V_WAV_H_
