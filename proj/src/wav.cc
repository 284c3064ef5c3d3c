#include "a2v/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "a2v/error.h"

namespace a2v {

namespace {

uint32_t read_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

AudioClip load_clip(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(path + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  uint16_t audio_format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  uint32_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    uint32_t chunk_len = read_u32(chunk + 4);
    if (pos + 8 + chunk_len > bytes.size()) {
      throw FormatError(path + ": truncated chunk");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw FormatError(path + ": short fmt chunk");
      audio_format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      sample_rate = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr) {
    throw FormatError(path + ": missing fmt or data chunk");
  }
  if (audio_format != 1 || bits != 16) {
    throw UnsupportedFormatError(path + ": only PCM signed 16-bit supported");
  }
  if (channels != 1) {
    throw UnsupportedFormatError(path + ": only mono supported, got " +
                                 std::to_string(channels) + " channels");
  }
  if (sample_rate == 0) throw FormatError(path + ": zero sample rate");

  AudioClip clip;
  clip.id = std::filesystem::path(path).stem().string();
  clip.source_path = path;
  clip.sample_rate = static_cast<int>(sample_rate);
  const size_t n = data_len / 2;
  clip.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const int16_t raw = static_cast<int16_t>(
        static_cast<uint16_t>(data[2 * i] | (data[2 * i + 1] << 8)));
    clip.samples[i] = static_cast<double>(raw) / 32768.0;
  }
  return clip;
}

void write_wav_pcm16(const std::string& path, const std::vector<double>& samples,
                     int sample_rate) {
  if (sample_rate <= 0) throw ArgumentError("write_wav_pcm16: bad sample rate");
  const uint32_t data_len = static_cast<uint32_t>(samples.size() * 2);
  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(sample_rate));
  put_u32(out, static_cast<uint32_t>(sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_len);
  for (double s : samples) {
    const double clamped = std::clamp(s, -1.0, 1.0);
    const auto q = static_cast<int16_t>(std::lrint(clamped * 32767.0));
    put_u16(out, static_cast<uint16_t>(q));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace a2v
