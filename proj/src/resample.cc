#include "a2v/resample.h"

#include <cmath>
#include <numeric>
#include <vector>

#include "a2v/dsp.h"
#include "a2v/error.h"

namespace a2v {

namespace {
constexpr double kKaiserBeta = 14.77;
constexpr double kSupportSeconds = 0.008;
}  // namespace

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw ArgumentError("resample: target_rate must be > 0");
  if (target_rate == clip.sample_rate) return clip;

  const int64_t src = clip.sample_rate;
  const int64_t dst = target_rate;
  const int64_t g = std::gcd(src, dst);
  const int64_t up = dst / g;
  const int64_t down = src / g;

  // Half-width in source samples; full kernel support is kSupportSeconds.
  const int64_t half =
      std::max<int64_t>(1, static_cast<int64_t>(std::ceil(
                               0.5 * kSupportSeconds * static_cast<double>(src))));
  const double cutoff =
      0.5 * std::min(1.0, static_cast<double>(up) / static_cast<double>(down));

  // One tap table per output phase: taps[phase][j + half] = h(j - frac).
  const int64_t width = 2 * half + 1;
  std::vector<double> taps(static_cast<size_t>(up * width));
  for (int64_t phase = 0; phase < up; ++phase) {
    const double frac = static_cast<double>(phase) / static_cast<double>(up);
    for (int64_t j = -half; j <= half; ++j) {
      const double u = static_cast<double>(j) - frac;
      const double h = 2.0 * cutoff * dsp::sinc(2.0 * cutoff * u) *
                       dsp::kaiser(u / static_cast<double>(half), kKaiserBeta);
      taps[static_cast<size_t>(phase * width + (j + half))] = h;
    }
  }

  const int64_t in_len = static_cast<int64_t>(clip.samples.size());
  const int64_t out_len = static_cast<int64_t>(
      std::llround(static_cast<double>(in_len) * dst / static_cast<double>(src)));

  AudioClip out;
  out.id = clip.id;
  out.source_path = clip.source_path;
  out.sample_rate = target_rate;
  out.samples.assign(static_cast<size_t>(out_len), 0.0);

  for (int64_t n = 0; n < out_len; ++n) {
    const int64_t t = n * down;        // position in units of 1/up source samples
    const int64_t k = t / up;          // integer source index
    const int64_t phase = t % up;
    const double* h = &taps[static_cast<size_t>(phase * width)];
    double acc = 0.0;
    for (int64_t j = -half; j <= half; ++j) {
      const int64_t m = k + j;
      if (m < 0 || m >= in_len) continue;
      acc += clip.samples[static_cast<size_t>(m)] *
             h[static_cast<size_t>(j + half)];
    }
    out.samples[static_cast<size_t>(n)] = acc;
  }
  return out;
}

}  // namespace a2v
