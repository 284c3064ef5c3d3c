#include "a2v/synthdata.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "a2v/error.h"
#include "a2v/rng.h"
#include "a2v/wav.h"

namespace a2v {

namespace {

int64_t poisson(Rng& rng, double mean) {
  // Knuth inversion; means here are single digits.
  const double limit = std::exp(-mean);
  int64_t k = 0;
  double product = rng.uniform();
  while (product > limit) {
    ++k;
    product *= rng.uniform();
  }
  return k;
}

// Integral rates are exact (rate 1 means one call per clip); the fractional
// remainder is a Bernoulli top-up.
int64_t count_from_rate(Rng& rng, double rate) {
  const double whole = std::floor(rate);
  int64_t n = static_cast<int64_t>(whole);
  if (rng.uniform() < rate - whole) ++n;
  return n;
}

}  // namespace

SynthSpec SynthSpec::defaults() {
  SynthSpec spec;
  // Rates and durations chosen for ~7% labeled duration on 5 s clips, with
  // events long enough to survive the 100 ms evaluation pooling window.
  spec.classes = {
      {"lowband", 400.0, 700.0, 130.0, 300.0, 0.7},
      {"midband", 900.0, 1300.0, 120.0, 280.0, 0.7},
      {"highband", 1700.0, 2400.0, 110.0, 260.0, 0.7},
  };
  return spec;
}

std::vector<LabelEvent> synth_clip(const SynthSpec& spec, int clip_index,
                                   std::vector<double>& samples) {
  if (spec.classes.empty()) throw ArgumentError("synth_clip: no classes");
  const int64_t n = static_cast<int64_t>(
      std::llround(spec.clip_s * static_cast<double>(spec.sample_rate)));
  samples.assign(static_cast<size_t>(n), 0.0);
  Rng rng = Rng(spec.seed).split(static_cast<uint64_t>(clip_index));

  // Low-level background noise everywhere.
  for (auto& s : samples) s = spec.background_rms * rng.normal();

  // Broadband impulsive bursts.
  const int64_t n_bursts = poisson(rng, spec.bursts_per_clip);
  const int64_t burst_len = std::max<int64_t>(
      8, static_cast<int64_t>(std::llround(spec.burst_ms * 1e-3 * spec.sample_rate)));
  for (int64_t b = 0; b < n_bursts; ++b) {
    const int64_t start = rng.uniform_int(std::max<int64_t>(1, n - burst_len));
    for (int64_t i = 0; i < burst_len && start + i < n; ++i) {
      const double env =
          std::sin(M_PI * static_cast<double>(i) / static_cast<double>(burst_len));
      samples[static_cast<size_t>(start + i)] +=
          spec.burst_amplitude * env * rng.normal();
    }
  }

  // Calls: Hann-enveloped linear chirps inside the class band.
  std::vector<LabelEvent> events;
  for (size_t ci = 0; ci < spec.classes.size(); ++ci) {
    const auto& cls = spec.classes[ci];
    const int64_t n_calls = count_from_rate(rng, cls.calls_per_clip);
    for (int64_t call = 0; call < n_calls; ++call) {
      const double dur_s =
          rng.uniform(cls.dur_lo_ms, cls.dur_hi_ms) * 1e-3;
      const int64_t len = static_cast<int64_t>(
          std::llround(dur_s * spec.sample_rate));
      if (len < 8 || len >= n - 16) continue;
      const int64_t start = 8 + rng.uniform_int(n - len - 16);
      const double f0 = rng.uniform(cls.band_lo_hz, cls.band_hi_hz);
      const double f1 = rng.uniform(cls.band_lo_hz, cls.band_hi_hz);
      const double amp = rng.uniform(spec.call_amplitude_lo, spec.call_amplitude_hi);
      const double phase0 = rng.uniform(0.0, 2.0 * M_PI);
      for (int64_t i = 0; i < len; ++i) {
        const double t = static_cast<double>(i) / spec.sample_rate;
        const double frac = static_cast<double>(i) / static_cast<double>(len);
        const double freq = f0 + (f1 - f0) * frac;
        const double phase = phase0 + 2.0 * M_PI * (f0 * t + 0.5 * (f1 - f0) * t * frac);
        const double env = 0.5 * (1.0 - std::cos(2.0 * M_PI * frac));
        samples[static_cast<size_t>(start + i)] += amp * env * std::sin(phase);
        (void)freq;
      }
      LabelEvent ev;
      ev.class_id = static_cast<int>(ci);
      ev.onset_s = static_cast<double>(start) / spec.sample_rate;
      ev.offset_s = static_cast<double>(start + len) / spec.sample_rate;
      ev.focal = false;
      events.push_back(ev);
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const LabelEvent& a, const LabelEvent& b) {
                     return a.onset_s < b.onset_s;
                   });
  // Headroom keeps the PCM16 writer from clipping stacked components.
  for (auto& s : samples) s = std::clamp(s, -0.999, 0.999);
  return events;
}

SynthResult generate(const SynthSpec& spec, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  ClassTable table;
  for (const auto& cls : spec.classes) table.names.push_back(cls.name);
  for (size_t a = 0; a < spec.classes.size(); ++a) {
    for (size_t b = a + 1; b < spec.classes.size(); ++b) {
      if (spec.classes[a].band_lo_hz == spec.classes[b].band_lo_hz &&
          spec.classes[a].band_hi_hz == spec.classes[b].band_hi_hz) {
        std::fprintf(stderr,
                     "synthdata: warning: classes %s and %s share a band\n",
                     spec.classes[a].name.c_str(), spec.classes[b].name.c_str());
      }
    }
  }

  SynthResult result;
  LabelManifest manifest;
  std::vector<double> samples;
  for (int i = 0; i < spec.n_clips; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%04d", i);
    auto events = synth_clip(spec, i, samples);
    write_wav_pcm16((fs::path(out_dir) / (std::string(name) + ".wav")).string(),
                    samples, spec.sample_rate);
    result.clip_ids.push_back(name);
    result.n_events += static_cast<int64_t>(events.size());
    if (!events.empty()) manifest[name] = std::move(events);
  }
  save_label_manifest((fs::path(out_dir) / "manifest.csv").string(), manifest,
                      table);
  table.save((fs::path(out_dir) / "classes.txt").string());
  return result;
}

}  // namespace a2v
