#include "a2v/augment.h"

#include <algorithm>
#include <cmath>

#include "a2v/dsp.h"
#include "a2v/error.h"

namespace a2v {

double a_weighted_level(const std::vector<double>& segment, int sample_rate,
                        double window_s) {
  const int64_t window = static_cast<int64_t>(
      std::llround(window_s * static_cast<double>(sample_rate)));
  if (window < 1 || static_cast<int64_t>(segment.size()) < window) {
    throw ArgumentError("a_weighted_level: segment shorter than one window");
  }
  const int64_t n_windows = static_cast<int64_t>(segment.size()) / window;
  double best = kSilenceFloorDb;
  std::vector<double> frame(static_cast<size_t>(window));
  for (int64_t w = 0; w < n_windows; ++w) {
    std::copy_n(segment.begin() + w * window, window, frame.begin());
    const auto power = dsp::power_spectrum(frame);
    // Parseval: (1/N^2) sum |X_k|^2 equals the mean square of the frame, so
    // weighting each bin gives the A-weighted mean square directly.
    double weighted = 0.0;
    const double n = static_cast<double>(window);
    for (int64_t k = 0; k < window; ++k) {
      const int64_t folded = std::min<int64_t>(k, window - k);
      const double f = static_cast<double>(folded) * sample_rate / n;
      const double g = dsp::a_weight_gain(f);
      weighted += g * g * power[static_cast<size_t>(k)];
    }
    weighted /= n * n;
    const double level =
        weighted > 0.0 ? 10.0 * std::log10(weighted) : kSilenceFloorDb;
    best = std::max(best, std::max(level, kSilenceFloorDb));
  }
  return best;
}

std::vector<double> bc_mix(const std::vector<double>& x1,
                           const std::vector<double>& x2, double r, double g1_db,
                           double g2_db) {
  if (x1.size() != x2.size()) throw ShapeError("bc_mix: length mismatch");
  if (r <= 0.0 || r >= 1.0) throw ArgumentError("bc_mix: r must be in (0,1)");
  const double pq =
      1.0 / (1.0 + std::pow(10.0, (g1_db - g2_db) / 20.0) * (1.0 - r) / r);
  const double norm = std::sqrt(pq * pq + (1.0 - pq) * (1.0 - pq));
  std::vector<double> out(x1.size());
  for (size_t i = 0; i < x1.size(); ++i) {
    out[i] = (pq * x1[i] + (1.0 - pq) * x2[i]) / norm;
  }
  return out;
}

Tensor mix_targets(const Tensor& y1, const Tensor& y2, double r,
                   double strength) {
  if (!y1.same_shape(y2)) throw ShapeError("mix_targets: shape mismatch");
  if (strength < 0.0 || strength > 1.0) {
    throw ArgumentError("mix_targets: strength must be in [0,1]");
  }
  Tensor out = y1;
  for (size_t i = 0; i < out.v.size(); ++i) {
    out.v[i] = (1.0 - strength) * y1.v[i] +
               strength * (r * y1.v[i] + (1.0 - r) * y2.v[i]);
  }
  return out;
}

}  // namespace a2v
