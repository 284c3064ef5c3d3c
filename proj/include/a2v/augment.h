#ifndef A2V_AUGMENT_H_
#define A2V_AUGMENT_H_

#include <vector>

#include "a2v/tensor.h"

namespace a2v {

// Between-classes-learning mixing knobs (window shortened to 50 ms for
// bioacoustic event timescales).
struct MixConfig {
  double input_strength = 0.5;
  double target_strength = 0.0;
  double token_prob = 0.0;
  double window_s = 0.05;
};

inline constexpr double kSilenceFloorDb = -120.0;

// Maximum A-weighted RMS level (dB) over consecutive window_s windows,
// weighting applied in the frequency domain per window. Silence returns the
// -120 dB floor.
double a_weighted_level(const std::vector<double>& segment, int sample_rate,
                        double window_s);

// BC-learning mix: pq = 1 / (1 + 10^((g1-g2)/20) (1-r)/r),
// out = (pq x1 + (1-pq) x2) / sqrt(pq^2 + (1-pq)^2).
std::vector<double> bc_mix(const std::vector<double>& x1,
                           const std::vector<double>& x2, double r, double g1_db,
                           double g2_db);

// Soft targets: (1-strength) y1 + strength (r y1 + (1-r) y2). strength 0
// keeps hard first-sample targets (the pretraining setting).
Tensor mix_targets(const Tensor& y1, const Tensor& y2, double r,
                   double strength);

}  // namespace a2v

#endif  // A2V_AUGMENT_H_
