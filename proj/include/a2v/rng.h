#ifndef A2V_RNG_H_
#define A2V_RNG_H_

#include <array>
#include <cstdint>

namespace a2v {

// xoshiro256** seeded through SplitMix64. All draws are reproducible across
// platforms, unlike the distributions in <random>. The full generator state
// is four 64-bit words so it can be stored in checkpoints.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0);

  uint64_t next_u64();

  // Uniform on [0, 1) with 53 bits of mantissa.
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller (cosine branch only, no cached state).
  double normal();

  // Uniform integer on [0, n), n >= 1.
  int64_t uniform_int(int64_t n);

  bool bernoulli(double p);

  // Derived generator for an independent stream (clone masks, per-clip
  // synthesis). Mixing is one-way so child streams do not collide.
  Rng split(uint64_t stream) const;

  std::array<uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<uint64_t, 4>& s) { s_ = s; }

 private:
  std::array<uint64_t, 4> s_{};
};

}  // namespace a2v

#endif  // A2V_RNG_H_
