#include "a2v/rng.h"

#include <cmath>

namespace a2v {

namespace {

uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(uint64_t seed) {
  uint64_t sm = seed;
  for (auto& w : s_) w = splitmix64(sm);
}

uint64_t Rng::next_u64() {
  const uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  // u1 in (0,1] so the log is finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int64_t Rng::uniform_int(int64_t n) {
  if (n <= 1) return 0;
  const uint64_t un = static_cast<uint64_t>(n);
  // Rejection sampling over the smallest covering power-of-two mask.
  uint64_t mask = ~0ULL;
  uint64_t limit = un - 1;
  int bits = 0;
  while (limit >> bits) ++bits;
  mask = (bits >= 64) ? ~0ULL : ((1ULL << bits) - 1);
  uint64_t draw;
  do {
    draw = next_u64() & mask;
  } while (draw >= un);
  return static_cast<int64_t>(draw);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

Rng Rng::split(uint64_t stream) const {
  uint64_t acc = 0x6a09e667f3bcc909ULL ^ stream;
  for (auto w : s_) {
    acc ^= w;
    splitmix64(acc);
  }
  return Rng(splitmix64(acc));
}

}  // namespace a2v
