#include "a2v/dsp.h"

#include <cmath>

namespace a2v::dsp {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

double sinc_derivative(double x) {
  if (x == 0.0) return 0.0;
  const double px = M_PI * x;
  return (std::cos(px) - std::sin(px) / px) / x;
}

double bessel_i0(double x) {
  // Converges quickly for the beta values used here (< 20).
  double term = 1.0, sum = 1.0;
  const double half_sq = 0.25 * x * x;
  for (int k = 1; k < 64; ++k) {
    term *= half_sq / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

double kaiser(double u, double beta) {
  if (u < -1.0 || u > 1.0) return 0.0;
  return bessel_i0(beta * std::sqrt(1.0 - u * u)) / bessel_i0(beta);
}

double hamming(int64_t n, int64_t n_taps) {
  if (n_taps <= 1) return 1.0;
  // Centered form: cos sees +/- the same argument for mirrored taps, so the
  // window is bitwise symmetric.
  const double centered =
      static_cast<double>(n) - 0.5 * static_cast<double>(n_taps - 1);
  return 0.54 + 0.46 * std::cos(2.0 * M_PI * centered /
                                static_cast<double>(n_taps - 1));
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

double goertzel_mag(const std::vector<double>& x, double sample_rate,
                    double freq_hz) {
  const double w = 2.0 * M_PI * freq_hz / sample_rate;
  const double coeff = 2.0 * std::cos(w);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (double sample : x) {
    s0 = sample + coeff * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  const double re = s1 - s2 * std::cos(w);
  const double im = s2 * std::sin(w);
  return std::sqrt(re * re + im * im);
}

std::vector<double> power_spectrum(const std::vector<double>& x) {
  const int64_t n = static_cast<int64_t>(x.size());
  std::vector<double> out(static_cast<size_t>(n), 0.0);
  for (int64_t k = 0; k < n; ++k) {
    const double w = -2.0 * M_PI * static_cast<double>(k) / n;
    // Rotation recurrence instead of per-sample trig.
    const double cw = std::cos(w), sw = std::sin(w);
    double cr = 1.0, ci = 0.0;
    double re = 0.0, im = 0.0;
    for (int64_t t = 0; t < n; ++t) {
      re += x[static_cast<size_t>(t)] * cr;
      im += x[static_cast<size_t>(t)] * ci;
      const double nr = cr * cw - ci * sw;
      ci = cr * sw + ci * cw;
      cr = nr;
    }
    out[static_cast<size_t>(k)] = re * re + im * im;
  }
  return out;
}

double fir_response_mag(const std::vector<double>& kernel, double sample_rate,
                        double freq_hz) {
  const double w = -2.0 * M_PI * freq_hz / sample_rate;
  double re = 0.0, im = 0.0;
  for (size_t n = 0; n < kernel.size(); ++n) {
    re += kernel[n] * std::cos(w * static_cast<double>(n));
    im += kernel[n] * std::sin(w * static_cast<double>(n));
  }
  return std::sqrt(re * re + im * im);
}

namespace {
double a_weight_ratio(double f) {
  const double f2 = f * f;
  const double c1 = 20.6 * 20.6;
  const double c2 = 107.7 * 107.7;
  const double c3 = 737.9 * 737.9;
  const double c4 = 12194.0 * 12194.0;
  const double num = c4 * f2 * f2;
  const double den =
      (f2 + c1) * std::sqrt((f2 + c2) * (f2 + c3)) * (f2 + c4);
  return num / den;
}
}  // namespace

double a_weight_gain(double freq_hz) {
  if (freq_hz <= 0.0) return 0.0;
  return a_weight_ratio(freq_hz) / a_weight_ratio(1000.0);
}

double a_weight_gain_db(double freq_hz) {
  return 20.0 * std::log10(a_weight_gain(freq_hz));
}

double rms(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double s : x) acc += s * s;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

}  // namespace a2v::dsp
