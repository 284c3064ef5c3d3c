#ifndef A2V_DSP_H_
#define A2V_DSP_H_

#include <cstdint>
#include <vector>

namespace a2v::dsp {

// Normalized sinc: sin(pi x) / (pi x), 1 at x = 0.
double sinc(double x);
// d/dx of the normalized sinc.
double sinc_derivative(double x);

// Zeroth-order modified Bessel function of the first kind (power series).
double bessel_i0(double x);

// Kaiser window evaluated at u in [-1, 1].
double kaiser(double u, double beta);

// Hamming window coefficient for tap n of an n_taps window.
double hamming(int64_t n, int64_t n_taps);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Single-bin Goertzel magnitude of x at freq_hz (units: sum amplitude).
double goertzel_mag(const std::vector<double>& x, double sample_rate,
                    double freq_hz);

// |X_k|^2 for k = 0..N-1, direct O(N^2) evaluation.
std::vector<double> power_spectrum(const std::vector<double>& x);

// FIR magnitude response |H(f)| of a real kernel at frequency f (Hz).
double fir_response_mag(const std::vector<double>& kernel, double sample_rate,
                        double freq_hz);

// IEC 61672 A-weighting, normalized so the gain at 1 kHz is exactly 0 dB.
double a_weight_gain(double freq_hz);     // linear
double a_weight_gain_db(double freq_hz);  // dB

double rms(const std::vector<double>& x);

}  // namespace a2v::dsp

#endif  // A2V_DSP_H_
