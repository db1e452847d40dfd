#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace vadtl::dsp {

inline constexpr double kPi = 3.14159265358979323846;

// Log floor applied wherever a log of possibly-zero energy appears.
inline constexpr double kLogFloor = 1e-10;

// Symmetric Hamming window of length n (hamming(1) == {1.0}).
std::vector<double> hamming_window(std::size_t n);

// In-place iterative radix-2 FFT; size must be a power of two. Sizes used
// by the feature pipeline are tiny (<= 256), which is why this is not
// delegated to an external FFT library.
void fft_pow2(std::vector<std::complex<double>>& x);

// Magnitude spectrum bins 0..n/2 of the real input zero-padded to n
// (power of two).
std::vector<double> real_magnitude_spectrum(std::span<const double> frame,
                                            std::size_t n);

// Raw autocorrelation r[0..max_lag], r[t] = sum_n x[n] x[n+t].
std::vector<double> autocorrelation(std::span<const double> x,
                                    std::size_t max_lag);

struct LevinsonResult {
  std::vector<double> coeffs;  // prediction coefficients a_1..a_p
  std::vector<double> errors;  // prediction error per order, errors[m] = E_m
};

// Levinson-Durbin recursion on r[0..order]. Returns predictor coefficients
// in the convention x[n] ~ sum_k a_k x[n-k]. A (near-)singular
// autocorrelation freezes the recursion at the last stable order; r[0] at
// or below the floor yields all-zero coefficients.
LevinsonResult levinson_durbin(std::span<const double> r, std::size_t order);

// Cepstral coefficients c_0..c_n of the all-pole model sigma^2 / |A|^2
// defined by predictor coefficients a and residual energy. c_0 is
// ln(max(residual, floor)).
std::vector<double> lpc_to_cepstrum(std::span<const double> coeffs,
                                    double residual_energy, std::size_t n_ceps);

// Band-pass filtering of a log-energy trajectory across frames:
//   y[n] = 0.2 x[n] + 0.1 x[n-1] - 0.1 x[n-3] - 0.2 x[n-4] + 0.94 y[n-1]
// with a 4-sample warm-up during which the output is zero. Input must have
// at least 5 samples.
std::vector<double> rasta_filter(std::span<const double> x);

// Direct DFT magnitude of x zero-padded to length n at bin k.
double dft_bin_magnitude(std::span<const double> x, std::size_t n,
                         std::size_t k);

inline double hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

inline double hz_to_bark(double hz) {
  return 6.0 * std::asinh(hz / 600.0);
}

// Triangular mel filterbank over [0, f_max] for a spectrum with n_bins
// bins spanning [0, nyquist]. Row-major weights, n_filters x n_bins.
std::vector<double> mel_filterbank(std::size_t n_filters, std::size_t n_bins,
                                   double nyquist_hz, double f_max_hz);

}  // namespace vadtl::dsp
