#include "vadtl/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vadtl::dsp {

std::vector<double> hamming_window(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                  static_cast<double>(n - 1));
  return w;
}

void fft_pow2(std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft_pow2: size must be a power of two");

  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = x[i + k];
        std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

std::vector<double> real_magnitude_spectrum(std::span<const double> frame,
                                            std::size_t n) {
  std::vector<std::complex<double>> buf(n, {0.0, 0.0});
  const std::size_t m = std::min(frame.size(), n);
  for (std::size_t i = 0; i < m; ++i) buf[i] = {frame[i], 0.0};
  fft_pow2(buf);
  std::vector<double> mag(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) mag[k] = std::abs(buf[k]);
  return mag;
}

std::vector<double> autocorrelation(std::span<const double> x,
                                    std::size_t max_lag) {
  std::vector<double> r(max_lag + 1, 0.0);
  const std::size_t n = x.size();
  for (std::size_t t = 0; t <= max_lag && t < n; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i + t < n; ++i) acc += x[i] * x[i + t];
    r[t] = acc;
  }
  return r;
}

LevinsonResult levinson_durbin(std::span<const double> r, std::size_t order) {
  if (r.size() < order + 1)
    throw std::invalid_argument("levinson_durbin: need order+1 lags");

  LevinsonResult out;
  out.coeffs.assign(order, 0.0);
  out.errors.assign(order + 1, 0.0);

  double err = r[0];
  out.errors[0] = err;
  if (err <= kLogFloor) return out;  // silence: all-zero model

  std::vector<double> a(order + 1, 0.0);
  for (std::size_t m = 1; m <= order; ++m) {
    double acc = r[m];
    for (std::size_t k = 1; k < m; ++k) acc -= a[k] * r[m - k];
    if (err <= 1e-12) {
      // numerically exhausted; keep the stable lower-order model
      for (std::size_t j = m; j <= order; ++j) out.errors[j] = err;
      break;
    }
    const double k_m = acc / err;
    std::vector<double> prev(a.begin(), a.begin() + static_cast<long>(m));
    a[m] = k_m;
    for (std::size_t k = 1; k < m; ++k) a[k] = prev[k] - k_m * prev[m - k];
    err *= (1.0 - k_m * k_m);
    if (err < 0.0) err = 0.0;
    out.errors[m] = err;
  }
  for (std::size_t k = 1; k <= order; ++k) out.coeffs[k - 1] = a[k];
  return out;
}

std::vector<double> lpc_to_cepstrum(std::span<const double> coeffs,
                                    double residual_energy,
                                    std::size_t n_ceps) {
  const std::size_t p = coeffs.size();
  std::vector<double> c(n_ceps, 0.0);
  if (n_ceps == 0) return c;
  c[0] = std::log(std::max(residual_energy, kLogFloor));
  for (std::size_t n = 1; n < n_ceps; ++n) {
    double acc = n <= p ? coeffs[n - 1] : 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      if (n - k <= p)
        acc += (static_cast<double>(k) / static_cast<double>(n)) * c[k] *
               coeffs[n - k - 1];
    }
    c[n] = acc;
  }
  return c;
}

std::vector<double> rasta_filter(std::span<const double> x) {
  if (x.size() < 5)
    throw std::invalid_argument("rasta_filter: needs at least 5 frames");
  const std::size_t n = x.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t t = 4; t < n; ++t) {
    y[t] = 0.2 * x[t] + 0.1 * x[t - 1] - 0.1 * x[t - 3] - 0.2 * x[t - 4] +
           0.94 * y[t - 1];
  }
  return y;
}

double dft_bin_magnitude(std::span<const double> x, std::size_t n,
                         std::size_t k) {
  double re = 0.0, im = 0.0;
  const std::size_t m = std::min(x.size(), n);
  for (std::size_t i = 0; i < m; ++i) {
    const double ang =
        -2.0 * kPi * static_cast<double>(k) * static_cast<double>(i) /
        static_cast<double>(n);
    re += x[i] * std::cos(ang);
    im += x[i] * std::sin(ang);
  }
  return std::sqrt(re * re + im * im);
}

std::vector<double> mel_filterbank(std::size_t n_filters, std::size_t n_bins,
                                   double nyquist_hz, double f_max_hz) {
  std::vector<double> weights(n_filters * n_bins, 0.0);
  const double mel_max = hz_to_mel(f_max_hz);
  std::vector<double> edges(n_filters + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_max * static_cast<double>(i) /
                         static_cast<double>(n_filters + 1));

  for (std::size_t f = 0; f < n_filters; ++f) {
    const double lo = edges[f], mid = edges[f + 1], hi = edges[f + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double hz = nyquist_hz * static_cast<double>(k) /
                        static_cast<double>(n_bins - 1);
      double w = 0.0;
      if (hz > lo && hz < mid)
        w = (hz - lo) / (mid - lo);
      else if (hz >= mid && hz < hi)
        w = (hi - hz) / (hi - mid);
      weights[f * n_bins + k] = w;
    }
  }
  return weights;
}

}  // namespace vadtl::dsp
