#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "vadtl/dsp.hpp"
#include "vadtl/rng.hpp"

using namespace vadtl;

namespace {

// quadratic-time reference DFT
std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      const double ang = -2.0 * dsp::kPi * static_cast<double>(k) *
                         static_cast<double>(i) / static_cast<double>(n);
      acc += x[i] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("fft matches naive dft") {
  std::mt19937_64 rng(42);
  std::vector<double> x(256);
  for (auto& v : x) v = uniform_range(rng, -1.0, 1.0);

  std::vector<std::complex<double>> buf(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) buf[i] = {x[i], 0.0};
  dsp::fft_pow2(buf);

  const auto ref = naive_dft(x);
  for (std::size_t k = 0; k < x.size(); ++k)
    CHECK(std::abs(buf[k] - ref[k]) < 1e-9);
}

TEST_CASE("fft rejects non-power-of-two sizes") {
  std::vector<std::complex<double>> buf(100);
  CHECK_THROWS_AS(dsp::fft_pow2(buf), std::invalid_argument);
}

TEST_CASE("hamming window") {
  const auto w = dsp::hamming_window(200);
  CHECK(w.size() == 200);
  CHECK(w[0] == doctest::Approx(0.08));
  CHECK(w[199] == doctest::Approx(0.08));
  for (std::size_t i = 0; i < 100; ++i)
    CHECK(w[i] == doctest::Approx(w[199 - i]));
  CHECK(dsp::hamming_window(1) == std::vector<double>{1.0});
}

TEST_CASE("autocorrelation matches direct computation") {
  std::mt19937_64 rng(7);
  std::vector<double> x(64);
  for (auto& v : x) v = uniform_range(rng, -1.0, 1.0);
  const auto r = dsp::autocorrelation(x, 10);
  for (std::size_t t = 0; t <= 10; ++t) {
    double ref = 0.0;
    for (std::size_t i = 0; i + t < x.size(); ++i) ref += x[i] * x[i + t];
    CHECK(r[t] == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("levinson on an exact AR(1) autocorrelation") {
  // r[k] = 0.9^k solves the order-1 Yule-Walker system exactly
  std::vector<double> r(13);
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = std::pow(0.9, k);
  const auto res = dsp::levinson_durbin(r, 12);
  CHECK(res.coeffs[0] == doctest::Approx(0.9).epsilon(1e-9));
  for (std::size_t k = 1; k < 12; ++k)
    CHECK(std::abs(res.coeffs[k]) < 1e-9);
  for (std::size_t m = 1; m < res.errors.size(); ++m)
    CHECK(res.errors[m] <= res.errors[m - 1] + 1e-12);
}

TEST_CASE("levinson silence gives zeros") {
  std::vector<double> r(13, 0.0);
  const auto res = dsp::levinson_durbin(r, 12);
  for (double c : res.coeffs) CHECK(c == 0.0);
}

TEST_CASE("lpc cepstrum of a one-pole model") {
  // for H(z) = 1 / (1 - a z^-1): c_n = a^n / n
  const double a = 0.5;
  std::vector<double> coeffs = {a};
  const auto c = dsp::lpc_to_cepstrum(coeffs, 1.0, 6);
  CHECK(c[0] == doctest::Approx(0.0));  // ln(1)
  for (std::size_t n = 1; n < 6; ++n)
    CHECK(c[n] == doctest::Approx(std::pow(a, n) / static_cast<double>(n))
                      .epsilon(1e-12));
}

TEST_CASE("rasta filter warm-up and zero DC gain") {
  CHECK_THROWS_AS(dsp::rasta_filter(std::vector<double>(4, 1.0)),
                  std::invalid_argument);

  const std::vector<double> constant(40, 3.7);
  const auto y = dsp::rasta_filter(constant);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y[i]) < 1e-12);
}

TEST_CASE("rasta filter matches impulse-response convolution") {
  // simulated impulse response of the underlying difference equation
  const std::size_t n = 60;
  std::vector<double> h(n, 0.0);
  {
    std::vector<double> d(n, 0.0);
    d[0] = 1.0;
    const double num[5] = {0.2, 0.1, 0.0, -0.1, -0.2};
    for (std::size_t t = 0; t < n; ++t) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 5 && k <= t; ++k) acc += num[k] * d[t - k];
      h[t] = acc + (t > 0 ? 0.94 * h[t - 1] : 0.0);
    }
  }

  // a step that starts after the warm-up keeps the forced zeros inactive
  std::vector<double> x(n, 0.0);
  for (std::size_t t = 10; t < n; ++t) x[t] = 1.0;
  const auto y = dsp::rasta_filter(x);
  for (std::size_t t = 0; t < n; ++t) {
    double conv = 0.0;
    for (std::size_t k = 0; k <= t; ++k) conv += h[k] * x[t - k];
    CHECK(y[t] == doctest::Approx(conv).epsilon(1e-10));
  }
}

TEST_CASE("rasta filter is linear") {
  std::mt19937_64 rng(3);
  std::vector<double> a(30), b(30), mix(30);
  for (std::size_t i = 0; i < 30; ++i) {
    a[i] = uniform_range(rng, -1.0, 1.0);
    b[i] = uniform_range(rng, -1.0, 1.0);
    mix[i] = 2.0 * a[i] - 0.5 * b[i];
  }
  const auto ya = dsp::rasta_filter(a);
  const auto yb = dsp::rasta_filter(b);
  const auto ym = dsp::rasta_filter(mix);
  for (std::size_t i = 0; i < 30; ++i)
    CHECK(ym[i] == doctest::Approx(2.0 * ya[i] - 0.5 * yb[i]).epsilon(1e-10));
}

TEST_CASE("dft_bin_magnitude agrees with the fft") {
  std::mt19937_64 rng(11);
  std::vector<double> x(64);
  for (auto& v : x) v = uniform_range(rng, -1.0, 1.0);
  std::vector<std::complex<double>> buf(64);
  for (std::size_t i = 0; i < 64; ++i) buf[i] = {x[i], 0.0};
  dsp::fft_pow2(buf);
  for (std::size_t k = 0; k < 32; ++k)
    CHECK(dsp::dft_bin_magnitude(x, 64, k) ==
          doctest::Approx(std::abs(buf[k])).epsilon(1e-10));
}

TEST_CASE("mel filterbank partitions its band") {
  const auto bank = dsp::mel_filterbank(26, 129, 4000.0, 4000.0);
  CHECK(bank.size() == 26 * 129);
  for (double w : bank) {
    CHECK(w >= 0.0);
    CHECK(w <= 1.0);
  }
  // every filter has some support
  for (std::size_t f = 0; f < 26; ++f) {
    double total = 0.0;
    for (std::size_t k = 0; k < 129; ++k) total += bank[f * 129 + k];
    CHECK(total > 0.0);
  }
}
