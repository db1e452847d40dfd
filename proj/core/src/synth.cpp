#include "vadtl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "vadtl/dsp.hpp"
#include "vadtl/rng.hpp"

namespace vadtl {

namespace {

void add_burst(std::vector<double>& out, std::size_t start, std::size_t len,
               double f0, double amp, int sample_rate) {
  const std::size_t ramp = std::min<std::size_t>(80, len / 4);  // 10 ms
  for (std::size_t i = 0; i < len && start + i < out.size(); ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    // three harmonics with a mild downward tilt, plus slow vibrato
    const double f = f0 * (1.0 + 0.01 * std::sin(2.0 * dsp::kPi * 5.0 * t));
    const double phase = 2.0 * dsp::kPi * f * t;
    double v = std::sin(phase) + 0.5 * std::sin(2.0 * phase) +
               0.25 * std::sin(3.0 * phase);
    double env = 1.0;
    if (i < ramp) env = static_cast<double>(i) / ramp;
    if (len - i <= ramp) env = std::min(env, static_cast<double>(len - i) / ramp);
    out[start + i] += amp * env * v / 1.75;
  }
}

std::vector<double> gaussian_noise(std::size_t n, std::mt19937_64& rng) {
  NormalDraw normal;
  std::vector<double> x(n);
  for (double& v : x) v = normal(rng);
  return x;
}

// Shapes white noise by a magnitude weight per frequency, via one full-size
// FFT (padded to a power of two and trimmed back).
std::vector<double> shaped_noise(std::size_t n, std::mt19937_64& rng,
                                 int sample_rate,
                                 const std::function<double(double)>& weight) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  std::vector<std::complex<double>> buf(m, {0.0, 0.0});
  const auto white = gaussian_noise(n, rng);
  for (std::size_t i = 0; i < n; ++i) buf[i] = {white[i], 0.0};
  dsp::fft_pow2(buf);
  for (std::size_t k = 0; k <= m / 2; ++k) {
    const double hz =
        static_cast<double>(k) * sample_rate / static_cast<double>(m);
    const double w = weight(hz);
    buf[k] *= w;
    if (k != 0 && k != m / 2) buf[m - k] *= w;
  }
  // inverse FFT via conjugation
  for (auto& v : buf) v = std::conj(v);
  dsp::fft_pow2(buf);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = buf[i].real() / static_cast<double>(m);
  return out;
}

void normalize_rms(std::vector<double>& x, double target_rms) {
  double p = 0.0;
  for (double v : x) p += v * v;
  p = std::sqrt(p / static_cast<double>(x.size()));
  if (p <= 0.0) return;
  const double g = target_rms / p;
  for (double& v : x) v = std::clamp(v * g, -1.0, 1.0);
}

}  // namespace

AudioSignal synth_clean_utterance(double duration_s, std::uint64_t seed,
                                  int sample_rate) {
  if (duration_s <= 0.0)
    throw std::invalid_argument("synth_clean_utterance: nonpositive duration");
  std::mt19937_64 rng(derive_seed(seed, {0x636c65616eULL}));  // "clean"
  const auto n = static_cast<std::size_t>(std::lround(duration_s * sample_rate));
  AudioSignal out;
  out.sample_rate = sample_rate;
  out.samples.assign(n, 0.0);

  // leading silence, then alternating burst/silence until the end
  std::size_t pos = static_cast<std::size_t>(
      uniform_range(rng, 0.02, 0.12) * sample_rate);
  while (pos < n) {
    const auto burst_len = static_cast<std::size_t>(
        uniform_range(rng, 0.10, 0.30) * sample_rate);
    const double f0 = uniform_range(rng, 100.0, 300.0);
    const double amp = uniform_range(rng, 0.35, 0.6);
    add_burst(out.samples, pos, std::min(burst_len, n - pos), f0, amp,
              sample_rate);
    pos += burst_len;
    pos += static_cast<std::size_t>(
        uniform_range(rng, 0.08, 0.25) * sample_rate);
  }
  return out;
}

std::vector<std::string> noise_kinds() {
  return {"white", "pink", "rumble", "hiss", "hum", "babble", "machine"};
}

AudioSignal synth_noise(const std::string& kind, double duration_s,
                        std::uint64_t seed, int sample_rate) {
  if (duration_s <= 0.0)
    throw std::invalid_argument("synth_noise: nonpositive duration");
  std::mt19937_64 rng(derive_seed(seed, {0x6e6f697365ULL}));  // "noise"
  const auto n = static_cast<std::size_t>(std::lround(duration_s * sample_rate));

  AudioSignal out;
  out.sample_rate = sample_rate;

  if (kind == "white") {
    out.samples = gaussian_noise(n, rng);
  } else if (kind == "pink") {
    out.samples = shaped_noise(n, rng, sample_rate, [](double hz) {
      return hz < 10.0 ? 1.0 : std::sqrt(10.0 / hz) * 3.0;
    });
  } else if (kind == "rumble") {
    out.samples = shaped_noise(n, rng, sample_rate, [](double hz) {
      return hz <= 700.0 ? 1.0 : std::exp(-(hz - 700.0) / 150.0);
    });
  } else if (kind == "hiss") {
    out.samples = shaped_noise(n, rng, sample_rate, [](double hz) {
      if (hz >= 2200.0 && hz <= 3800.0) return 1.0;
      const double d = hz < 2200.0 ? 2200.0 - hz : hz - 3800.0;
      return std::exp(-d / 150.0);
    });
  } else if (kind == "hum") {
    out.samples = gaussian_noise(n, rng);
    for (double& v : out.samples) v *= 0.15;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / sample_rate;
      for (int h = 1; h <= 6; ++h)
        out.samples[i] += (0.6 / h) * std::sin(2.0 * dsp::kPi * 50.0 * h * t);
    }
  } else if (kind == "babble") {
    out.samples.assign(n, 0.0);
    for (int speaker = 0; speaker < 6; ++speaker) {
      const auto voice = synth_clean_utterance(
          duration_s, derive_seed(seed, {0x626162ULL, (std::uint64_t)speaker}),
          sample_rate);
      for (std::size_t i = 0; i < n; ++i)
        out.samples[i] += voice.samples[i] / 3.0;
    }
  } else if (kind == "machine") {
    out.samples = shaped_noise(n, rng, sample_rate, [](double hz) {
      return (hz >= 800.0 && hz <= 2000.0) ? 1.0 : 0.05;
    });
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / sample_rate;
      out.samples[i] *= 1.0 + 0.5 * std::sin(2.0 * dsp::kPi * 8.0 * t);
    }
  } else if (kind.rfind("band:", 0) == 0) {
    // parametric band noise, "band:<lo_hz>:<hi_hz>"
    const std::size_t sep = kind.find(':', 5);
    if (sep == std::string::npos)
      throw std::invalid_argument("band noise needs band:<lo>:<hi>");
    const double lo = std::stod(kind.substr(5, sep - 5));
    const double hi = std::stod(kind.substr(sep + 1));
    if (!(lo >= 0.0 && hi > lo))
      throw std::invalid_argument("bad band edges in: " + kind);
    out.samples = shaped_noise(n, rng, sample_rate, [lo, hi](double hz) {
      if (hz >= lo && hz <= hi) return 1.0;
      const double d = hz < lo ? lo - hz : hz - hi;
      return std::exp(-d / 150.0);
    });
  } else {
    throw std::invalid_argument("unknown noise kind: " + kind);
  }

  normalize_rms(out.samples, 0.1);
  return out;
}

}  // namespace vadtl
