#include "vadtl/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace vadtl {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] |
                                    (static_cast<std::uint16_t>(p[1]) << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

double mean_power(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

}  // namespace

FrameSequence::FrameSequence(std::vector<double> samples,
                             std::size_t frame_length, std::size_t frame_shift)
    : samples_(std::move(samples)),
      frame_length_(frame_length),
      frame_shift_(frame_shift) {
  if (frame_length_ == 0 || frame_shift_ == 0)
    throw std::invalid_argument("FrameSequence: zero frame parameters");
  if (samples_.size() < frame_length_)
    throw std::invalid_argument("FrameSequence: signal shorter than one frame");
  count_ = (samples_.size() - frame_length_) / frame_shift_ + 1;
}

AudioSignal read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError(WavErrorKind::malformed_header,
                          "cannot open WAV file: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 ||
      std::memcmp(p + 8, "WAVE", 4) != 0)
    throw WavError(WavErrorKind::malformed_header,
                   "not a RIFF/WAVE file: " + path.string());

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0, format = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_len = 0;

  std::size_t off = 12;
  while (off + 8 <= n) {
    const std::uint32_t chunk_len = read_u32(p + off + 4);
    if (off + 8 + chunk_len > n)
      throw WavError(WavErrorKind::malformed_header,
                     "truncated chunk in " + path.string());
    if (std::memcmp(p + off, "fmt ", 4) == 0) {
      if (chunk_len < 16)
        throw WavError(WavErrorKind::malformed_header,
                       "short fmt chunk in " + path.string());
      format = read_u16(p + off + 8);
      channels = read_u16(p + off + 10);
      rate = read_u32(p + off + 12);
      bits = read_u16(p + off + 22);
      have_fmt = true;
    } else if (std::memcmp(p + off, "data", 4) == 0) {
      data = p + off + 8;
      data_len = chunk_len;
    }
    off += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr)
    throw WavError(WavErrorKind::malformed_header,
                   "missing fmt/data chunk in " + path.string());
  if (format != 1 || bits != 16)
    throw WavError(WavErrorKind::unsupported_encoding,
                   "only 16-bit PCM supported: " + path.string());
  if (channels != 1)
    throw WavError(WavErrorKind::multichannel,
                   "only mono supported: " + path.string());
  if (rate == 0)
    throw WavError(WavErrorKind::malformed_header,
                   "zero sample rate in " + path.string());

  AudioSignal out;
  out.sample_rate = static_cast<int>(rate);
  const std::size_t n_samples = data_len / 2;
  out.samples.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto raw = static_cast<std::int16_t>(read_u16(data + 2 * i));
    out.samples[i] = static_cast<double>(raw) / 32768.0;
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioSignal& signal) {
  const std::uint32_t data_len =
      static_cast<std::uint32_t>(signal.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_len);
  out.append("RIFF");
  put_u32(out, 36 + data_len);
  out.append("WAVE");
  out.append("fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(signal.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(signal.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.append("data");
  put_u32(out, data_len);
  for (double v : signal.samples) {
    double clamped = std::clamp(v, -1.0, 1.0);
    long q = std::lrint(clamped * 32768.0);
    q = std::clamp(q, -32768L, 32767L);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write WAV: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

FrameSequence frame_signal(const AudioSignal& signal) {
  const auto frame_length = static_cast<std::size_t>(
      std::lround(kFrameLengthSeconds * signal.sample_rate));
  const auto frame_shift = static_cast<std::size_t>(
      std::lround(kFrameShiftSeconds * signal.sample_rate));
  return FrameSequence(signal.samples, frame_length, frame_shift);
}

MixResult mix_at_snr(const AudioSignal& clean, const AudioSignal& noise,
                     double snr_db) {
  if (clean.sample_rate != noise.sample_rate)
    throw std::invalid_argument("mix_at_snr: sample rate mismatch");
  if (clean.samples.empty() || noise.samples.empty())
    throw std::invalid_argument("mix_at_snr: empty signal");

  // noise excerpt over the full clean extent, tiled when shorter
  std::vector<double> excerpt(clean.samples.size());
  for (std::size_t i = 0; i < excerpt.size(); ++i)
    excerpt[i] = noise.samples[i % noise.samples.size()];

  const double p_clean = mean_power(clean.samples);
  const double p_noise = mean_power(excerpt);
  if (p_clean <= 0.0 || p_noise <= 0.0)
    throw std::invalid_argument("mix_at_snr: all-zero signal, SNR undefined");

  const double gain =
      std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));

  MixResult res;
  res.noise_gain = gain;
  res.signal.sample_rate = clean.sample_rate;
  res.signal.samples.resize(clean.samples.size());
  for (std::size_t i = 0; i < excerpt.size(); ++i) {
    const double v = clean.samples[i] + gain * excerpt[i];
    if (v > 1.0 || v < -1.0) ++res.clipped_samples;
    res.signal.samples[i] = std::clamp(v, -1.0, 1.0);
  }
  return res;
}

std::vector<FrameLabel> frame_labels_from_clean(const AudioSignal& clean,
                                                double threshold_db) {
  const FrameSequence frames = frame_signal(clean);
  std::vector<double> log_energy(frames.size());
  double max_energy = 0.0;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    auto f = frames.frame(k);
    double e = 0.0;
    for (double v : f) e += v * v;
    max_energy = std::max(max_energy, e);
    log_energy[k] = 10.0 * std::log10(std::max(e, 1e-10));
  }

  std::vector<FrameLabel> labels(frames.size(), FrameLabel::nonspeech);
  if (max_energy <= 1e-10) return labels;  // pure silence

  const double cutoff = 10.0 * std::log10(max_energy) - threshold_db;
  for (std::size_t k = 0; k < frames.size(); ++k)
    if (log_energy[k] > cutoff) labels[k] = FrameLabel::speech;
  return labels;
}

void write_labels(const std::filesystem::path& path,
                  const std::vector<FrameLabel>& labels) {
  std::string line;
  line.reserve(labels.size() + 1);
  for (FrameLabel l : labels)
    line.push_back(l == FrameLabel::speech ? '1' : '0');
  line.push_back('\n');
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write labels: " + path.string());
  f.write(line.data(), static_cast<std::streamsize>(line.size()));
}

std::vector<FrameLabel> read_labels(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read labels: " + path.string());
  std::string line((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r'))
    line.pop_back();
  std::vector<FrameLabel> labels;
  labels.reserve(line.size());
  for (char c : line) {
    if (c == '1')
      labels.push_back(FrameLabel::speech);
    else if (c == '0')
      labels.push_back(FrameLabel::nonspeech);
    else
      throw std::runtime_error("bad label character in " + path.string());
  }
  return labels;
}

}  // namespace vadtl
