#include "vadtl/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "vadtl/dsp.hpp"

namespace vadtl {

namespace {

using dsp::kLogFloor;

constexpr std::size_t kSpectrumBins = kFftSize / 2 + 1;  // 129 bins, 0-4 kHz
constexpr double kNyquistHz = 4000.0;
constexpr std::size_t kAmsFftLen = 96;  // 32-frame context zero-padded; bins
                                        // land ~1.04 Hz apart at 100 fps
constexpr double kVoicingThreshold = 0.4;
constexpr double kPitchMinHz = 60.0;
constexpr double kPitchMaxHz = 400.0;

std::vector<double> windowed_frame(std::span<const double> frame) {
  static const std::vector<double> window = dsp::hamming_window(200);
  if (frame.size() != window.size())
    throw std::invalid_argument("expected a 200-sample frame");
  std::vector<double> w(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) w[i] = frame[i] * window[i];
  return w;
}

std::vector<double> magnitude_spectrum(std::span<const double> frame) {
  return dsp::real_magnitude_spectrum(windowed_frame(frame), kFftSize);
}

std::vector<double> dft_bands_from_spectrum(const std::vector<double>& mag) {
  std::vector<double> bands(16);
  for (std::size_t b = 0; b < 16; ++b) {
    double acc = 0.0;
    for (std::size_t k = 8 * b; k < 8 * (b + 1); ++k) acc += mag[k];
    bands[b] = std::log(std::max(acc / 8.0, kLogFloor));
  }
  return bands;
}

const std::vector<double>& mfcc_filterbank() {
  static const std::vector<double> bank =
      dsp::mel_filterbank(kMelFilters, kSpectrumBins, kNyquistHz, kNyquistHz);
  return bank;
}

std::vector<double> mfcc_from_spectrum(const std::vector<double>& mag) {
  const auto& bank = mfcc_filterbank();
  std::vector<double> log_e(kMelFilters);
  for (std::size_t f = 0; f < kMelFilters; ++f) {
    double acc = 0.0;
    for (std::size_t k = 0; k < kSpectrumBins; ++k)
      acc += bank[f * kSpectrumBins + k] * mag[k] * mag[k];
    log_e[f] = std::log(std::max(acc, kLogFloor));
  }
  // orthonormal DCT-II
  const double m = static_cast<double>(kMelFilters);
  std::vector<double> ceps(kMfccCoeffs);
  for (std::size_t k = 0; k < kMfccCoeffs; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < kMelFilters; ++j)
      acc += log_e[j] * std::cos(dsp::kPi * static_cast<double>(k) *
                                 (2.0 * static_cast<double>(j) + 1.0) /
                                 (2.0 * m));
    const double scale = k == 0 ? std::sqrt(1.0 / m) : std::sqrt(2.0 / m);
    ceps[k] = scale * acc;
  }
  return ceps;
}

// Critical-band masking curve centered at bark offset 0; asymmetric slopes.
double bark_weight(double offset) {
  if (offset < -1.3 || offset > 2.5) return 0.0;
  if (offset < -0.5) return std::pow(10.0, 2.5 * (offset + 0.5));
  if (offset <= 0.5) return 1.0;
  return std::pow(10.0, -1.0 * (offset - 0.5));
}

double equal_loudness(double hz) {
  const double w2 = std::pow(2.0 * dsp::kPi * hz, 2.0);
  const double num = (w2 + 56.8e6) * w2 * w2;
  const double den = (w2 + 6.3e6) * (w2 + 6.3e6) * (w2 + 0.38e9);
  return den > 0.0 ? num / den : 0.0;
}

struct PlpTables {
  std::vector<double> weights;     // kPlpCepstra x kSpectrumBins
  std::vector<double> loudness;    // per band
};

const PlpTables& plp_tables() {
  static const PlpTables tables = [] {
    PlpTables t;
    const double bark_max = dsp::hz_to_bark(kNyquistHz);
    t.weights.assign(kPlpCepstra * kSpectrumBins, 0.0);
    t.loudness.resize(kPlpCepstra);
    for (std::size_t b = 0; b < kPlpCepstra; ++b) {
      const double center =
          bark_max * static_cast<double>(b) / (kPlpCepstra - 1.0);
      for (std::size_t k = 0; k < kSpectrumBins; ++k) {
        const double hz = kNyquistHz * static_cast<double>(k) /
                          static_cast<double>(kSpectrumBins - 1);
        t.weights[b * kSpectrumBins + k] =
            bark_weight(dsp::hz_to_bark(hz) - center);
      }
      const double hz_center =
          600.0 * std::sinh(center / 6.0);  // inverse of hz_to_bark
      t.loudness[b] = equal_loudness(hz_center);
    }
    return t;
  }();
  return tables;
}

const std::vector<double>& ams_filterbank() {
  static const std::vector<double> bank =
      dsp::mel_filterbank(kAmsBands, kSpectrumBins, kNyquistHz, kNyquistHz);
  return bank;
}

}  // namespace

void FeatureMatrix::set_labels(std::vector<FrameLabel> labels) {
  if (labels.size() != rows_)
    throw std::invalid_argument("label count must equal row count");
  labels_ = std::move(labels);
}

void FeatureMatrix::append(const FeatureMatrix& other) {
  if (other.rows_ == 0) return;
  if (rows_ == 0 && dim_ == 0) dim_ = other.dim_;
  if (other.dim_ != dim_)
    throw std::invalid_argument("append: dimension mismatch");
  const bool keep_labels =
      (rows_ == 0 || has_labels()) && other.has_labels();
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
  if (keep_labels)
    labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
  else
    labels_.clear();
  rows_ += other.rows_;
}

double extract_pitch(std::span<const double> frame, int sample_rate) {
  double energy = 0.0;
  for (double v : frame) energy += v * v;
  if (energy / static_cast<double>(frame.size()) < 1e-8) return 0.0;

  const auto lag_min = static_cast<std::size_t>(
      std::floor(sample_rate / kPitchMaxHz));                      // 20
  const auto lag_max = static_cast<std::size_t>(
      std::floor(sample_rate / kPitchMinHz)) - 1;                  // 133
  if (lag_max + 1 >= frame.size()) return 0.0;

  const std::size_t n = frame.size();
  std::vector<double> rho(lag_max + 1, 0.0);
  double best = 0.0;
  for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
    double cross = 0.0, e0 = 0.0, e1 = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) {
      cross += frame[i] * frame[i + lag];
      e0 += frame[i] * frame[i];
      e1 += frame[i + lag] * frame[i + lag];
    }
    const double denom = std::sqrt(e0 * e1);
    rho[lag] = denom > 0.0 ? cross / denom : 0.0;
    best = std::max(best, rho[lag]);
  }
  if (best < kVoicingThreshold) return 0.0;

  // shortest local-maximum lag near the peak, so neighbouring-lag leakage
  // and harmonic-period multiples do not win
  for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
    if (rho[lag] < 0.95 * best) continue;
    const double left = lag > lag_min ? rho[lag - 1] : -1.0;
    const double right = lag < lag_max ? rho[lag + 1] : -1.0;
    if (rho[lag] >= left && rho[lag] >= right)
      return static_cast<double>(sample_rate) / static_cast<double>(lag);
  }
  return static_cast<double>(sample_rate) /
         static_cast<double>(std::max_element(rho.begin() + lag_min,
                                              rho.end()) -
                             rho.begin());
}

std::vector<double> extract_dft_bands(std::span<const double> frame) {
  return dft_bands_from_spectrum(magnitude_spectrum(frame));
}

std::vector<double> extract_mfcc(std::span<const double> frame) {
  return mfcc_from_spectrum(magnitude_spectrum(frame));
}

std::vector<double> extract_lpc(std::span<const double> frame) {
  const auto w = windowed_frame(frame);
  const auto r = dsp::autocorrelation(w, kLpcOrder);
  return dsp::levinson_durbin(r, kLpcOrder).coeffs;
}

FeatureMatrix extract_rasta_plp(const FrameSequence& frames) {
  const std::size_t T = frames.size();
  if (T <= kRastaWarmupFrames)
    throw std::invalid_argument("utterance shorter than the RASTA warm-up");
  const auto& tables = plp_tables();

  // critical-band log energies per frame
  std::vector<std::vector<double>> log_bands(
      T, std::vector<double>(kPlpCepstra));
  for (std::size_t t = 0; t < T; ++t) {
    const auto mag = magnitude_spectrum(frames.frame(t));
    for (std::size_t b = 0; b < kPlpCepstra; ++b) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kSpectrumBins; ++k)
        acc += tables.weights[b * kSpectrumBins + k] * mag[k] * mag[k];
      log_bands[t][b] = std::log(std::max(acc, kLogFloor));
    }
  }

  // band-pass each band trajectory across time
  std::vector<double> series(T);
  std::vector<std::vector<double>> filtered(T,
                                            std::vector<double>(kPlpCepstra));
  for (std::size_t b = 0; b < kPlpCepstra; ++b) {
    for (std::size_t t = 0; t < T; ++t) series[t] = log_bands[t][b];
    const auto y = dsp::rasta_filter(series);
    for (std::size_t t = 0; t < T; ++t) filtered[t][b] = y[t];
  }

  FeatureMatrix out(T, kPlpCepstra);
  std::vector<double> phi(kPlpCepstra);
  const std::size_t sym_len = 2 * (kPlpCepstra - 1);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t b = 0; b < kPlpCepstra; ++b)
      phi[b] = std::pow(std::exp(filtered[t][b]) * tables.loudness[b], 0.33);
    // DC/Nyquist bands carry no usable loudness weight
    phi[0] = phi[1];
    phi[kPlpCepstra - 1] = phi[kPlpCepstra - 2];

    // autocorrelation of the symmetric auditory spectrum
    std::vector<double> r(kPlpModelOrder + 1, 0.0);
    for (std::size_t tau = 0; tau <= kPlpModelOrder; ++tau) {
      double acc = 0.0;
      for (std::size_t k = 0; k < sym_len; ++k) {
        const std::size_t band = k <= kPlpCepstra - 1 ? k : sym_len - k;
        acc += phi[band] * std::cos(2.0 * dsp::kPi * static_cast<double>(k) *
                                    static_cast<double>(tau) /
                                    static_cast<double>(sym_len));
      }
      r[tau] = acc / static_cast<double>(sym_len);
    }

    const auto lev = dsp::levinson_durbin(r, kPlpModelOrder);
    const auto ceps = dsp::lpc_to_cepstrum(lev.coeffs,
                                           lev.errors[kPlpModelOrder],
                                           kPlpCepstra);
    std::copy(ceps.begin(), ceps.end(), out.row(t).begin());
  }
  return out;
}

std::vector<double> ams_modulation_bins(std::span<const double> envelope) {
  if (envelope.empty())
    throw std::invalid_argument("empty envelope context");
  const auto window = dsp::hamming_window(envelope.size());

  // bin 0 carries the envelope level; the AC bins see the mean-removed
  // envelope so the DC main lobe cannot mask nearby modulation lines
  double mean = 0.0;
  for (double v : envelope) mean += v;
  mean /= static_cast<double>(envelope.size());

  std::vector<double> level(envelope.size()), ac(envelope.size());
  for (std::size_t i = 0; i < envelope.size(); ++i) {
    level[i] = envelope[i] * window[i];
    ac[i] = (envelope[i] - mean) * window[i];
  }
  std::vector<double> bins(kAmsModulationBins);
  bins[0] = dsp::dft_bin_magnitude(level, kAmsFftLen, 0);
  for (std::size_t k = 1; k < kAmsModulationBins; ++k)
    bins[k] = dsp::dft_bin_magnitude(ac, kAmsFftLen, k);
  return bins;
}

FeatureMatrix extract_ams(const FrameSequence& frames) {
  const std::size_t T = frames.size();
  if (T < kAmsContextFrames)
    throw std::invalid_argument(
        "utterance shorter than the AMS modulation context");
  const auto& bank = ams_filterbank();

  // band magnitude envelope per frame
  std::vector<std::vector<double>> envelope(kAmsBands,
                                            std::vector<double>(T));
  for (std::size_t t = 0; t < T; ++t) {
    const auto mag = magnitude_spectrum(frames.frame(t));
    for (std::size_t b = 0; b < kAmsBands; ++b) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kSpectrumBins; ++k)
        acc += bank[b * kSpectrumBins + k] * mag[k] * mag[k];
      envelope[b][t] = std::sqrt(acc);
    }
  }

  FeatureMatrix out(T, kAmsBands * kAmsModulationBins);
  const std::size_t half = kAmsContextFrames / 2;
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t lo = t >= half ? t - half : 0;
    const std::size_t hi = std::min(T, t + half);  // [lo, hi)
    auto row = out.row(t);
    for (std::size_t b = 0; b < kAmsBands; ++b) {
      const auto bins = ams_modulation_bins(
          std::span<const double>(envelope[b].data() + lo, hi - lo));
      std::copy(bins.begin(), bins.end(),
                row.begin() + static_cast<long>(b * kAmsModulationBins));
    }
  }
  return out;
}

FeatureMatrix window_aggregate(const FeatureMatrix& base,
                               std::size_t window_w) {
  if (window_w == 0)
    throw std::invalid_argument("window_aggregate: zero window");
  const std::size_t half = window_w / 2;
  const std::size_t T = base.rows();
  FeatureMatrix out(T, base.dim());
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t lo = t >= half ? t - half : 0;
    const std::size_t hi = std::min(T - 1, t + half);
    auto row = out.row(t);
    for (std::size_t s = lo; s <= hi; ++s) {
      auto src = base.row(s);
      for (std::size_t d = 0; d < base.dim(); ++d) row[d] += src[d];
    }
    const double inv = 1.0 / static_cast<double>(hi - lo + 1);
    for (std::size_t d = 0; d < base.dim(); ++d) row[d] *= inv;
  }
  return out;
}

FeatureMatrix extract_all(const AudioSignal& utterance) {
  const FrameSequence frames = frame_signal(utterance);
  const std::size_t T = frames.size();
  if (T < kAmsContextFrames)
    throw std::invalid_argument(
        "utterance too short for the full feature pipeline");

  FeatureMatrix dft(T, 16), mfcc(T, kMfccCoeffs);
  std::vector<double> pitch(T);
  FeatureMatrix lpc(T, kLpcOrder);
  for (std::size_t t = 0; t < T; ++t) {
    const auto frame = frames.frame(t);
    pitch[t] = extract_pitch(frame, kProtocolSampleRate);
    const auto mag = magnitude_spectrum(frame);
    const auto bands = dft_bands_from_spectrum(mag);
    std::copy(bands.begin(), bands.end(), dft.row(t).begin());
    const auto ceps = mfcc_from_spectrum(mag);
    std::copy(ceps.begin(), ceps.end(), mfcc.row(t).begin());
    const auto lp = extract_lpc(frame);
    std::copy(lp.begin(), lp.end(), lpc.row(t).begin());
  }

  const FeatureMatrix dft8 = window_aggregate(dft, 8);
  const FeatureMatrix dft16 = window_aggregate(dft, 16);
  const FeatureMatrix mfcc8 = window_aggregate(mfcc, 8);
  const FeatureMatrix mfcc16 = window_aggregate(mfcc, 16);
  const FeatureMatrix rasta = extract_rasta_plp(frames);
  const FeatureMatrix ams = extract_ams(frames);

  FeatureMatrix out(T, kFeatureDim);
  for (std::size_t t = 0; t < T; ++t) {
    auto row = out.row(t);
    std::size_t off = 0;
    row[off++] = pitch[t];
    auto copy_block = [&](const FeatureMatrix& m) {
      auto src = m.row(t);
      std::copy(src.begin(), src.end(), row.begin() + static_cast<long>(off));
      off += src.size();
    };
    copy_block(dft);
    copy_block(dft8);
    copy_block(dft16);
    copy_block(mfcc);
    copy_block(mfcc8);
    copy_block(mfcc16);
    copy_block(lpc);
    copy_block(rasta);
    copy_block(ams);
  }
  return out;
}

Normalizer::Normalizer(std::vector<double> min, std::vector<double> max,
                       std::string source)
    : min_(std::move(min)), max_(std::move(max)), source_(std::move(source)) {
  if (min_.size() != max_.size())
    throw std::invalid_argument("Normalizer: min/max size mismatch");
  for (std::size_t d = 0; d < min_.size(); ++d)
    if (min_[d] > max_[d])
      throw std::invalid_argument("Normalizer: min > max");
}

void Normalizer::save_csv(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write normalizer: " + path.string());
  f << "# fit: " << source_ << "\n";
  f << "dim,min,max\n";
  char buf[128];
  for (std::size_t d = 0; d < min_.size(); ++d) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", d, min_[d], max_[d]);
    f << buf;
  }
}

Normalizer Normalizer::load_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read normalizer: " + path.string());
  std::string line;
  std::string source;
  std::vector<double> mins, maxs;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line.rfind("# fit: ", 0) == 0) {
      source = line.substr(7);
      continue;
    }
    if (line.rfind("dim,", 0) == 0) continue;
    std::size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::runtime_error("bad normalizer row: " + line);
    mins.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
    maxs.push_back(std::stod(line.substr(c2 + 1)));
  }
  return Normalizer(std::move(mins), std::move(maxs), std::move(source));
}

Normalizer fit_normalizer(const std::vector<const FeatureMatrix*>& matrices,
                          std::string source) {
  std::size_t dim = 0, total_rows = 0;
  for (const auto* m : matrices) {
    if (m->rows() == 0) continue;
    if (dim == 0) dim = m->dim();
    if (m->dim() != dim)
      throw std::invalid_argument("fit_normalizer: dimension mismatch");
    total_rows += m->rows();
  }
  if (total_rows == 0)
    throw std::invalid_argument("fit_normalizer: no rows to fit on");

  std::vector<double> mins(dim, std::numeric_limits<double>::infinity());
  std::vector<double> maxs(dim, -std::numeric_limits<double>::infinity());
  for (const auto* m : matrices) {
    for (std::size_t i = 0; i < m->rows(); ++i) {
      auto row = m->row(i);
      for (std::size_t d = 0; d < dim; ++d) {
        mins[d] = std::min(mins[d], row[d]);
        maxs[d] = std::max(maxs[d], row[d]);
      }
    }
  }
  return Normalizer(std::move(mins), std::move(maxs), std::move(source));
}

FeatureMatrix apply_normalizer(const Normalizer& n, const FeatureMatrix& m) {
  if (n.dim() != m.dim())
    throw std::invalid_argument("apply_normalizer: dimension mismatch");
  FeatureMatrix out(m.rows(), m.dim());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto src = m.row(i);
    auto dst = out.row(i);
    for (std::size_t d = 0; d < m.dim(); ++d) {
      if (n.is_constant(d)) {
        dst[d] = 0.5;
      } else {
        dst[d] = std::clamp((src[d] - n.min(d)) / (n.max(d) - n.min(d)), 0.0,
                            1.0);
      }
    }
  }
  if (m.has_labels()) out.set_labels(m.labels());
  return out;
}

std::vector<double> compute_centroid(const FeatureMatrix& m) {
  if (m.rows() == 0)
    throw std::invalid_argument("compute_centroid: empty matrix");
  std::vector<double> c(m.dim(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    for (std::size_t d = 0; d < m.dim(); ++d) c[d] += row[d];
  }
  for (double& v : c) v /= static_cast<double>(m.rows());
  return c;
}

namespace {
constexpr char kFeatureMagic[4] = {'V', 'F', 'T', '1'};
}

void save_feature_file(const std::filesystem::path& path,
                       const FeatureMatrix& m) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write features: " + path.string());
  std::uint32_t header[3] = {static_cast<std::uint32_t>(m.rows()),
                             static_cast<std::uint32_t>(m.dim()), 0};
  f.write(kFeatureMagic, 4);
  f.write(reinterpret_cast<const char*>(header), 12);
  std::vector<float> row32(m.dim());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    for (std::size_t d = 0; d < m.dim(); ++d)
      row32[d] = static_cast<float>(row[d]);
    f.write(reinterpret_cast<const char*>(row32.data()),
            static_cast<std::streamsize>(sizeof(float) * row32.size()));
  }
}

FeatureMatrix load_feature_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read features: " + path.string());
  char magic[4];
  std::uint32_t header[3];
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(header), 12);
  if (!f || std::memcmp(magic, kFeatureMagic, 4) != 0)
    throw std::runtime_error("bad feature file header: " + path.string());
  FeatureMatrix m(header[0], header[1]);
  std::vector<float> row32(header[1]);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    f.read(reinterpret_cast<char*>(row32.data()),
           static_cast<std::streamsize>(sizeof(float) * row32.size()));
    if (!f)
      throw std::runtime_error("truncated feature file: " + path.string());
    auto row = m.row(i);
    for (std::size_t d = 0; d < m.dim(); ++d)
      row[d] = static_cast<double>(row32[d]);
  }
  return m;
}

void export_feature_csv(const std::filesystem::path& path,
                        const FeatureMatrix& m) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write CSV: " + path.string());
  char buf[64];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    for (std::size_t d = 0; d < m.dim(); ++d) {
      std::snprintf(buf, sizeof buf, "%.9g", row[d]);
      f << buf << (d + 1 == m.dim() ? '\n' : ',');
    }
  }
}

}  // namespace vadtl
