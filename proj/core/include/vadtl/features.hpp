#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vadtl/signal.hpp"

namespace vadtl {

/// Per-frame acoustic feature rows (row-major), optionally labeled.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t dim)
      : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return rows_ == 0; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool has_labels() const { return !labels_.empty(); }
  const std::vector<FrameLabel>& labels() const { return labels_; }
  void set_labels(std::vector<FrameLabel> labels);
  void clear_labels() { labels_.clear(); }

  /// Appends the rows (and labels, when both sides carry them) of other.
  void append(const FeatureMatrix& other);

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
  std::vector<FrameLabel> labels_;
};

struct FeatureBlock {
  const char* name;
  std::size_t dim;
};

/// The ten feature blocks, in row order. Windowed variants average the
/// base feature over the surrounding 8/16-frame window and keep its
/// dimension.
inline constexpr std::array<FeatureBlock, 10> kFeatureLayout = {{
    {"pitch", 1},
    {"dft", 16},
    {"dft_w8", 16},
    {"dft_w16", 16},
    {"mfcc", 20},
    {"mfcc_w8", 20},
    {"mfcc_w16", 20},
    {"lpc", 12},
    {"rasta_plp", 17},
    {"ams", 135},
}};

inline constexpr std::size_t kFeatureDim = 273;

inline constexpr std::size_t kFftSize = 256;
inline constexpr std::size_t kMelFilters = 26;
inline constexpr std::size_t kMfccCoeffs = 20;
inline constexpr std::size_t kLpcOrder = 12;
inline constexpr std::size_t kPlpModelOrder = 16;
inline constexpr std::size_t kPlpCepstra = 17;
inline constexpr std::size_t kAmsBands = 9;
inline constexpr std::size_t kAmsModulationBins = 15;
inline constexpr std::size_t kAmsContextFrames = 32;
inline constexpr std::size_t kRastaWarmupFrames = 4;

/// Autocorrelation F0 estimate in Hz within [60, 400]; 0 for unvoiced or
/// silent frames.
double extract_pitch(std::span<const double> frame, int sample_rate = 8000);

/// Log mean magnitude over 16 equal-width bands covering 0-4 kHz
/// (Hamming window, 256-point FFT).
std::vector<double> extract_dft_bands(std::span<const double> frame);

/// 20 cepstral coefficients (C0-C19), 26-filter mel bank, DCT-II.
std::vector<double> extract_mfcc(std::span<const double> frame);

/// Order-12 linear-prediction coefficients (Levinson-Durbin on the
/// Hamming-windowed autocorrelation); all zeros for silence.
std::vector<double> extract_lpc(std::span<const double> frame);

/// RASTA-PLP cepstra (C0-C16) per frame. Throws if the utterance has
/// fewer frames than the RASTA warm-up requires (5).
FeatureMatrix extract_rasta_plp(const FrameSequence& frames);

/// Amplitude modulation spectrogram: 9 mel-spaced band envelopes x 15
/// modulation bins over a 32-frame context. Throws if the utterance is
/// shorter than the context.
FeatureMatrix extract_ams(const FrameSequence& frames);

/// Modulation magnitudes of one envelope context window (Hamming over the
/// available frames, zero-padded DFT, bins 0..14 at ~1.04 Hz spacing for a
/// 100 Hz frame rate). Bin 0 measures the envelope level; bins 1..14 are
/// taken on the mean-removed envelope so low modulation frequencies are
/// not masked by the level's spectral leakage.
std::vector<double> ams_modulation_bins(std::span<const double> envelope);

/// Per-frame mean of base rows over the symmetric window
/// [t - w/2, t + w/2], truncated at utterance bounds. Dimension preserved.
FeatureMatrix window_aggregate(const FeatureMatrix& base, std::size_t window_w);

/// Full 273-dim per-frame feature matrix (unnormalized, unlabeled).
FeatureMatrix extract_all(const AudioSignal& utterance);

/// Per-dimension min-max scaler fit on one or more corpora.
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(std::vector<double> min, std::vector<double> max,
             std::string source);

  std::size_t dim() const { return min_.size(); }
  double min(std::size_t d) const { return min_[d]; }
  double max(std::size_t d) const { return max_[d]; }
  bool is_constant(std::size_t d) const { return min_[d] == max_[d]; }
  const std::string& source() const { return source_; }

  void save_csv(const std::filesystem::path& path) const;
  static Normalizer load_csv(const std::filesystem::path& path);

 private:
  std::vector<double> min_, max_;
  std::string source_;
};

/// Fits per-dimension min/max over all rows of all inputs. Throws if the
/// inputs hold no rows.
Normalizer fit_normalizer(const std::vector<const FeatureMatrix*>& matrices,
                          std::string source);

/// x -> (x - min) / (max - min), clamped to [0, 1]; constant dimensions map
/// to 0.5. Labels are carried through.
FeatureMatrix apply_normalizer(const Normalizer& n, const FeatureMatrix& m);

/// Per-dimension arithmetic mean of a (normalized) matrix.
std::vector<double> compute_centroid(const FeatureMatrix& m);

/// Binary feature file: 16-byte header (magic, rows, dim) + row-major
/// 32-bit floats.
void save_feature_file(const std::filesystem::path& path,
                       const FeatureMatrix& m);
FeatureMatrix load_feature_file(const std::filesystem::path& path);

/// Debug CSV mirror of a feature matrix.
void export_feature_csv(const std::filesystem::path& path,
                        const FeatureMatrix& m);

}  // namespace vadtl
