#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vadtl/features.hpp"
#include "vadtl/signal.hpp"

namespace vadtl {

struct UtteranceEntry {
  std::string id;
  std::string noisy;   // paths relative to the manifest directory
  std::string clean;
  std::string labels;
  std::string split;   // train | dev | test
  std::size_t samples = 0;
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;

  std::size_t total() const { return train + dev + test; }
};

/// Synthetic noisy-speech corpus: per-noise-type utterances with disjoint
/// train/dev/test splits, each noisy WAV paired with its clean counterpart
/// and a frame-label sidecar.
struct CorpusManifest {
  std::string noise_type;
  double snr_db = 5.0;
  std::vector<UtteranceEntry> utterances;
  std::filesystem::path root;  // directory holding manifest.json

  std::vector<const UtteranceEntry*> split(const std::string& name) const;
  std::filesystem::path resolve(const std::string& rel) const {
    return root / rel;
  }
};

void save_manifest(const CorpusManifest& manifest);
CorpusManifest load_manifest(const std::filesystem::path& manifest_json);

struct SynthesisParams {
  std::filesystem::path out_dir;
  std::string noise_type;
  double snr_db = 5.0;
  SplitCounts counts;
  std::uint64_t seed = 1;
  double label_threshold_db = kDefaultLabelThresholdDb;
};

/// Mixes each pooled clean utterance with a random-offset excerpt of the
/// noise recording at the requested SNR, writes
/// <out>/<split>/<id>.{noisy.wav,clean.wav,labels.txt} and the manifest.
/// Deterministic given the seed. Throws if the clean pool is too small or
/// the noise file is silent.
CorpusManifest synthesize_corpus(
    const std::vector<std::filesystem::path>& clean_pool,
    const std::filesystem::path& noise_wav, const SynthesisParams& params);

struct SegmentFragment {
  std::string id;
  std::string noisy;
  std::string clean;
  std::size_t samples = 0;  // prefix length used (== utterance length when whole)
};

/// Unlabeled audio drawn from the train split for adaptation pre-training.
struct AdaptationSegment {
  std::string noise_type;
  double requested_s = 0.0;
  std::filesystem::path root;
  std::vector<SegmentFragment> fragments;

  std::size_t total_samples() const;
  bool empty() const { return fragments.empty(); }
};

/// Randomly draws whole train-split utterances until the duration budget is
/// met, trimming the last one. Total duration lands within 2% of the
/// request. Deterministic given the seed.
AdaptationSegment draw_adaptation_segment(const CorpusManifest& manifest,
                                          double duration_s,
                                          std::uint64_t seed);

/// The whole named split as a segment (adaptation := source train set).
AdaptationSegment segment_from_split(const CorpusManifest& manifest,
                                     const std::string& split);

struct LoadedSplit {
  FeatureMatrix noisy;  // labeled
  FeatureMatrix clean;  // row-aligned with noisy
};

/// Concatenated unnormalized features of a split, labels attached to the
/// noisy matrix. Cached .feat files are used when present, otherwise
/// features are extracted from the WAVs. Throws on missing files or
/// label/frame count mismatches.
LoadedSplit load_split_raw(const CorpusManifest& manifest,
                           const std::string& split);

/// Spec-shaped convenience: normalized labeled features plus the
/// row-aligned clean counterpart.
LoadedSplit load_features(const CorpusManifest& manifest,
                          const std::string& split, const Normalizer& n);

struct LoadedPair {
  FeatureMatrix noisy;
  FeatureMatrix clean;
};

/// Unnormalized feature pair of an adaptation segment (no labels). Fragment
/// prefixes keep the leading frames of the full-utterance feature matrix.
LoadedPair load_segment_raw(const AdaptationSegment& segment);

/// Extracts and caches .feat files (noisy + clean) for every utterance of
/// the given splits; optionally mirrors them as CSV. Returns the number of
/// utterances processed.
std::size_t extract_features(const CorpusManifest& manifest,
                             const std::vector<std::string>& splits,
                             bool export_csv = false, std::size_t jobs = 1);

}  // namespace vadtl
