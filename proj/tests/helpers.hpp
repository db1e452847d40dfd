#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "vadtl/corpus.hpp"
#include "vadtl/rng.hpp"
#include "vadtl/signal.hpp"
#include "vadtl/synth.hpp"

namespace testutil {

namespace fs = std::filesystem;

/// Fresh scratch directory under the build tree, wiped on construction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(fs::temp_directory_path() / "vadtl_tests" / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

inline vadtl::AudioSignal sine(double hz, double seconds, double amp = 0.9,
                               int rate = 8000) {
  vadtl::AudioSignal s;
  s.sample_rate = rate;
  const auto n = static_cast<std::size_t>(seconds * rate);
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    s.samples[i] = amp * std::sin(2.0 * 3.14159265358979323846 * hz *
                                  static_cast<double>(i) / rate);
  return s;
}

inline vadtl::AudioSignal white_noise(double seconds, std::uint64_t seed,
                                      double amp = 0.3, int rate = 8000) {
  vadtl::AudioSignal s;
  s.sample_rate = rate;
  const auto n = static_cast<std::size_t>(seconds * rate);
  s.samples.resize(n);
  std::mt19937_64 rng(seed);
  vadtl::NormalDraw normal;
  for (auto& v : s.samples) v = amp * 0.33 * normal(rng);
  return s;
}

/// Tiny synthetic corpus on disk: surrogate clean speech mixed with a
/// built-in noise kind.
inline vadtl::CorpusManifest make_corpus(const fs::path& dir,
                                         const std::string& noise_kind,
                                         vadtl::SplitCounts counts,
                                         std::uint64_t seed,
                                         double snr_db = 5.0,
                                         double utt_seconds = 1.0) {
  fs::create_directories(dir / "pool");
  std::vector<fs::path> pool;
  for (std::size_t i = 0; i < counts.total(); ++i) {
    const fs::path p = dir / "pool" / ("c" + std::to_string(i) + ".wav");
    vadtl::write_wav(p, vadtl::synth_clean_utterance(
                            utt_seconds, vadtl::derive_seed(seed, {77, i})));
    pool.push_back(p);
  }
  const fs::path noise_path = dir / "noise.wav";
  vadtl::write_wav(noise_path,
                   vadtl::synth_noise(noise_kind, 30.0,
                                      vadtl::derive_seed(seed, {99})));
  vadtl::SynthesisParams params;
  params.out_dir = dir;
  params.noise_type = noise_kind;
  params.snr_db = snr_db;
  params.counts = counts;
  params.seed = seed;
  return vadtl::synthesize_corpus(pool, noise_path, params);
}

}  // namespace testutil
