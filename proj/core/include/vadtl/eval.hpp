#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vadtl/features.hpp"
#include "vadtl/signal.hpp"

namespace vadtl {

/// 100 * matching frames / total frames. Throws on empty or mismatched
/// inputs.
double accuracy(std::span<const FrameLabel> predicted,
                std::span<const FrameLabel> reference);

/// exp(-||a - b||^2 / 2) over feature centroids.
double similarity(std::span<const double> a, std::span<const double> b);

struct SimilarityMatrix {
  std::vector<std::string> names;
  std::vector<double> values;  // n x n row-major

  std::size_t size() const { return names.size(); }
  double at(std::size_t i, std::size_t j) const {
    return values[i * names.size() + j];
  }
};

/// Pairwise centroid similarity over unnormalized corpora; a shared
/// normalizer is fit on their union so the centroids are comparable.
/// Requires at least two corpora.
SimilarityMatrix similarity_matrix(
    const std::vector<const FeatureMatrix*>& corpora,
    const std::vector<std::string>& names);

void save_similarity_csv(const std::filesystem::path& path,
                         const SimilarityMatrix& m);

/// Hinton-style diagram: one square per corpus pair, side proportional to
/// the similarity value. Standalone SVG.
void emit_hinton_svg(const std::filesystem::path& path,
                     const SimilarityMatrix& m);

/// One completed training run.
struct ResultRow {
  std::string pair;    // "<source>-><target>"
  std::size_t depth = 0;
  std::string scheme;  // LB | S1 | S2 | S3t | S3s | UB
  std::uint64_t seed = 0;
  double accuracy_pct = 0.0;
  double pretrain_s = 0.0;
  double finetune_s = 0.0;
};

/// Accuracies per (noise pair, depth, scheme), one entry per seed, with
/// means recomputable from the per-seed values.
struct ResultTable {
  std::vector<ResultRow> rows;
  std::vector<std::string> failures;  // "pair,depth,scheme,seed: error"

  void sort_rows();
  double cell_mean(const std::string& pair, std::size_t depth,
                   const std::string& scheme) const;
};

/// CSV schema: pair,depth,scheme,seed,accuracy_pct,pretrain_s,finetune_s.
void save_results_csv(const std::filesystem::path& path, const ResultTable& t);
ResultTable load_results_csv(const std::filesystem::path& path);

/// Text rendering that mirrors the published column structure: one block
/// per depth, rows "<pair> | LB xx.xx | S1 xx.xx | ... | UB xx.xx"
/// (schemes in protocol order, only those present).
std::string render_result_table(const ResultTable& t);

void emit_result_table(const std::filesystem::path& path, const ResultTable& t,
                       const std::string& format);  // "csv" or "text"

}  // namespace vadtl
