#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vadtl/features.hpp"

namespace vadtl {

/// Hidden-layer widths of the paper-protocol stacks, truncated to the
/// requested depth.
inline constexpr std::array<std::size_t, 3> kHiddenWidths = {54, 7, 7};

/// One sigmoid layer with tied decoder weights (decode uses W transposed)
/// and a separate decoder bias.
struct LayerWeights {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> W;      // out_dim x in_dim, row-major
  std::vector<double> b_enc;  // out_dim
  std::vector<double> b_dec;  // in_dim
};

struct OutputUnit {
  std::vector<double> w;
  double b = 0.0;
};

/// Sigmoid multilayer network: hidden encoder stack plus a scalar sigmoid
/// output unit. The encoder stack realizes the learned feature mapping.
struct NetworkStack {
  std::size_t input_dim = 0;
  std::vector<LayerWeights> hidden;
  OutputUnit output;

  std::size_t depth() const { return hidden.size(); }
  std::size_t top_width() const {
    return hidden.empty() ? input_dim : hidden.back().out_dim;
  }

  /// Deterministic encoding through all hidden layers.
  FeatureMatrix encode(const FeatureMatrix& x) const;

  /// Sigmoid output probability for one already-encoded top representation.
  double output_probability(std::span<const double> top_rep) const;
};

struct TrainConfig {
  double lr_pretrain = 0.004;
  std::size_t epochs_pretrain = 200;
  double lr_finetune = 0.005;
  std::size_t epochs_finetune = 130;
  std::size_t batch_size = 512;
  std::uint64_t seed = 1;
};

/// Row-aligned noisy/clean feature matrices, values in [0,1].
struct PretrainPair {
  FeatureMatrix noisy;
  FeatureMatrix clean;

  void validate() const;
};

/// W ~ uniform(-r, r) with r = sqrt(6 / (in_dim + out_dim)), zero biases.
LayerWeights init_layer(std::size_t in_dim, std::size_t out_dim,
                        std::uint64_t seed);

/// Seed of layer_index's pre-training stream under a run seed. Stacks of
/// different depths share the streams of their common lower layers.
std::uint64_t pretrain_layer_seed(std::uint64_t run_seed,
                                  std::size_t layer_index);

/// -sum_j [t_j ln r_j + (1 - t_j) ln(1 - r_j)], with r clamped away from
/// {0,1} so the result is always finite.
double reconstruction_ce(std::span<const double> target,
                         std::span<const double> reconstruction);

/// (epoch, mean-per-row loss on the full training set) pairs recorded at
/// epoch 0, every checkpoint_every epochs, and after the final epoch.
using LossCheckpoints = std::vector<std::pair<std::size_t, double>>;

struct LayerTrainResult {
  LayerWeights layer;
  LossCheckpoints checkpoints;
};

/// Greedy single-layer training: minimizes the reconstruction cross-entropy
/// between target rows and the decoded encoding of input rows by mini-batch
/// SGD (batch-mean gradients, last partial batch used).
LayerTrainResult train_denoising_layer(const FeatureMatrix& input,
                                       const FeatureMatrix& target,
                                       std::size_t out_dim,
                                       const TrainConfig& cfg,
                                       std::uint64_t layer_seed,
                                       std::size_t checkpoint_every = 20);

struct PretrainResult {
  NetworkStack stack;                     // output unit left at zero
  std::vector<FeatureMatrix> reps;        // reps[l] enters layer l; reps[depth] is the top
  std::vector<LossCheckpoints> layer_checkpoints;
};

/// Accompanying-network pre-training: each layer is an autoencoder on the
/// clean representation produced by the layers below it.
PretrainResult pretrain_clean_stack(
    const FeatureMatrix& clean, std::size_t depth, const TrainConfig& cfg,
    std::span<const std::size_t> widths = kHiddenWidths);

/// Denoising pre-training: layer l reconstructs the clean stack's level-(l-1)
/// representation from the noisy stack's level-(l-1) representation. The
/// clean stack must be trained on the pair's clean matrix.
PretrainResult pretrain_noisy_stack(
    const PretrainPair& pair, const NetworkStack& clean_stack,
    std::size_t depth, const TrainConfig& cfg,
    std::span<const std::size_t> widths = kHiddenWidths);

struct FinetuneResult {
  NetworkStack stack;        // snapshot with the best dev accuracy
  std::size_t best_epoch = 0;  // 0 = the initial (untuned) snapshot
  double best_dev_accuracy = 0.0;
  std::vector<double> dev_accuracy;  // index 0 = initial snapshot
};

/// Supervised fine-tuning of the whole stack plus a freshly initialized
/// output unit, by mini-batch SGD on the binary cross-entropy. Dev accuracy
/// is evaluated after every epoch; the best snapshot wins, ties going to
/// the earlier epoch.
FinetuneResult finetune(const NetworkStack& stack, const FeatureMatrix& train,
                        const TrainConfig& cfg, const FeatureMatrix& dev);

struct Predictions {
  std::vector<FrameLabel> labels;
  std::vector<double> probabilities;
};

/// Per-frame speech probability; label = speech iff probability > 0.5.
Predictions predict(const NetworkStack& stack, const FeatureMatrix& features);

/// Central-finite-difference check (h = 1e-5) of the fine-tuning gradient
/// over every parameter; returns the max relative error, with an absolute
/// fallback below 1e-9 for near-zero gradient pairs.
double gradient_check_finetune(const NetworkStack& stack,
                               const FeatureMatrix& labeled);

/// Same check for one layer's pre-training objective.
double gradient_check_pretrain_layer(const LayerWeights& layer,
                                     const FeatureMatrix& input,
                                     const FeatureMatrix& target);

/// Binary model file (versioned header, layers in order, output unit) plus
/// a JSON sidecar recording the train config, seed and normalizer reference.
void save_model(const std::filesystem::path& path, const NetworkStack& stack,
                const TrainConfig& cfg, const std::string& normalizer_ref);
NetworkStack load_model(const std::filesystem::path& path);

}  // namespace vadtl
