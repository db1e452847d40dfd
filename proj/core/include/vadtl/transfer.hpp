#pragma once

#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "vadtl/corpus.hpp"
#include "vadtl/eval.hpp"
#include "vadtl/network.hpp"

namespace vadtl {

enum class Scheme { LB, S1, S2, S3t, S3s, UB };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);  // throws on unknown

/// One (source corpus, target corpus, scheme, depth) experiment unit,
/// repeated over run_seeds.
struct TransferTask {
  CorpusManifest source;
  CorpusManifest target;
  AdaptationSegment adaptation;
  Scheme scheme = Scheme::LB;
  std::size_t depth = 1;
  TrainConfig cfg;
  std::vector<std::uint64_t> run_seeds = {1, 2, 3, 4, 5};

  std::string pair_name() const {
    return source.noise_type + "->" + target.noise_type;
  }
  void validate() const;  // depth 1..3, S3 needs depth >= 2, seeds non-empty
};

/// Which labels were consumed in which phase; lets the harness verify that
/// target test labels never reach a training or model-selection path.
struct RunAudit {
  std::uint64_t finetune_data_fingerprint = 0;  // raw labeled source rows
  std::vector<std::pair<std::string, std::string>> label_events;
};

struct SingleRun {
  double accuracy_pct = 0.0;
  double pretrain_s = 0.0;
  double finetune_s = 0.0;
  NetworkStack model;
  Normalizer normalizer;
  RunAudit audit;
  std::size_t best_epoch = 0;
};

struct SchemeResult {
  Scheme scheme = Scheme::LB;
  std::size_t depth = 1;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed_accuracy;
  std::vector<double> per_seed_pretrain_s;
  std::vector<double> per_seed_finetune_s;
  std::vector<SingleRun> runs;

  double mean_accuracy() const;
};

/// Shared loads of split/segment features, keyed by manifest location.
class DataCache {
 public:
  const LoadedSplit& split(const CorpusManifest& m, const std::string& split);
  const LoadedPair& segment(const AdaptationSegment& seg);

 private:
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<LoadedSplit>> splits_;
  std::map<std::string, std::unique_ptr<LoadedPair>> segments_;
};

struct SourceStackEntry {
  Normalizer normalizer;
  NetworkStack clean_stack;
  NetworkStack noisy_stack;
};

/// Write-once-then-read-only cache of pre-trained source stacks, shared by
/// every Scheme 3 run of a task matrix (the source side is trained once per
/// (source, depth, seed) and reused across targets).
class SourceStackCache {
 public:
  using Builder = std::function<std::shared_ptr<SourceStackEntry>()>;

  std::shared_ptr<SourceStackEntry> get_or_train(const std::string& key,
                                                 const Builder& build);
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  std::mutex mu_;
  std::map<std::string, std::shared_future<std::shared_ptr<SourceStackEntry>>>
      entries_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

struct RunContext {
  DataCache* data = nullptr;
  SourceStackCache* source_cache = nullptr;  // optional
};

/// One training run of the task's scheme under one seed.
SingleRun run_single(const TransferTask& task, std::uint64_t seed,
                     RunContext& ctx);

/// Per-scheme entries: each runs every seed of the task and reports the
/// per-seed accuracies plus their mean. The task's scheme field must match.
SchemeResult run_lb(const TransferTask& task, RunContext& ctx);
SchemeResult run_ub(const TransferTask& task, RunContext& ctx);
SchemeResult run_scheme1(const TransferTask& task, RunContext& ctx);
SchemeResult run_scheme2(const TransferTask& task, RunContext& ctx);
SchemeResult run_scheme3(const TransferTask& task, char variant,
                         RunContext& ctx);
SchemeResult run_task(const TransferTask& task, RunContext& ctx);

inline std::string result_key(const std::string& pair, std::size_t depth,
                              const std::string& scheme, std::uint64_t seed) {
  return pair + "|" + std::to_string(depth) + "|" + scheme + "|" +
         std::to_string(seed);
}

struct MatrixOptions {
  std::size_t jobs = 1;
  std::set<std::string> completed;  // result_key()s to skip (resume)
  std::function<void(const TransferTask&, std::uint64_t, const SingleRun&)>
      on_run_complete;  // called under a lock; used to persist models
  SourceStackCache* source_cache = nullptr;  // shared cache; internal if null
};

/// Executes every (task, seed) combination; failures are recorded in the
/// table and the matrix continues.
ResultTable run_task_matrix(const std::vector<TransferTask>& tasks,
                            const MatrixOptions& options = {});

}  // namespace vadtl
