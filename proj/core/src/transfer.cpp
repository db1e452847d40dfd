#include "vadtl/transfer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "vadtl/rng.hpp"

namespace vadtl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t fingerprint_labeled(const FeatureMatrix& m) {
  std::uint64_t h = 1469598103934665603ULL;
  h = fnv1a(m.data().data(), m.data().size() * sizeof(double), h);
  if (m.has_labels())
    h = fnv1a(m.labels().data(), m.labels().size() * sizeof(FrameLabel), h);
  return h;
}

std::string split_resource(const CorpusManifest& m, const std::string& split) {
  return "labels:" + m.noise_type + ":" + split;
}

FeatureMatrix without_labels(FeatureMatrix m) {
  m.clear_labels();
  return m;
}

struct PretrainedPipeline {
  Normalizer normalizer;
  NetworkStack noisy_stack;
  double pretrain_s = 0.0;
};

// Accompanying clean network plus denoising noisy stack, trained on an
// already-normalized pair.
NetworkStack pretrain_pair_stacks(const FeatureMatrix& noisy_norm,
                                  const FeatureMatrix& clean_norm,
                                  std::size_t depth, const TrainConfig& cfg) {
  const auto clean_pre = pretrain_clean_stack(clean_norm, depth, cfg);
  PretrainPair pair{without_labels(noisy_norm), without_labels(clean_norm)};
  return pretrain_noisy_stack(pair, clean_pre.stack, depth, cfg).stack;
}

// LB/UB/S1/S2 share one pipeline: fit the normalizer on the pre-training
// pair, pre-train both stacks on it.
PretrainedPipeline pretrain_pipeline(const FeatureMatrix& pre_noisy_raw,
                                     const FeatureMatrix& pre_clean_raw,
                                     const std::string& source_desc,
                                     std::size_t depth,
                                     const TrainConfig& cfg) {
  PretrainedPipeline out;
  out.normalizer = fit_normalizer({&pre_noisy_raw, &pre_clean_raw},
                                  source_desc);
  const FeatureMatrix noisy = apply_normalizer(out.normalizer, pre_noisy_raw);
  const FeatureMatrix clean = apply_normalizer(out.normalizer, pre_clean_raw);
  const auto t0 = Clock::now();
  out.noisy_stack = pretrain_pair_stacks(noisy, clean, depth, cfg);
  out.pretrain_s = seconds_since(t0);
  return out;
}

// Fine-tune on the labeled train split, select on dev, evaluate on the
// target test split. Fills everything but pretrain_s.
void finetune_and_evaluate(const TransferTask& task,
                           const CorpusManifest& finetune_corpus,
                           const Normalizer& normalizer,
                           const NetworkStack& pretrained,
                           const TrainConfig& cfg, RunContext& ctx,
                           SingleRun& run) {
  const LoadedSplit& train_raw = ctx.data->split(finetune_corpus, "train");
  const LoadedSplit& dev_raw = ctx.data->split(finetune_corpus, "dev");

  run.audit.finetune_data_fingerprint = fingerprint_labeled(train_raw.noisy);
  run.audit.label_events.emplace_back("finetune",
                                      split_resource(finetune_corpus, "train"));
  run.audit.label_events.emplace_back("select",
                                      split_resource(finetune_corpus, "dev"));

  const FeatureMatrix train = apply_normalizer(normalizer, train_raw.noisy);
  const FeatureMatrix dev = apply_normalizer(normalizer, dev_raw.noisy);

  const auto t0 = Clock::now();
  FinetuneResult ft = finetune(pretrained, train, cfg, dev);
  run.finetune_s = seconds_since(t0);
  run.best_epoch = ft.best_epoch;

  const LoadedSplit& test_raw = ctx.data->split(task.target, "test");
  run.audit.label_events.emplace_back("evaluate",
                                      split_resource(task.target, "test"));
  const FeatureMatrix test = apply_normalizer(normalizer, test_raw.noisy);
  const Predictions preds = predict(ft.stack, test);
  run.accuracy_pct = accuracy(preds.labels, test_raw.noisy.labels());

  run.model = std::move(ft.stack);
  run.normalizer = normalizer;
}

SingleRun run_lb_ub(const TransferTask& task, std::uint64_t seed,
                    RunContext& ctx, bool upper_bound) {
  const CorpusManifest& train_corpus =
      upper_bound ? task.target : task.source;
  TrainConfig cfg = task.cfg;
  cfg.seed = seed;

  const LoadedSplit& pre_raw = ctx.data->split(train_corpus, "train");
  SingleRun run;
  auto pipe = pretrain_pipeline(pre_raw.noisy, pre_raw.clean,
                                "corpus:" + train_corpus.noise_type + ":train",
                                task.depth, cfg);
  run.pretrain_s = pipe.pretrain_s;
  finetune_and_evaluate(task, train_corpus, pipe.normalizer, pipe.noisy_stack,
                        cfg, ctx, run);
  return run;
}

SingleRun run_s1(const TransferTask& task, std::uint64_t seed,
                 RunContext& ctx) {
  if (task.adaptation.empty())
    throw std::invalid_argument("Scheme 1: empty adaptation segment");
  TrainConfig cfg = task.cfg;
  cfg.seed = seed;

  const LoadedPair& seg = ctx.data->segment(task.adaptation);
  SingleRun run;
  auto pipe = pretrain_pipeline(
      seg.noisy, seg.clean, "segment:" + task.adaptation.noise_type,
      task.depth, cfg);
  run.pretrain_s = pipe.pretrain_s;
  finetune_and_evaluate(task, task.source, pipe.normalizer, pipe.noisy_stack,
                        cfg, ctx, run);
  return run;
}

SingleRun run_s2(const TransferTask& task, std::uint64_t seed,
                 RunContext& ctx) {
  TrainConfig cfg = task.cfg;
  cfg.seed = seed;

  const LoadedSplit& src = ctx.data->split(task.source, "train");
  const LoadedPair& seg = ctx.data->segment(task.adaptation);

  // pooled pre-training corpus: source rows first, then the segment
  FeatureMatrix pooled_noisy = without_labels(src.noisy);
  pooled_noisy.append(seg.noisy);
  FeatureMatrix pooled_clean = src.clean;
  pooled_clean.append(seg.clean);

  SingleRun run;
  auto pipe = pretrain_pipeline(pooled_noisy, pooled_clean,
                                "pooled:" + task.source.noise_type + "+" +
                                    task.adaptation.noise_type,
                                task.depth, cfg);
  run.pretrain_s = pipe.pretrain_s;
  finetune_and_evaluate(task, task.source, pipe.normalizer, pipe.noisy_stack,
                        cfg, ctx, run);
  return run;
}

SingleRun run_s3(const TransferTask& task, std::uint64_t seed, char variant,
                 RunContext& ctx) {
  if (task.depth < 2)
    throw std::invalid_argument("Scheme 3 requires depth >= 2");
  if (task.adaptation.empty())
    throw std::invalid_argument("Scheme 3: empty adaptation segment");
  TrainConfig cfg = task.cfg;
  cfg.seed = seed;
  const std::size_t lower_depth = task.depth - 1;

  SingleRun run;
  const auto t0 = Clock::now();

  // source lower stack: trained once per (source, depth, seed), reused
  // across targets
  const std::string key = task.source.root.string() + "|" +
                          std::to_string(lower_depth) + "|" +
                          std::to_string(seed);
  auto build_source = [&]() -> std::shared_ptr<SourceStackEntry> {
    const LoadedSplit& src = ctx.data->split(task.source, "train");
    auto entry = std::make_shared<SourceStackEntry>();
    entry->normalizer =
        fit_normalizer({&src.noisy, &src.clean},
                       "corpus:" + task.source.noise_type + ":train");
    const FeatureMatrix noisy = apply_normalizer(entry->normalizer, src.noisy);
    const FeatureMatrix clean = apply_normalizer(entry->normalizer, src.clean);
    const auto clean_pre = pretrain_clean_stack(clean, lower_depth, cfg);
    entry->clean_stack = clean_pre.stack;
    PretrainPair pair{without_labels(noisy), without_labels(clean)};
    entry->noisy_stack =
        pretrain_noisy_stack(pair, clean_pre.stack, lower_depth, cfg).stack;
    return entry;
  };
  std::shared_ptr<SourceStackEntry> source_entry;
  if (ctx.source_cache != nullptr) {
    source_entry = ctx.source_cache->get_or_train(key, build_source);
  } else {
    source_entry = build_source();
  }

  // target lower stack on the adaptation segment only
  const LoadedPair& seg = ctx.data->segment(task.adaptation);
  const Normalizer target_norm = fit_normalizer(
      {&seg.noisy, &seg.clean}, "segment:" + task.adaptation.noise_type);
  const FeatureMatrix seg_noisy = apply_normalizer(target_norm, seg.noisy);
  const FeatureMatrix seg_clean = apply_normalizer(target_norm, seg.clean);
  const auto target_clean_pre =
      pretrain_clean_stack(seg_clean, lower_depth, cfg);
  const NetworkStack target_noisy_stack =
      pretrain_noisy_stack(PretrainPair{seg_noisy, seg_clean},
                           target_clean_pre.stack, lower_depth, cfg)
          .stack;

  // hybrid top layer: pooled source/target representations, natural volumes
  const LoadedSplit& src = ctx.data->split(task.source, "train");
  const FeatureMatrix src_noisy_n =
      apply_normalizer(source_entry->normalizer, src.noisy);
  const FeatureMatrix src_clean_n =
      apply_normalizer(source_entry->normalizer, src.clean);

  FeatureMatrix top_input =
      without_labels(source_entry->noisy_stack.encode(src_noisy_n));
  top_input.append(target_noisy_stack.encode(seg_noisy));
  FeatureMatrix top_target =
      without_labels(source_entry->clean_stack.encode(src_clean_n));
  top_target.append(target_clean_pre.stack.encode(seg_clean));

  auto top = train_denoising_layer(top_input, top_target,
                                   kHiddenWidths[task.depth - 1], cfg,
                                   pretrain_layer_seed(cfg.seed, task.depth - 1));

  // assemble: lower layers by variant, hybrid top on top
  NetworkStack stack;
  const Normalizer& norm =
      variant == 't' ? target_norm : source_entry->normalizer;
  const NetworkStack& lower =
      variant == 't' ? target_noisy_stack : source_entry->noisy_stack;
  stack.input_dim = lower.input_dim;
  stack.hidden = lower.hidden;
  stack.hidden.push_back(std::move(top.layer));
  stack.output.w.assign(stack.top_width(), 0.0);

  run.pretrain_s = seconds_since(t0);
  finetune_and_evaluate(task, task.source, norm, stack, cfg, ctx, run);
  return run;
}

SchemeResult collect_runs(const TransferTask& task, RunContext& ctx) {
  SchemeResult res;
  res.scheme = task.scheme;
  res.depth = task.depth;
  for (std::uint64_t seed : task.run_seeds) {
    SingleRun run = run_single(task, seed, ctx);
    res.seeds.push_back(seed);
    res.per_seed_accuracy.push_back(run.accuracy_pct);
    res.per_seed_pretrain_s.push_back(run.pretrain_s);
    res.per_seed_finetune_s.push_back(run.finetune_s);
    res.runs.push_back(std::move(run));
  }
  return res;
}

TransferTask with_scheme(const TransferTask& task, Scheme s) {
  TransferTask t = task;
  t.scheme = s;
  return t;
}

}  // namespace

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::LB: return "LB";
    case Scheme::S1: return "S1";
    case Scheme::S2: return "S2";
    case Scheme::S3t: return "S3t";
    case Scheme::S3s: return "S3s";
    case Scheme::UB: return "UB";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "LB") return Scheme::LB;
  if (name == "S1") return Scheme::S1;
  if (name == "S2") return Scheme::S2;
  if (name == "S3t") return Scheme::S3t;
  if (name == "S3s") return Scheme::S3s;
  if (name == "UB") return Scheme::UB;
  throw std::invalid_argument("unknown scheme: " + name);
}

void TransferTask::validate() const {
  if (depth < 1 || depth > 3)
    throw std::invalid_argument("TransferTask: depth must be 1..3");
  if ((scheme == Scheme::S3t || scheme == Scheme::S3s) && depth < 2)
    throw std::invalid_argument("TransferTask: Scheme 3 requires depth >= 2");
  if (run_seeds.empty())
    throw std::invalid_argument("TransferTask: no run seeds");
}

double SchemeResult::mean_accuracy() const {
  double acc = 0.0;
  for (double a : per_seed_accuracy) acc += a;
  return per_seed_accuracy.empty()
             ? 0.0
             : acc / static_cast<double>(per_seed_accuracy.size());
}

const LoadedSplit& DataCache::split(const CorpusManifest& m,
                                    const std::string& split) {
  const std::string key = m.root.string() + "|" + split;
  std::lock_guard<std::mutex> lock(mu_);
  auto it = splits_.find(key);
  if (it == splits_.end()) {
    auto loaded = std::make_unique<LoadedSplit>(load_split_raw(m, split));
    it = splits_.emplace(key, std::move(loaded)).first;
  }
  return *it->second;
}

const LoadedPair& DataCache::segment(const AdaptationSegment& seg) {
  std::string key = seg.root.string() + "|segment";
  for (const auto& f : seg.fragments)
    key += "|" + f.id + ":" + std::to_string(f.samples);
  std::lock_guard<std::mutex> lock(mu_);
  auto it = segments_.find(key);
  if (it == segments_.end()) {
    auto loaded = std::make_unique<LoadedPair>(load_segment_raw(seg));
    it = segments_.emplace(key, std::move(loaded)).first;
  }
  return *it->second;
}

std::shared_ptr<SourceStackEntry> SourceStackCache::get_or_train(
    const std::string& key, const Builder& build) {
  std::shared_future<std::shared_ptr<SourceStackEntry>> fut;
  bool is_builder = false;
  std::promise<std::shared_ptr<SourceStackEntry>> promise;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key);
    if (it != entries_.end()) {
      ++hits_;
      fut = it->second;
    } else {
      ++misses_;
      fut = promise.get_future().share();
      entries_.emplace(key, fut);
      is_builder = true;
    }
  }
  if (is_builder) {
    try {
      promise.set_value(build());
    } catch (...) {
      promise.set_exception(std::current_exception());
      throw;
    }
  }
  return fut.get();
}

SingleRun run_single(const TransferTask& task, std::uint64_t seed,
                     RunContext& ctx) {
  task.validate();
  if (ctx.data == nullptr)
    throw std::invalid_argument("run_single: missing data cache");
  switch (task.scheme) {
    case Scheme::LB: return run_lb_ub(task, seed, ctx, false);
    case Scheme::UB: return run_lb_ub(task, seed, ctx, true);
    case Scheme::S1: return run_s1(task, seed, ctx);
    case Scheme::S2: return run_s2(task, seed, ctx);
    case Scheme::S3t: return run_s3(task, seed, 't', ctx);
    case Scheme::S3s: return run_s3(task, seed, 's', ctx);
  }
  throw std::logic_error("run_single: unreachable");
}

SchemeResult run_lb(const TransferTask& task, RunContext& ctx) {
  return collect_runs(with_scheme(task, Scheme::LB), ctx);
}
SchemeResult run_ub(const TransferTask& task, RunContext& ctx) {
  return collect_runs(with_scheme(task, Scheme::UB), ctx);
}
SchemeResult run_scheme1(const TransferTask& task, RunContext& ctx) {
  return collect_runs(with_scheme(task, Scheme::S1), ctx);
}
SchemeResult run_scheme2(const TransferTask& task, RunContext& ctx) {
  return collect_runs(with_scheme(task, Scheme::S2), ctx);
}
SchemeResult run_scheme3(const TransferTask& task, char variant,
                         RunContext& ctx) {
  if (variant != 't' && variant != 's')
    throw std::invalid_argument("run_scheme3: variant must be 't' or 's'");
  return collect_runs(
      with_scheme(task, variant == 't' ? Scheme::S3t : Scheme::S3s), ctx);
}
SchemeResult run_task(const TransferTask& task, RunContext& ctx) {
  return collect_runs(task, ctx);
}

ResultTable run_task_matrix(const std::vector<TransferTask>& tasks,
                            const MatrixOptions& options) {
  struct Unit {
    const TransferTask* task;
    std::uint64_t seed;
  };
  std::vector<Unit> units;
  for (const auto& task : tasks) {
    for (std::uint64_t seed : task.run_seeds) {
      if (options.completed.contains(result_key(task.pair_name(), task.depth,
                                                to_string(task.scheme), seed)))
        continue;
      units.push_back({&task, seed});
    }
  }

  DataCache data;
  SourceStackCache internal_cache;
  RunContext ctx{&data, options.source_cache != nullptr
                            ? options.source_cache
                            : &internal_cache};

  ResultTable table;
  std::mutex table_mu;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < units.size();
         i = next.fetch_add(1)) {
      const Unit& u = units[i];
      try {
        SingleRun run = run_single(*u.task, u.seed, ctx);
        std::lock_guard<std::mutex> lock(table_mu);
        table.rows.push_back(ResultRow{u.task->pair_name(), u.task->depth,
                                       to_string(u.task->scheme), u.seed,
                                       run.accuracy_pct, run.pretrain_s,
                                       run.finetune_s});
        if (options.on_run_complete)
          options.on_run_complete(*u.task, u.seed, run);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(table_mu);
        table.failures.push_back(
            result_key(u.task->pair_name(), u.task->depth,
                       to_string(u.task->scheme), u.seed) +
            ": " + e.what());
      }
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, options.jobs);
  if (jobs == 1 || units.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < std::min(jobs, units.size()); ++j)
      pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  table.sort_rows();
  return table;
}

}  // namespace vadtl
