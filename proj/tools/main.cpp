// vadtl: synthesize noisy-speech corpora, extract features, run transfer
// experiments and render reports. Exit codes: 0 success, 1 task failures,
// 2 usage/validation errors, 3 I/O failures.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vadtl/corpus.hpp"
#include "vadtl/eval.hpp"
#include "vadtl/rng.hpp"
#include "vadtl/synth.hpp"
#include "vadtl/transfer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTaskFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

fs::path output_root() {
  if (const char* env = std::getenv("VADTL_OUT")) return fs::path(env);
  return fs::path(".");
}

std::vector<std::size_t> parse_counts(const std::string& spec) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const std::size_t c = spec.find(',', pos);
    out.push_back(std::stoul(spec.substr(pos, c - pos)));
    if (c == std::string::npos) break;
    pos = c + 1;
  }
  if (out.size() != 3)
    throw std::invalid_argument("--counts expects train,dev,test");
  return out;
}

int cmd_gen_corpus(const std::string& out_dir, const std::string& name,
                   const std::string& noise_spec, double snr,
                   const std::string& counts_spec, std::uint64_t seed,
                   const std::string& clean_dir, std::size_t synth_clean,
                   double clean_duration, double label_threshold) {
  const auto counts_v = parse_counts(counts_spec);
  vadtl::SplitCounts counts{counts_v[0], counts_v[1], counts_v[2]};

  fs::path out = out_dir.empty() ? output_root() / name : fs::path(out_dir);
  fs::create_directories(out);

  // noise: either an existing WAV or a built-in generator ("synth:<kind>")
  fs::path noise_path;
  if (noise_spec.rfind("synth:", 0) == 0) {
    const std::string kind = noise_spec.substr(6);
    noise_path = out / ("noise." + kind + ".wav");
    const auto noise = vadtl::synth_noise(
        kind, 60.0, vadtl::derive_seed(seed, {0x6e7367ULL}));
    vadtl::write_wav(noise_path, noise);
  } else {
    noise_path = noise_spec;
    if (!fs::exists(noise_path)) {
      std::cerr << "error: noise file not found: " << noise_path << "\n";
      return kExitUsage;
    }
  }

  std::vector<fs::path> pool;
  if (!clean_dir.empty()) {
    for (const auto& e : fs::directory_iterator(clean_dir))
      if (e.path().extension() == ".wav") pool.push_back(e.path());
    std::sort(pool.begin(), pool.end());
  } else {
    // surrogate clean speech, deterministic per seed
    const std::size_t n = synth_clean > 0 ? synth_clean : counts.total();
    const fs::path pool_dir = out / "clean_pool";
    fs::create_directories(pool_dir);
    char buf[32];
    for (std::size_t i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "c%04zu.wav", i);
      const fs::path p = pool_dir / buf;
      vadtl::write_wav(p, vadtl::synth_clean_utterance(
                              clean_duration,
                              vadtl::derive_seed(seed, {0x636cULL, i})));
      pool.push_back(p);
    }
  }

  vadtl::SynthesisParams params;
  params.out_dir = out;
  params.noise_type = name;
  params.snr_db = snr;
  params.counts = counts;
  params.seed = seed;
  params.label_threshold_db = label_threshold;

  const auto manifest = vadtl::synthesize_corpus(pool, noise_path, params);
  std::cout << "wrote " << manifest.utterances.size() << " utterances under "
            << out << "\n";
  return kExitOk;
}

int cmd_extract(const std::vector<std::string>& manifests,
                const std::string& splits_spec, bool export_csv,
                const std::string& normalizer_out, std::size_t jobs) {
  std::vector<std::string> splits;
  std::size_t pos = 0;
  while (pos <= splits_spec.size()) {
    const std::size_t c = splits_spec.find(',', pos);
    splits.push_back(splits_spec.substr(pos, c - pos));
    if (c == std::string::npos) break;
    pos = c + 1;
  }

  std::vector<vadtl::LoadedSplit> loaded;
  std::size_t total = 0;
  for (const auto& mp : manifests) {
    const auto manifest = vadtl::load_manifest(mp);
    total += vadtl::extract_features(manifest, splits, export_csv, jobs);
    if (!normalizer_out.empty())
      for (const auto& split : splits)
        loaded.push_back(vadtl::load_split_raw(manifest, split));
  }
  if (!normalizer_out.empty()) {
    std::vector<const vadtl::FeatureMatrix*> ptrs;
    for (const auto& l : loaded) {
      ptrs.push_back(&l.noisy);
      ptrs.push_back(&l.clean);
    }
    vadtl::fit_normalizer(ptrs, "extract:" + splits_spec)
        .save_csv(normalizer_out);
  }
  std::cout << "extracted features for " << total << " utterances\n";
  return kExitOk;
}

struct ExperimentConfig {
  fs::path output_dir;
  std::string source_manifest;
  std::vector<std::string> target_manifests;
  std::vector<std::string> schemes;
  std::vector<std::size_t> depths;
  std::vector<std::uint64_t> seeds;
  double adaptation_duration_s = 30.0;
  std::uint64_t adaptation_seed = 1234;
  vadtl::TrainConfig train;
  bool save_models = true;
};

ExperimentConfig parse_experiment_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config: " + path.string());
  json j;
  f >> j;

  ExperimentConfig cfg;
  cfg.output_dir = j.value("output_dir", (output_root() / "results").string());
  cfg.source_manifest = j.at("source").get<std::string>();
  for (const auto& t : j.at("targets"))
    cfg.target_manifests.push_back(t.get<std::string>());
  for (const auto& s : j.at("schemes"))
    cfg.schemes.push_back(s.get<std::string>());
  for (const auto& d : j.at("depths"))
    cfg.depths.push_back(d.get<std::size_t>());
  for (const auto& s : j.at("seeds"))
    cfg.seeds.push_back(s.get<std::uint64_t>());
  if (j.contains("adaptation")) {
    cfg.adaptation_duration_s = j["adaptation"].value("duration_s", 30.0);
    cfg.adaptation_seed = j["adaptation"].value("seed", 1234ULL);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    cfg.train.lr_pretrain = t.value("lr_pretrain", cfg.train.lr_pretrain);
    cfg.train.epochs_pretrain =
        t.value("epochs_pretrain", cfg.train.epochs_pretrain);
    cfg.train.lr_finetune = t.value("lr_finetune", cfg.train.lr_finetune);
    cfg.train.epochs_finetune =
        t.value("epochs_finetune", cfg.train.epochs_finetune);
    cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
  }
  cfg.save_models = j.value("save_models", true);
  return cfg;
}

std::string model_file_name(const vadtl::TransferTask& task,
                            std::uint64_t seed) {
  std::string pair = task.pair_name();
  for (char& c : pair)
    if (c == '>' || c == '<' || c == '/') c = '_';
  return pair + "." + vadtl::to_string(task.scheme) + ".d" +
         std::to_string(task.depth) + ".s" + std::to_string(seed) + ".vdn";
}

int cmd_run(const std::string& config_path, bool resume, std::size_t jobs,
            const std::string& out_override) {
  ExperimentConfig cfg = parse_experiment_config(config_path);
  if (!out_override.empty()) cfg.output_dir = out_override;

  // referenced paths must exist at validation time
  if (!fs::exists(cfg.source_manifest))
    throw std::invalid_argument("source manifest not found: " +
                                cfg.source_manifest);
  for (const auto& t : cfg.target_manifests)
    if (!fs::exists(t))
      throw std::invalid_argument("target manifest not found: " + t);
  if (cfg.seeds.empty()) throw std::invalid_argument("empty seed list");
  fs::create_directories(cfg.output_dir);
  const fs::path csv_path = cfg.output_dir / "results.csv";
  const fs::path models_dir = cfg.output_dir / "models";
  if (cfg.save_models) fs::create_directories(models_dir);

  const auto source = vadtl::load_manifest(cfg.source_manifest);

  std::vector<vadtl::TransferTask> tasks;
  for (const auto& tm : cfg.target_manifests) {
    const auto target = vadtl::load_manifest(tm);
    const auto segment = vadtl::draw_adaptation_segment(
        target, cfg.adaptation_duration_s, cfg.adaptation_seed);
    for (const auto& scheme_name : cfg.schemes) {
      const vadtl::Scheme scheme = vadtl::scheme_from_string(scheme_name);
      for (std::size_t depth : cfg.depths) {
        vadtl::TransferTask task;
        task.source = source;
        task.target = target;
        task.adaptation = segment;
        task.scheme = scheme;
        task.depth = depth;
        task.cfg = cfg.train;
        task.run_seeds = cfg.seeds;
        task.validate();
        tasks.push_back(std::move(task));
      }
    }
  }

  vadtl::MatrixOptions options;
  options.jobs = jobs;
  vadtl::ResultTable previous;
  if (resume && fs::exists(csv_path)) {
    previous = vadtl::load_results_csv(csv_path);
    for (const auto& r : previous.rows)
      options.completed.insert(
          vadtl::result_key(r.pair, r.depth, r.scheme, r.seed));
  }
  if (cfg.save_models) {
    options.on_run_complete = [&](const vadtl::TransferTask& task,
                                  std::uint64_t seed,
                                  const vadtl::SingleRun& run) {
      const fs::path model_path = models_dir / model_file_name(task, seed);
      const fs::path norm_path = model_path.string() + ".norm.csv";
      run.normalizer.save_csv(norm_path);
      vadtl::TrainConfig tc = task.cfg;
      tc.seed = seed;
      vadtl::save_model(model_path, run.model, tc, norm_path.filename());
    };
  }

  vadtl::ResultTable table = vadtl::run_task_matrix(tasks, options);
  table.rows.insert(table.rows.end(), previous.rows.begin(),
                    previous.rows.end());
  table.sort_rows();
  vadtl::save_results_csv(csv_path, table);

  if (!table.failures.empty()) {
    std::ofstream fl(cfg.output_dir / "failures.log", std::ios::trunc);
    for (const auto& f : table.failures) {
      fl << f << "\n";
      std::cerr << "failed: " << f << "\n";
    }
  }
  std::cout << "wrote " << table.rows.size() << " result rows to " << csv_path
            << "\n";
  return table.failures.empty() ? kExitOk : kExitTaskFailure;
}

int cmd_similarity(const std::vector<std::string>& manifests,
                   const std::string& out_dir, const std::string& split) {
  if (manifests.size() < 2) {
    std::cerr << "error: similarity needs at least 2 manifests\n";
    return kExitUsage;
  }
  const fs::path out = out_dir.empty() ? output_root() : fs::path(out_dir);
  fs::create_directories(out);

  std::vector<vadtl::FeatureMatrix> features;
  std::vector<std::string> names;
  for (const auto& mp : manifests) {
    const auto manifest = vadtl::load_manifest(mp);
    features.push_back(vadtl::load_split_raw(manifest, split).noisy);
    names.push_back(manifest.noise_type);
  }
  std::vector<const vadtl::FeatureMatrix*> ptrs;
  for (const auto& f : features) ptrs.push_back(&f);

  const auto m = vadtl::similarity_matrix(ptrs, names);
  vadtl::save_similarity_csv(out / "similarity.csv", m);
  vadtl::emit_hinton_svg(out / "similarity.svg", m);
  std::cout << "wrote " << out / "similarity.csv" << " and "
            << out / "similarity.svg" << "\n";
  return kExitOk;
}

int cmd_report(const std::string& csv, const std::string& out,
               const std::string& format) {
  const auto table = vadtl::load_results_csv(csv);
  vadtl::emit_result_table(out, table, format);
  std::cout << "wrote " << out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"voice-activity-detection transfer-learning toolkit"};
  app.require_subcommand(1);

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "synthesize a noisy corpus");
  std::string gc_out, gc_name = "corpus", gc_noise, gc_counts = "30,30,40";
  std::string gc_clean_dir;
  double gc_snr = 5.0, gc_clean_duration = 1.0, gc_label_threshold = 35.0;
  std::uint64_t gc_seed = 1;
  std::size_t gc_synth_clean = 0;
  gen->add_option("--out", gc_out, "output directory");
  gen->add_option("--name", gc_name, "corpus / noise-type name");
  gen->add_option("--noise", gc_noise, "noise WAV path or synth:<kind>")
      ->required();
  gen->add_option("--snr", gc_snr, "target SNR in dB");
  gen->add_option("--counts", gc_counts, "train,dev,test utterance counts");
  gen->add_option("--seed", gc_seed, "synthesis seed");
  gen->add_option("--clean-dir", gc_clean_dir, "directory of clean WAVs");
  gen->add_option("--synth-clean", gc_synth_clean,
                  "generate N surrogate clean utterances");
  gen->add_option("--clean-duration", gc_clean_duration,
                  "surrogate utterance length in seconds");
  gen->add_option("--label-threshold", gc_label_threshold,
                  "label energy threshold below max, dB");

  // extract
  auto* ext = app.add_subcommand("extract", "extract and cache features");
  std::vector<std::string> ex_manifests;
  std::string ex_splits = "train,dev,test", ex_norm_out;
  bool ex_csv = false;
  std::size_t ex_jobs = 1;
  ext->add_option("--manifest", ex_manifests, "manifest.json path(s)")
      ->required();
  ext->add_option("--splits", ex_splits, "comma-separated splits");
  ext->add_flag("--export-csv", ex_csv, "also write CSV mirrors");
  ext->add_option("--normalizer-out", ex_norm_out,
                  "fit a normalizer over everything extracted");
  ext->add_option("--jobs", ex_jobs, "parallel extraction workers");

  // run
  auto* run = app.add_subcommand("run", "run a transfer experiment matrix");
  std::string run_config, run_out;
  bool run_resume = false;
  std::size_t run_jobs = 1;
  run->add_option("--config", run_config, "experiment JSON")->required();
  run->add_flag("--resume", run_resume, "skip (task, seed) cells already in the CSV");
  run->add_option("--jobs", run_jobs, "concurrent (task, seed) runs");
  run->add_option("--out", run_out, "override output_dir");

  // similarity
  auto* sim = app.add_subcommand("similarity",
                                 "corpus similarity matrix + Hinton SVG");
  std::vector<std::string> sim_manifests;
  std::string sim_out, sim_split = "train";
  sim->add_option("--manifest", sim_manifests, "manifest.json paths (>= 2)")
      ->required();
  sim->add_option("--out", sim_out, "output directory");
  sim->add_option("--split", sim_split, "split to compare");

  // report
  auto* rep = app.add_subcommand("report", "render a results CSV");
  std::string rep_csv, rep_out, rep_format = "text";
  rep->add_option("--csv", rep_csv, "results CSV")->required();
  rep->add_option("--out", rep_out, "output file")->required();
  rep->add_option("--format", rep_format, "text or csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed())
      return cmd_gen_corpus(gc_out, gc_name, gc_noise, gc_snr, gc_counts,
                            gc_seed, gc_clean_dir, gc_synth_clean,
                            gc_clean_duration, gc_label_threshold);
    if (ext->parsed())
      return cmd_extract(ex_manifests, ex_splits, ex_csv, ex_norm_out,
                         ex_jobs);
    if (run->parsed())
      return cmd_run(run_config, run_resume, run_jobs, run_out);
    if (sim->parsed()) return cmd_similarity(sim_manifests, sim_out, sim_split);
    if (rep->parsed()) return cmd_report(rep_csv, rep_out, rep_format);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const vadtl::WavError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
