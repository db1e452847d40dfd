// Acceptance suite: runs every release criterion and prints one pass/fail
// line per criterion. Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "vadtl/corpus.hpp"
#include "vadtl/eval.hpp"
#include "vadtl/features.hpp"
#include "vadtl/network.hpp"
#include "vadtl/rng.hpp"
#include "vadtl/synth.hpp"
#include "vadtl/transfer.hpp"

namespace fs = std::filesystem;
using namespace vadtl;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw CheckFailure(what);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

fs::path work_dir() {
  static const fs::path p = [] {
    fs::path dir = fs::temp_directory_path() / "vadtl_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
  }();
  return p;
}

std::string cli_path() {
  const char* p = std::getenv("VADTL_CLI");
  if (p == nullptr)
    throw CheckFailure("VADTL_CLI must point at the vadtl binary");
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd =
      cli_path() + " " + args + " >/dev/null 2>&1";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

// ---------------------------------------------------------------------------
// 1. gradient correctness on random small stacks
// ---------------------------------------------------------------------------
void criterion_gradients() {
  std::mt19937_64 rng(20240001);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t in = 3 + uniform_index(rng, 6);  // dims <= 8
    const std::size_t depth = 1 + uniform_index(rng, 3);

    NetworkStack stack;
    stack.input_dim = in;
    std::size_t cur = in;
    for (std::size_t l = 0; l < depth; ++l) {
      const std::size_t width = 2 + uniform_index(rng, 7);
      LayerWeights layer = init_layer(cur, width, rng());
      for (auto& b : layer.b_enc) b = uniform_range(rng, -0.4, 0.4);
      for (auto& b : layer.b_dec) b = uniform_range(rng, -0.4, 0.4);
      stack.hidden.push_back(std::move(layer));
      cur = width;
    }
    stack.output.w.resize(cur);
    for (auto& v : stack.output.w) v = uniform_range(rng, -0.8, 0.8);
    stack.output.b = uniform_range(rng, -0.3, 0.3);

    FeatureMatrix batch(10, in);
    std::vector<FrameLabel> labels(10);
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t d = 0; d < in; ++d) batch.row(i)[d] = uniform01(rng);
      labels[i] =
          uniform01(rng) < 0.5 ? FrameLabel::nonspeech : FrameLabel::speech;
    }
    batch.set_labels(labels);

    const double ft_err = gradient_check_finetune(stack, batch);
    require(ft_err < 1e-6, "fine-tune gradient error " + fmt(ft_err) +
                               " at trial " + std::to_string(trial));

    // every layer's pre-training objective
    std::size_t level_dim = in;
    for (const auto& layer : stack.hidden) {
      FeatureMatrix input(8, level_dim), target(8, level_dim);
      for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t d = 0; d < level_dim; ++d) {
          input.row(i)[d] = uniform01(rng);
          target.row(i)[d] = uniform01(rng);
        }
      const double pt_err = gradient_check_pretrain_layer(layer, input, target);
      require(pt_err < 1e-6, "pre-train gradient error " + fmt(pt_err) +
                                 " at trial " + std::to_string(trial));
      level_dim = layer.out_dim;
    }
  }
}

// ---------------------------------------------------------------------------
// 2. feature layout + normalization range
// ---------------------------------------------------------------------------
AudioSignal random_utterance(std::mt19937_64& rng) {
  const double dur = uniform_range(rng, 0.45, 1.2);
  const int mode = static_cast<int>(uniform_index(rng, 3));
  if (mode == 0) return synth_clean_utterance(dur, rng());
  if (mode == 1) return synth_noise(noise_kinds()[uniform_index(rng, 7)], dur,
                                    rng());
  // speech in noise
  const auto clean = synth_clean_utterance(dur, rng());
  const auto noise = synth_noise("pink", dur, rng());
  return mix_at_snr(clean, noise, uniform_range(rng, 0.0, 15.0)).signal;
}

void criterion_feature_layout() {
  std::size_t total = 0;
  for (const auto& block : kFeatureLayout) total += block.dim;
  require(total == 273, "layout dims must sum to 273");
  const std::size_t expected[10] = {1, 16, 16, 16, 20, 20, 20, 12, 17, 135};
  for (std::size_t b = 0; b < 10; ++b)
    require(kFeatureLayout[b].dim == expected[b], "block dim mismatch");

  std::mt19937_64 rng(20240002);
  std::vector<FeatureMatrix> corpora;
  for (int u = 0; u < 100; ++u) {
    const auto utt = random_utterance(rng);
    FeatureMatrix m = extract_all(utt);
    require(m.dim() == 273, "row length must be exactly 273");
    require(m.rows() == frame_signal(utt).size(), "one row per frame");
    corpora.push_back(std::move(m));
  }

  std::vector<const FeatureMatrix*> ptrs;
  for (const auto& m : corpora) ptrs.push_back(&m);
  const Normalizer n = fit_normalizer(ptrs, "acceptance-2");

  std::vector<double> lo(273, 1e9), hi(273, -1e9);
  for (const auto* m : ptrs) {
    const FeatureMatrix norm = apply_normalizer(n, *m);
    for (std::size_t i = 0; i < norm.rows(); ++i)
      for (std::size_t d = 0; d < 273; ++d) {
        const double v = norm.row(i)[d];
        require(v >= 0.0 && v <= 1.0, "normalized value out of [0,1]");
        lo[d] = std::min(lo[d], v);
        hi[d] = std::max(hi[d], v);
      }
  }
  for (std::size_t d = 0; d < 273; ++d) {
    if (n.is_constant(d)) continue;
    require(lo[d] == 0.0, "fitted corpus must reach 0 in dim " +
                              std::to_string(d));
    require(hi[d] == 1.0, "fitted corpus must reach 1 in dim " +
                              std::to_string(d));
  }
}

// ---------------------------------------------------------------------------
// 3. pre-training progress on a fixed synthetic pair
// ---------------------------------------------------------------------------
void criterion_pretraining_progress() {
  // low-rank near-binary patterns with additive noise, clipped to [0,1];
  // strongly saturated targets keep the deeper layers' representations
  // informative enough to leave room under the 0.9 reduction bound
  std::mt19937_64 rng(20240003);
  const std::size_t rows = 2000, dim = 273, rank = 4;
  std::vector<double> basis(rank * dim);
  for (auto& v : basis) v = uniform01(rng) < 0.5 ? -1.0 : 1.0;

  FeatureMatrix clean(rows, dim);
  NormalDraw normal;
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> z(rank);
    for (auto& v : z) v = uniform01(rng) < 0.5 ? 0.0 : 1.0;
    for (std::size_t d = 0; d < dim; ++d) {
      double acc = 0.0;
      for (std::size_t j = 0; j < rank; ++j) acc += z[j] * basis[j * dim + d];
      clean.row(i)[d] = acc > 0.0 ? 0.98 : 0.02;
    }
  }
  FeatureMatrix noisy = clean;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t d = 0; d < dim; ++d)
      noisy.row(i)[d] =
          std::clamp(noisy.row(i)[d] + 0.12 * normal(rng), 0.0, 1.0);

  TrainConfig cfg;  // paper defaults: lr 0.004, 200 epochs, batch 512
  cfg.seed = 7;
  const auto clean_pre = pretrain_clean_stack(clean, 3, cfg);
  const auto noisy_pre =
      pretrain_noisy_stack(PretrainPair{noisy, clean}, clean_pre.stack, 3, cfg);

  auto check_trajectory = [&](const LossCheckpoints& cps,
                              const std::string& name) {
    require(cps.size() >= 2, name + ": missing checkpoints");
    require(cps.front().first == 0, name + ": first checkpoint not epoch 0");
    std::size_t regressions = 0;
    for (std::size_t c = 1; c < cps.size(); ++c) {
      if (cps[c].second > cps[c - 1].second) {
        ++regressions;
        const double rel =
            (cps[c].second - cps[c - 1].second) / cps[c - 1].second;
        require(rel <= 0.02, name + ": checkpoint regression of " + fmt(rel));
      }
    }
    require(regressions <= 1,
            name + ": " + std::to_string(regressions) + " regressions");
    require(cps.back().second < 0.9 * cps.front().second,
            name + ": final " + fmt(cps.back().second) + " !< 0.9 * initial " +
                fmt(cps.front().second));
  };

  for (std::size_t l = 0; l < 3; ++l) {
    check_trajectory(noisy_pre.layer_checkpoints[l],
                     "noisy layer " + std::to_string(l + 1));
    check_trajectory(clean_pre.layer_checkpoints[l],
                     "clean layer " + std::to_string(l + 1));
  }
}

// ---------------------------------------------------------------------------
// 4. positive transfer on two synthetic domains
// ---------------------------------------------------------------------------
struct Domains {
  CorpusManifest source, target;
  AdaptationSegment segment;
};

CorpusManifest build_domain(const fs::path& dir, const std::string& noise_kind,
                            std::uint64_t clean_seed,
                            std::uint64_t noise_seed, SplitCounts counts,
                            double snr_db) {
  fs::create_directories(dir / "pool");
  std::vector<fs::path> pool;
  for (std::size_t i = 0; i < counts.total(); ++i) {
    const fs::path p = dir / "pool" / ("c" + std::to_string(i) + ".wav");
    // shared speech structure: the clean pool depends only on clean_seed
    write_wav(p, synth_clean_utterance(1.0, derive_seed(clean_seed, {i})));
    pool.push_back(p);
  }
  const fs::path noise_path = dir / "noise.wav";
  write_wav(noise_path, synth_noise(noise_kind, 30.0, noise_seed));

  SynthesisParams params;
  params.out_dir = dir;
  params.noise_type = noise_kind;
  params.snr_db = snr_db;
  params.counts = counts;
  params.seed = noise_seed;
  return synthesize_corpus(pool, noise_path, params);
}

Domains build_transfer_domains(const fs::path& root) {
  const SplitCounts counts{60, 30, 60};
  Domains d;
  d.source = build_domain(root / "source", "rumble", 4242, 13, counts, 5.0);
  d.target = build_domain(root / "target", "babble", 4242, 14, counts, 5.0);
  extract_features(d.source, {"train", "dev", "test"}, false, 2);
  extract_features(d.target, {"train", "dev", "test"}, false, 2);
  d.segment = draw_adaptation_segment(d.target, 30.0, 77);
  return d;
}

void criterion_positive_transfer() {
  const fs::path root = work_dir() / "transfer";
  Domains d = build_transfer_domains(root);

  // the two domains must be related but mismatched
  const auto src_feats = load_split_raw(d.source, "train");
  const auto tgt_feats = load_split_raw(d.target, "train");
  const auto sim = similarity_matrix({&src_feats.noisy, &tgt_feats.noisy},
                                     {"source", "target"});
  require(sim.at(0, 1) >= 0.3 && sim.at(0, 1) <= 0.9,
          "domain similarity " + fmt(sim.at(0, 1)) + " outside [0.3, 0.9]");

  std::vector<TransferTask> tasks;
  for (Scheme scheme : {Scheme::LB, Scheme::S1, Scheme::S2, Scheme::UB}) {
    TransferTask t;
    t.source = d.source;
    t.target = d.target;
    t.adaptation = d.segment;
    t.scheme = scheme;
    t.depth = 2;
    t.run_seeds = {1, 2, 3, 4, 5};
    tasks.push_back(std::move(t));
  }

  MatrixOptions options;
  options.jobs = 2;
  const ResultTable table = run_task_matrix(tasks, options);
  require(table.failures.empty(), "task failures in the transfer matrix");

  const std::string pair = tasks[0].pair_name();
  const double lb = table.cell_mean(pair, 2, "LB");
  const double s1 = table.cell_mean(pair, 2, "S1");
  const double s2 = table.cell_mean(pair, 2, "S2");
  const double ub = table.cell_mean(pair, 2, "UB");
  std::cout << "      [info] LB " << lb << "  S1 " << s1 << "  S2 " << s2
            << "  UB " << ub << "\n";

  require(s2 >= lb + 1.0, "mean(S2)=" + fmt(s2) + " !>= mean(LB)+1.0=" +
                              fmt(lb + 1.0));
  require(s1 >= lb, "mean(S1)=" + fmt(s1) + " !>= mean(LB)=" + fmt(lb));
  require(ub >= s2 - 0.5, "mean(UB)=" + fmt(ub) + " !>= mean(S2)-0.5=" +
                              fmt(s2 - 0.5));
}

// ---------------------------------------------------------------------------
// 5. degenerate equalities
// ---------------------------------------------------------------------------
void criterion_degenerate_equalities() {
  const fs::path root = work_dir() / "degenerate";
  const auto source = testutil::make_corpus(root / "src", "rumble",
                                            SplitCounts{4, 2, 2}, 42);
  const auto target = testutil::make_corpus(root / "tgt", "hiss",
                                            SplitCounts{4, 2, 2}, 43);
  extract_features(source, {"train", "dev", "test"}, false, 2);
  extract_features(target, {"train", "dev", "test"}, false, 2);

  TransferTask base;
  base.source = source;
  base.target = target;
  base.depth = 2;
  base.cfg.epochs_pretrain = 20;
  base.cfg.epochs_finetune = 10;
  base.cfg.batch_size = 256;

  DataCache data;
  RunContext ctx{&data, nullptr};

  // S2 with an empty segment reproduces LB bitwise
  TransferTask lb = base;
  lb.scheme = Scheme::LB;
  TransferTask s2 = base;
  s2.scheme = Scheme::S2;
  s2.adaptation = AdaptationSegment{};
  s2.adaptation.root = target.root;
  for (std::uint64_t seed : {1ULL, 2ULL}) {
    const auto a = run_single(lb, seed, ctx);
    const auto b = run_single(s2, seed, ctx);
    require(a.accuracy_pct == b.accuracy_pct,
            "S2(empty) accuracy differs from LB under seed " +
                std::to_string(seed));
    for (std::size_t l = 0; l < a.model.hidden.size(); ++l)
      require(a.model.hidden[l].W == b.model.hidden[l].W &&
                  a.model.hidden[l].b_enc == b.model.hidden[l].b_enc &&
                  a.model.hidden[l].b_dec == b.model.hidden[l].b_dec,
              "S2(empty) weights differ from LB");
    require(a.model.output.w == b.model.output.w &&
                a.model.output.b == b.model.output.b,
            "S2(empty) output unit differs from LB");
  }

  // S1 with segment := source train set reproduces LB accuracy within 0.1
  TransferTask s1 = base;
  s1.scheme = Scheme::S1;
  s1.adaptation = segment_from_split(source, "train");
  const auto a = run_single(lb, 3, ctx);
  const auto b = run_single(s1, 3, ctx);
  require(std::abs(a.accuracy_pct - b.accuracy_pct) <= 0.1,
          "S1(source train) accuracy " + fmt(b.accuracy_pct) +
              " vs LB " + fmt(a.accuracy_pct));
}

// ---------------------------------------------------------------------------
// 6. similarity formula + matched-pair qualitative claim
// ---------------------------------------------------------------------------
void criterion_similarity() {
  const fs::path root = work_dir() / "similarity";
  // two corpora share a noise recording; two bring their own
  const auto a1 = testutil::make_corpus(root / "a1", "white",
                                        SplitCounts{4, 1, 1}, 11);
  const auto a2 = testutil::make_corpus(root / "a2", "white",
                                        SplitCounts{4, 1, 1}, 12);
  const auto b = testutil::make_corpus(root / "b", "pink",
                                       SplitCounts{4, 1, 1}, 13);
  const auto c = testutil::make_corpus(root / "c", "hiss",
                                       SplitCounts{4, 1, 1}, 14);

  std::vector<FeatureMatrix> feats;
  for (const auto* m : {&a1, &a2, &b, &c})
    feats.push_back(load_split_raw(*m, "train").noisy);
  std::vector<const FeatureMatrix*> ptrs = {&feats[0], &feats[1], &feats[2],
                                            &feats[3]};
  const std::vector<std::string> names = {"white1", "white2", "pink", "hiss"};
  const auto m = similarity_matrix(ptrs, names);

  for (std::size_t i = 0; i < 4; ++i) {
    require(m.at(i, i) == 1.0, "diagonal must be 1");
    for (std::size_t j = 0; j < 4; ++j)
      require(m.at(i, j) == m.at(j, i), "matrix must be symmetric");
  }

  // direct evaluation of exp(-||dc||^2 / 2) from scratch
  const Normalizer shared = fit_normalizer(ptrs, "direct");
  std::vector<std::vector<double>> centroids;
  for (const auto* f : ptrs) {
    const FeatureMatrix norm = apply_normalizer(shared, *f);
    std::vector<double> c0(norm.dim(), 0.0);
    for (std::size_t i = 0; i < norm.rows(); ++i)
      for (std::size_t d = 0; d < norm.dim(); ++d) c0[d] += norm.row(i)[d];
    for (double& v : c0) v /= static_cast<double>(norm.rows());
    centroids.push_back(std::move(c0));
  }
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < centroids[i].size(); ++k) {
        const double diff = centroids[i][k] - centroids[j][k];
        d2 += diff * diff;
      }
      const double direct = i == j ? 1.0 : std::exp(-d2 / 2.0);
      require(std::abs(m.at(i, j) - direct) < 1e-12,
              "similarity deviates from the direct formula");
    }

  // matched pair (same noise recording) is the most similar off-diagonal
  const double matched = m.at(0, 1);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j && !(i < 2 && j < 2))
        require(matched > m.at(i, j),
                "matched pair is not the most similar");
}

// ---------------------------------------------------------------------------
// 7. byte-level determinism of the run command
// ---------------------------------------------------------------------------
std::string strip_timing_columns(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    // drop the last two columns (pretrain_s, finetune_s)
    std::size_t cut = line.rfind(',');
    if (cut != std::string::npos) cut = line.rfind(',', cut - 1);
    out << (cut == std::string::npos ? line : line.substr(0, cut)) << '\n';
  }
  return out.str();
}

void criterion_run_determinism() {
  const fs::path root = work_dir() / "determinism";
  fs::create_directories(root);
  require(run_cli("gen-corpus --out " + (root / "src").string() +
                  " --name rumble --noise synth:rumble --counts 3,1,1 "
                  "--seed 21") == 0,
          "gen-corpus failed");
  require(run_cli("gen-corpus --out " + (root / "tgt").string() +
                  " --name hiss --noise synth:hiss --counts 3,1,1 "
                  "--seed 22") == 0,
          "gen-corpus failed");

  const fs::path config = root / "exp.json";
  std::ofstream(config)
      << "{\n"
      << "  \"source\": \"" << (root / "src" / "manifest.json").string()
      << "\",\n"
      << "  \"targets\": [\"" << (root / "tgt" / "manifest.json").string()
      << "\"],\n"
      << "  \"schemes\": [\"LB\", \"S1\", \"S2\", \"UB\"],\n"
      << "  \"depths\": [1, 2],\n"
      << "  \"seeds\": [1, 2],\n"
      << "  \"adaptation\": {\"duration_s\": 1.5, \"seed\": 5},\n"
      << "  \"train\": {\"epochs_pretrain\": 6, \"epochs_finetune\": 4,\n"
      << "             \"batch_size\": 256},\n"
      << "  \"save_models\": false\n"
      << "}\n";

  require(run_cli("run --config " + config.string() + " --out " +
                  (root / "out1").string()) == 0,
          "first run failed");
  require(run_cli("run --config " + config.string() + " --out " +
                  (root / "out2").string()) == 0,
          "second run failed");

  const std::string a = testutil::slurp(root / "out1" / "results.csv");
  const std::string b = testutil::slurp(root / "out2" / "results.csv");
  require(!a.empty(), "empty results CSV");
  require(strip_timing_columns(a) == strip_timing_columns(b),
          "results CSVs differ beyond timing columns");
}

// ---------------------------------------------------------------------------
// 8. table fidelity on the published reference row
// ---------------------------------------------------------------------------
void criterion_table_fidelity() {
  const fs::path root = work_dir() / "report";
  fs::create_directories(root);
  const fs::path csv = root / "reference.csv";
  std::ofstream(csv) << "pair,depth,scheme,seed,accuracy_pct,pretrain_s,"
                        "finetune_s\n"
                        "Babble,1,LB,1,74.95,0,0\n"
                        "Babble,1,S1,1,77.15,0,0\n"
                        "Babble,1,S2,1,76.44,0,0\n"
                        "Babble,1,UB,1,78.61,0,0\n";
  const fs::path out = root / "table.txt";
  require(run_cli("report --csv " + csv.string() + " --out " + out.string() +
                  " --format text") == 0,
          "report command failed");

  const std::string expected =
      "Transfer accuracy (%) by noise pair, scheme and depth\n"
      "-- 1 layer --\n"
      "Babble | LB 74.95 | S1 77.15 | S2 76.44 | UB 78.61\n";
  const std::string got = testutil::slurp(out);
  require(got == expected, "rendered table does not match the reference row");
}

struct Criterion {
  int number;
  std::string name;
  std::function<void()> fn;
};

}  // namespace

int main(int argc, char** argv) {
  // optional criterion numbers on the command line select a subset
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  const std::vector<Criterion> criteria = {
      {1, "gradient correctness (50 random small stacks)", criterion_gradients},
      {2, "feature layout and normalization range", criterion_feature_layout},
      {3, "pre-training progress on a fixed 2000-row pair",
       criterion_pretraining_progress},
      {4, "positive transfer on mismatched synthetic domains",
       criterion_positive_transfer},
      {5, "degenerate equalities (S2=LB bitwise, S1~LB)",
       criterion_degenerate_equalities},
      {6, "similarity formula and matched-pair ordering",
       criterion_similarity},
      {7, "run-command determinism (CSV bytes)", criterion_run_determinism},
      {8, "table fidelity on the reference row", criterion_table_fidelity},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.number) ==
            selected.end())
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    std::string error;
    try {
      c.fn();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    char line[512];
    if (error.empty()) {
      std::snprintf(line, sizeof line, "[PASS] %d. %s (%.1fs)", c.number,
                    c.name.c_str(), secs);
    } else {
      std::snprintf(line, sizeof line, "[FAIL] %d. %s (%.1fs): %s", c.number,
                    c.name.c_str(), secs, error.c_str());
      ++failures;
    }
    std::cout << line << std::endl;
  }
  if (failures > 0)
    std::cout << failures << " criterion(s) failed" << std::endl;
  return failures == 0 ? 0 : 1;
}
