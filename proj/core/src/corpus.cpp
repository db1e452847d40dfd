#include "vadtl/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "vadtl/rng.hpp"

namespace vadtl {

namespace {

constexpr std::size_t kMinFragmentSamples = 2680;  // 32 frames

std::string feature_path_for(const std::string& wav_rel) {
  std::string feat = wav_rel;
  const std::string suffix = ".wav";
  if (feat.size() > suffix.size() &&
      feat.compare(feat.size() - suffix.size(), suffix.size(), suffix) == 0)
    feat.resize(feat.size() - suffix.size());
  return feat + ".feat";
}

// Cached features when available, extraction otherwise.
FeatureMatrix utterance_features(const std::filesystem::path& root,
                                 const std::string& wav_rel) {
  const auto feat = root / feature_path_for(wav_rel);
  if (std::filesystem::exists(feat)) return load_feature_file(feat);
  return extract_all(read_wav(root / wav_rel));
}

std::size_t frames_in_samples(std::size_t samples) {
  if (samples < 200) return 0;
  return (samples - 200) / 80 + 1;
}

}  // namespace

std::vector<const UtteranceEntry*> CorpusManifest::split(
    const std::string& name) const {
  std::vector<const UtteranceEntry*> out;
  for (const auto& u : utterances)
    if (u.split == name) out.push_back(&u);
  return out;
}

void save_manifest(const CorpusManifest& manifest) {
  nlohmann::ordered_json j;
  j["noise_type"] = manifest.noise_type;
  j["snr_db"] = manifest.snr_db;
  j["utterances"] = nlohmann::ordered_json::array();
  for (const auto& u : manifest.utterances) {
    j["utterances"].push_back({{"id", u.id},
                               {"noisy", u.noisy},
                               {"clean", u.clean},
                               {"labels", u.labels},
                               {"split", u.split},
                               {"samples", u.samples}});
  }
  std::ofstream f(manifest.root / "manifest.json", std::ios::trunc);
  if (!f)
    throw std::runtime_error("cannot write manifest under " +
                             manifest.root.string());
  f << j.dump(2) << "\n";
}

CorpusManifest load_manifest(const std::filesystem::path& manifest_json) {
  std::ifstream f(manifest_json);
  if (!f)
    throw std::runtime_error("cannot read manifest: " + manifest_json.string());
  nlohmann::json j;
  f >> j;

  CorpusManifest m;
  m.root = manifest_json.parent_path();
  m.noise_type = j.at("noise_type").get<std::string>();
  m.snr_db = j.at("snr_db").get<double>();
  for (const auto& ju : j.at("utterances")) {
    UtteranceEntry u;
    u.id = ju.at("id").get<std::string>();
    u.noisy = ju.at("noisy").get<std::string>();
    u.clean = ju.at("clean").get<std::string>();
    u.labels = ju.at("labels").get<std::string>();
    u.split = ju.at("split").get<std::string>();
    u.samples = ju.at("samples").get<std::size_t>();
    m.utterances.push_back(std::move(u));
  }
  return m;
}

CorpusManifest synthesize_corpus(
    const std::vector<std::filesystem::path>& clean_pool,
    const std::filesystem::path& noise_wav, const SynthesisParams& params) {
  const std::size_t total = params.counts.total();
  if (clean_pool.size() < total)
    throw std::invalid_argument("synthesize_corpus: clean pool too small (" +
                                std::to_string(clean_pool.size()) + " < " +
                                std::to_string(total) + ")");
  const AudioSignal noise = read_wav(noise_wav);
  {
    double p = 0.0;
    for (double v : noise.samples) p += v * v;
    if (p <= 0.0)
      throw std::invalid_argument("synthesize_corpus: silent noise file");
  }

  std::mt19937_64 rng(derive_seed(params.seed, {0x636f7270ULL}));
  std::vector<std::size_t> pool_order(clean_pool.size());
  for (std::size_t i = 0; i < pool_order.size(); ++i) pool_order[i] = i;
  shuffle_inplace(pool_order, rng);

  CorpusManifest manifest;
  manifest.noise_type = params.noise_type;
  manifest.snr_db = params.snr_db;
  manifest.root = params.out_dir;

  std::filesystem::create_directories(params.out_dir / "train");
  std::filesystem::create_directories(params.out_dir / "dev");
  std::filesystem::create_directories(params.out_dir / "test");

  char idbuf[32];
  for (std::size_t i = 0; i < total; ++i) {
    const std::string split = i < params.counts.train ? "train"
                              : i < params.counts.train + params.counts.dev
                                  ? "dev"
                                  : "test";
    std::snprintf(idbuf, sizeof idbuf, "u%04zu", i);
    const std::string id = idbuf;

    const AudioSignal clean = read_wav(clean_pool[pool_order[i]]);
    if (clean.sample_rate != noise.sample_rate)
      throw std::invalid_argument("synthesize_corpus: sample rate mismatch");

    // random-offset excerpt, tiled over the clean extent
    const std::size_t offset = uniform_index(rng, noise.samples.size());
    AudioSignal excerpt;
    excerpt.sample_rate = noise.sample_rate;
    excerpt.samples.resize(clean.samples.size());
    for (std::size_t s = 0; s < excerpt.samples.size(); ++s)
      excerpt.samples[s] = noise.samples[(offset + s) % noise.samples.size()];

    const MixResult mixed = mix_at_snr(clean, excerpt, params.snr_db);
    const auto labels =
        frame_labels_from_clean(clean, params.label_threshold_db);

    UtteranceEntry u;
    u.id = id;
    u.split = split;
    u.noisy = split + "/" + id + ".noisy.wav";
    u.clean = split + "/" + id + ".clean.wav";
    u.labels = split + "/" + id + ".labels.txt";
    u.samples = clean.samples.size();
    write_wav(manifest.resolve(u.noisy), mixed.signal);
    write_wav(manifest.resolve(u.clean), clean);
    write_labels(manifest.resolve(u.labels), labels);
    manifest.utterances.push_back(std::move(u));
  }

  save_manifest(manifest);
  return manifest;
}

std::size_t AdaptationSegment::total_samples() const {
  std::size_t n = 0;
  for (const auto& f : fragments) n += f.samples;
  return n;
}

AdaptationSegment draw_adaptation_segment(const CorpusManifest& manifest,
                                          double duration_s,
                                          std::uint64_t seed) {
  AdaptationSegment seg;
  seg.noise_type = manifest.noise_type;
  seg.requested_s = duration_s;
  seg.root = manifest.root;
  if (duration_s <= 0.0) return seg;

  const auto train = manifest.split("train");
  std::size_t available = 0;
  for (const auto* u : train) available += u->samples;
  const auto budget = static_cast<std::size_t>(
      std::llround(duration_s * kProtocolSampleRate));
  if (available < budget)
    throw std::invalid_argument(
        "draw_adaptation_segment: train split shorter than request");

  std::mt19937_64 rng(derive_seed(seed, {0x73656764ULL}));
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle_inplace(order, rng);

  std::size_t total = 0;
  for (std::size_t i = 0; i < order.size() && total < budget; ++i) {
    const auto* u = train[order[i]];
    SegmentFragment frag{u->id, u->noisy, u->clean, u->samples};
    if (total + u->samples > budget) {
      // trim the last utterance, keeping enough frames to extract on
      frag.samples = std::max(budget - total, kMinFragmentSamples);
      frag.samples = std::min(frag.samples, u->samples);
    }
    total += frag.samples;
    seg.fragments.push_back(std::move(frag));
  }
  return seg;
}

AdaptationSegment segment_from_split(const CorpusManifest& manifest,
                                     const std::string& split) {
  AdaptationSegment seg;
  seg.noise_type = manifest.noise_type;
  seg.root = manifest.root;
  for (const auto* u : manifest.split(split)) {
    seg.fragments.push_back(
        SegmentFragment{u->id, u->noisy, u->clean, u->samples});
    seg.requested_s += static_cast<double>(u->samples) / kProtocolSampleRate;
  }
  return seg;
}

LoadedSplit load_split_raw(const CorpusManifest& manifest,
                           const std::string& split) {
  LoadedSplit out;
  std::vector<FrameLabel> all_labels;
  for (const auto* u : manifest.split(split)) {
    FeatureMatrix noisy = utterance_features(manifest.root, u->noisy);
    FeatureMatrix clean = utterance_features(manifest.root, u->clean);
    if (noisy.rows() != clean.rows())
      throw std::runtime_error("clean/noisy row count mismatch for " + u->id);
    const auto labels = read_labels(manifest.resolve(u->labels));
    if (labels.size() != noisy.rows())
      throw std::runtime_error("label count mismatch for " + u->id);
    all_labels.insert(all_labels.end(), labels.begin(), labels.end());
    out.noisy.append(noisy);
    out.clean.append(clean);
  }
  if (out.noisy.rows() > 0) out.noisy.set_labels(std::move(all_labels));
  return out;
}

LoadedSplit load_features(const CorpusManifest& manifest,
                          const std::string& split, const Normalizer& n) {
  LoadedSplit raw = load_split_raw(manifest, split);
  LoadedSplit out;
  out.noisy = apply_normalizer(n, raw.noisy);
  out.clean = apply_normalizer(n, raw.clean);
  return out;
}

LoadedPair load_segment_raw(const AdaptationSegment& segment) {
  LoadedPair out;
  for (const auto& frag : segment.fragments) {
    FeatureMatrix noisy = utterance_features(segment.root, frag.noisy);
    FeatureMatrix clean = utterance_features(segment.root, frag.clean);
    if (noisy.rows() != clean.rows())
      throw std::runtime_error("clean/noisy row count mismatch for " + frag.id);
    const std::size_t keep = frames_in_samples(frag.samples);
    if (keep < noisy.rows()) {
      FeatureMatrix ntrim(keep, noisy.dim()), ctrim(keep, clean.dim());
      for (std::size_t i = 0; i < keep; ++i) {
        std::copy(noisy.row(i).begin(), noisy.row(i).end(),
                  ntrim.row(i).begin());
        std::copy(clean.row(i).begin(), clean.row(i).end(),
                  ctrim.row(i).begin());
      }
      noisy = std::move(ntrim);
      clean = std::move(ctrim);
    }
    out.noisy.append(noisy);
    out.clean.append(clean);
  }
  return out;
}

std::size_t extract_features(const CorpusManifest& manifest,
                             const std::vector<std::string>& splits,
                             bool export_csv, std::size_t jobs) {
  std::vector<const UtteranceEntry*> todo;
  for (const auto& split : splits)
    for (const auto* u : manifest.split(split)) todo.push_back(u);

  auto process = [&](const UtteranceEntry& u) {
    for (const std::string* rel : {&u.noisy, &u.clean}) {
      const auto feat = manifest.root / feature_path_for(*rel);
      if (!std::filesystem::exists(feat)) {
        const FeatureMatrix m = extract_all(read_wav(manifest.resolve(*rel)));
        save_feature_file(feat, m);
      }
      if (export_csv) {
        const auto csv = feat.string() + ".csv";
        if (!std::filesystem::exists(csv))
          export_feature_csv(csv, load_feature_file(feat));
      }
    }
  };

  if (jobs <= 1) {
    for (const auto* u : todo) process(*u);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t i = next.fetch_add(1); i < todo.size();
               i = next.fetch_add(1))
            process(*todo[i]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return todo.size();
}

}  // namespace vadtl
