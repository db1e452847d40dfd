#include <benchmark/benchmark.h>

#include "vadtl/signal.hpp"
#include "vadtl/synth.hpp"

namespace {

void BM_MixAtSnr(benchmark::State& state) {
  const auto clean = vadtl::synth_clean_utterance(1.0, 3);
  const auto noise = vadtl::synth_noise("pink", 1.0, 4);
  for (auto _ : state) {
    auto mixed = vadtl::mix_at_snr(clean, noise, 5.0);
    benchmark::DoNotOptimize(mixed.signal.samples.data());
  }
}
BENCHMARK(BM_MixAtSnr)->Unit(benchmark::kMicrosecond);

void BM_FrameLabels(benchmark::State& state) {
  const auto clean = vadtl::synth_clean_utterance(1.0, 5);
  for (auto _ : state) {
    auto labels = vadtl::frame_labels_from_clean(clean);
    benchmark::DoNotOptimize(labels.data());
  }
}
BENCHMARK(BM_FrameLabels)->Unit(benchmark::kMicrosecond);

void BM_SynthNoise(benchmark::State& state) {
  for (auto _ : state) {
    auto n = vadtl::synth_noise("babble", 1.0, 6);
    benchmark::DoNotOptimize(n.samples.data());
  }
}
BENCHMARK(BM_SynthNoise)->Unit(benchmark::kMillisecond);

}  // namespace
