#include <benchmark/benchmark.h>

#include "vadtl/features.hpp"
#include "vadtl/signal.hpp"
#include "vadtl/synth.hpp"

namespace {

const vadtl::AudioSignal& one_second_utterance() {
  static const vadtl::AudioSignal utt = vadtl::synth_clean_utterance(1.0, 42);
  return utt;
}

void BM_ExtractAll(benchmark::State& state) {
  const auto& utt = one_second_utterance();
  for (auto _ : state) {
    auto m = vadtl::extract_all(utt);
    benchmark::DoNotOptimize(m.data().data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * 98);
}
BENCHMARK(BM_ExtractAll)->Unit(benchmark::kMillisecond);

void BM_ExtractMfccFrame(benchmark::State& state) {
  const auto frames = vadtl::frame_signal(one_second_utterance());
  const auto frame = frames.frame(40);
  for (auto _ : state) {
    auto c = vadtl::extract_mfcc(frame);
    benchmark::DoNotOptimize(c.data());
  }
}
BENCHMARK(BM_ExtractMfccFrame);

void BM_ExtractPitchFrame(benchmark::State& state) {
  const auto frames = vadtl::frame_signal(one_second_utterance());
  const auto frame = frames.frame(40);
  for (auto _ : state) benchmark::DoNotOptimize(vadtl::extract_pitch(frame));
}
BENCHMARK(BM_ExtractPitchFrame);

void BM_ExtractAms(benchmark::State& state) {
  const auto frames = vadtl::frame_signal(one_second_utterance());
  for (auto _ : state) {
    auto m = vadtl::extract_ams(frames);
    benchmark::DoNotOptimize(m.data().data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * 98);
}
BENCHMARK(BM_ExtractAms)->Unit(benchmark::kMillisecond);

void BM_NormalizerApply(benchmark::State& state) {
  const auto m = vadtl::extract_all(one_second_utterance());
  const auto n = vadtl::fit_normalizer({&m}, "bench");
  for (auto _ : state) {
    auto out = vadtl::apply_normalizer(n, m);
    benchmark::DoNotOptimize(out.data().data());
  }
}
BENCHMARK(BM_NormalizerApply)->Unit(benchmark::kMicrosecond);

}  // namespace
