#include <benchmark/benchmark.h>

#include <random>

#include "vadtl/network.hpp"
#include "vadtl/rng.hpp"

namespace {

vadtl::FeatureMatrix random_rows(std::size_t rows, std::size_t dim,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  vadtl::FeatureMatrix m(rows, dim);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t d = 0; d < dim; ++d)
      m.row(i)[d] = vadtl::uniform01(rng);
  return m;
}

// one epoch of first-layer pre-training at protocol width (273 -> 54)
void BM_PretrainEpoch(benchmark::State& state) {
  const auto rows = random_rows(static_cast<std::size_t>(state.range(0)), 273, 7);
  vadtl::TrainConfig cfg;
  cfg.epochs_pretrain = 1;
  for (auto _ : state) {
    auto res = vadtl::train_denoising_layer(rows, rows, 54, cfg, 3, 0);
    benchmark::DoNotOptimize(res.layer.W.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          state.range(0));
}
BENCHMARK(BM_PretrainEpoch)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_Encode(benchmark::State& state) {
  const auto rows = random_rows(1024, 273, 11);
  vadtl::NetworkStack stack;
  stack.input_dim = 273;
  stack.hidden.push_back(vadtl::init_layer(273, 54, 1));
  stack.hidden.push_back(vadtl::init_layer(54, 7, 2));
  stack.output.w.assign(7, 0.0);
  for (auto _ : state) {
    auto reps = stack.encode(rows);
    benchmark::DoNotOptimize(reps.data().data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * 1024);
}
BENCHMARK(BM_Encode)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  const auto rows = random_rows(1024, 273, 13);
  vadtl::NetworkStack stack;
  stack.input_dim = 273;
  stack.hidden.push_back(vadtl::init_layer(273, 54, 1));
  stack.output.w.assign(54, 0.01);
  for (auto _ : state) {
    auto preds = vadtl::predict(stack, rows);
    benchmark::DoNotOptimize(preds.probabilities.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * 1024);
}
BENCHMARK(BM_Predict)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
