#include <benchmark/benchmark.h>

#include <random>

#include "rsv/rsv.hpp"
#include "support/synthetic.hpp"

using namespace rsv;

namespace {

BinaryMask blobs(int side) {
  std::mt19937_64 g(7);
  return synth::random_blobs(g, side, side, side / 16, 4, side / 8, GeoMeta{2.0, 0, 0});
}

void BM_Close(benchmark::State& state) {
  const BinaryMask m = blobs(static_cast<int>(state.range(0)));
  const StructuringElement se(static_cast<int>(state.range(1)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(close(m, se));
  state.SetItemsProcessed(state.iterations() * m.height() * m.width());
}
BENCHMARK(BM_Close)->Args({512, 9})->Args({512, 51})->Args({2048, 51});

void BM_LabelComponents(benchmark::State& state) {
  const BinaryMask m = blobs(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(label_components(m));
  state.SetItemsProcessed(state.iterations() * m.height() * m.width());
}
BENCHMARK(BM_LabelComponents)->Arg(512)->Arg(2048);

void BM_PruneAndFill(benchmark::State& state) {
  const BinaryMask m = blobs(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fill_enclosed(prune_small_or_distant(m, m.meta())));
}
BENCHMARK(BM_PruneAndFill)->Arg(512)->Arg(2048);

void BM_MorphRoi(benchmark::State& state) {
  const BinaryMask m = blobs(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(morph_roi(m, 500.0));
}
BENCHMARK(BM_MorphRoi)->Arg(512)->Arg(2048);

void BM_FcnForward(benchmark::State& state) {
  std::mt19937_64 g(3);
  const int side = static_cast<int>(state.range(0));
  const FloatImage x = to_float_image(synth::random_raster(g, side, side, 3));
  const TinyFcn model(TinyFcn::default_widths(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(x));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_FcnForward)->Arg(64)->Arg(256);

}  // namespace
BENCHMARK_MAIN();
