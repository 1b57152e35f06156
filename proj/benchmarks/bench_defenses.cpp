#include <benchmark/benchmark.h>

#include "evoq/defenses.hpp"
#include "evoq/rng.hpp"

namespace {

using namespace evoq;

Image test_image(int c, int side) {
  Rng rng(6);
  Image img(c, side, side);
  for (auto& v : img.data) v = rng.unit();
  return img;
}

void BM_BitDepthReduce(benchmark::State& state) {
  Image img = test_image(1, 28);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bit_depth_reduce(img, 3));
  }
}
BENCHMARK(BM_BitDepthReduce);

void BM_MedianSmooth(benchmark::State& state) {
  Image img = test_image(1, 28);
  for (auto _ : state) {
    benchmark::DoNotOptimize(spatial_smooth(img, 5));
  }
}
BENCHMARK(BM_MedianSmooth);

void BM_JpegCompress(benchmark::State& state) {
  Image img = test_image(static_cast<int>(state.range(0)), 32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(jpeg_like_compress(img, 70));
  }
}
BENCHMARK(BM_JpegCompress)->Arg(1)->Arg(3);

}  // namespace
