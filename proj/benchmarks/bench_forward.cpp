#include <benchmark/benchmark.h>

#include "evoq/model.hpp"
#include "evoq/rng.hpp"

namespace {

using namespace evoq;

Image random_image(Rng& rng, Shape3 s) {
  Image img(s.channels, s.height, s.width);
  for (auto& v : img.data) v = rng.unit();
  return img;
}

void BM_ForwardDense256(benchmark::State& state) {
  Rng rng(1);
  auto spec = ModelSpec::digit_dense({1, 28, 28}, 10, 256);
  Weights w = random_weights(spec, rng);
  Image x = random_image(rng, spec.input);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(spec, w, x));
  }
}
BENCHMARK(BM_ForwardDense256);

void BM_ForwardConvNet(benchmark::State& state) {
  Rng rng(2);
  auto spec = ModelSpec::digit_cnn({1, 28, 28}, 10,
                                   static_cast<int>(state.range(0)),
                                   static_cast<int>(state.range(0)) * 2,
                                   static_cast<int>(state.range(0)) * 4);
  Weights w = random_weights(spec, rng);
  Image x = random_image(rng, spec.input);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(spec, w, x));
  }
}
BENCHMARK(BM_ForwardConvNet)->Arg(8)->Arg(32);

}  // namespace
