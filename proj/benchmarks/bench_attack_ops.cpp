#include <benchmark/benchmark.h>

#include "evoq/attack.hpp"
#include "evoq/rng.hpp"

namespace {

using namespace evoq;

Image random_image(Rng& rng, int c, int h, int w) {
  Image img(c, h, w);
  for (auto& v : img.data) v = rng.unit();
  return img;
}

void BM_SquareMutation(benchmark::State& state) {
  Rng rng(3);
  Image origin = random_image(rng, 1, 28, 28);
  Image x = project_feasible(random_image(rng, 1, 28, 28), origin,
                             Epsilon(0.2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        square_mutation(x, origin, Epsilon(0.2), 0.1, rng));
  }
}
BENCHMARK(BM_SquareMutation);

void BM_TwoPointCrossover(benchmark::State& state) {
  Rng rng(4);
  Image origin = random_image(rng, 1, 28, 28);
  Image a = project_feasible(random_image(rng, 1, 28, 28), origin,
                             Epsilon(0.2));
  Image b = project_feasible(random_image(rng, 1, 28, 28), origin,
                             Epsilon(0.2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        two_point_crossover(a, b, origin, Epsilon(0.2), rng));
  }
}
BENCHMARK(BM_TwoPointCrossover);

void BM_ProjectFeasible(benchmark::State& state) {
  Rng rng(5);
  Image origin = random_image(rng, 3, 32, 32);
  Image cand = random_image(rng, 3, 32, 32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(project_feasible(cand, origin, Epsilon(0.1)));
  }
}
BENCHMARK(BM_ProjectFeasible);

void BM_AttackGeneration(benchmark::State& state) {
  // One full failure run on a cheap oracle: dominated by the generation
  // machinery rather than model inference.
  Image x(1, 28, 28, 0.5);
  AttackConfig cfg;
  cfg.eps = Epsilon(0.1);
  cfg.pop_size = 70;
  cfg.tournament = 25;
  cfg.max_generations = 10;
  for (auto _ : state) {
    FunctionOracle oracle({1, 28, 28}, 10, [](const Image& q) {
      LogitVector out(10, 0.0);
      out[0] = 1.0 + q.data[0];
      return out;
    });
    benchmark::DoNotOptimize(attack(oracle, x, 0, cfg));
  }
}
BENCHMARK(BM_AttackGeneration)->Unit(benchmark::kMillisecond);

}  // namespace
