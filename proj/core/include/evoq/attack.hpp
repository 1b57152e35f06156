#ifndef EVOQ_ATTACK_HPP
#define EVOQ_ATTACK_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "evoq/image.hpp"
#include "evoq/oracle.hpp"
#include "evoq/rng.hpp"

namespace evoq {

enum class InitMode {
  // Every column of every channel is offset by a single value drawn
  // uniformly from {-eps, +eps}: the whole image starts on the edge of the
  // eps-ball (before box clamping).
  FullStripes,
  // One randomly positioned width-1 vertical stripe per channel, each of its
  // elements drawn uniformly from {-eps, +eps}; the rest is unchanged.
  SparseStripes,
};

// One population member: a feasible image plus the logits cached from its
// single oracle evaluation and the fitness derived from them.
struct Candidate {
  Image image;
  LogitVector logits;
  double fitness = 0.0;
  bool evaluated = false;
};

struct AttackConfig {
  Epsilon eps{0.1};
  double lambda = 1.0;        // L2 regularization strength
  int pop_size = 70;          // N; (N-1) must be divisible by 3
  int tournament = 25;        // T in [1, N]
  int max_generations = 600;  // G; query budget is N*G
  double p0 = 0.1;            // initial mutation proportion
  std::vector<std::uint64_t> p_halving_thresholds{40,   200,   800,  4000,
                                                  8000, 16000, 24000, 32000};
  std::uint64_t seed = 0;
  InitMode init_mode = InitMode::FullStripes;

  // Throws std::invalid_argument on any violated constraint.
  void validate() const;
};

struct AttackResult {
  bool success = false;
  Image adversarial;
  std::uint64_t queries_used = 0;
  int generations_run = 0;
  double final_fitness = 0.0;
  int adversarial_label = -1;
  // Best fitness observed after each fully evaluated generation.
  std::vector<double> best_fitness_per_generation;
};

// fitness(x_hat) = logits[y] - max_{c != y} logits[c] + lambda * ||x_hat - x||_2.
// Uses cached logits only; consumes no query. Throws std::out_of_range if y
// is not a valid class index.
double fitness_value(const LogitVector& logits, int y, const Image& x_hat,
                     const Image& x, double lambda);

// p0 * 2^-m where m counts thresholds <= queries_used (boundary inclusive).
double p_schedule(std::uint64_t queries_used, double p0,
                  const std::vector<std::uint64_t>& thresholds);

// n feasible, unevaluated start images on (or at eps=0, in) the eps-ball.
std::vector<Image> stripes_init(const Image& x, Epsilon eps, int n,
                                InitMode mode, Rng& rng);

// Index of the minimum-fitness member of a uniformly drawn T-subset
// (without replacement). Fitness ties break to the earliest population
// index. Requires every candidate to be evaluated.
std::size_t tournament_select(const std::vector<Candidate>& pop, int t,
                              Rng& rng);

// Standard two-point crossover on the channel-major flattening: draws cut
// points i <= j uniformly over [0, d] and swaps the segment [i, j).
// Both children are projected back into the feasible set.
std::pair<Image, Image> two_point_crossover(const Image& a, const Image& b,
                                            const Image& origin, Epsilon eps,
                                            Rng& rng);

// Adds, per channel, a value drawn uniformly from {-2*eps, +2*eps} over one
// k x k window (k = ceil(sqrt(p * h * w))) placed uniformly at random so it
// fits inside the image, then projects. Throws std::invalid_argument if the
// square does not fit (k > min(h, w)).
Image square_mutation(const Image& x_hat, const Image& origin, Epsilon eps,
                      double p, Rng& rng);

// The full evolutionary search. The caller guarantees that y is the
// oracle's label for x. Evaluation within a generation proceeds in
// population order and stops at the first misclassified candidate, so a
// success in generation 1 can cost fewer than N queries; an exhausted run
// costs exactly N*G.
AttackResult attack(QueryOracle& oracle, const Image& x, int y,
                    const AttackConfig& cfg);

}  // namespace evoq

#endif  // EVOQ_ATTACK_HPP
