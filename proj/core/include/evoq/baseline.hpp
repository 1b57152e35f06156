#ifndef EVOQ_BASELINE_HPP
#define EVOQ_BASELINE_HPP

#include "evoq/attack.hpp"

namespace evoq {

// Single-candidate random square search: the comparison baseline run under
// the same feasibility and accounting rules as the evolutionary attack.
struct BaselineConfig {
  Epsilon eps{0.1};
  double p0 = 0.1;
  std::vector<std::uint64_t> p_halving_thresholds{40,   200,   800,  4000,
                                                  8000, 16000, 24000, 32000};
  std::uint64_t budget = 42000;  // proposals after the initial candidate
  std::uint64_t seed = 0;

  void validate() const;
};

// Starts from a single full-stripes candidate and repeatedly proposes a
// square mutation of the current point, accepting a proposal only when the
// unregularized margin (lambda = 0) strictly decreases. Stops at the first
// misclassification or after `budget` proposals, so a full failure run
// consumes exactly budget + 1 queries.
AttackResult random_search_attack(QueryOracle& oracle, const Image& x, int y,
                                  const BaselineConfig& cfg);

}  // namespace evoq

#endif  // EVOQ_BASELINE_HPP
