#include "evoq/baseline.hpp"

#include <stdexcept>

namespace evoq {

void BaselineConfig::validate() const {
  if (budget < 1) {
    throw std::invalid_argument("BaselineConfig: budget must be >= 1");
  }
  if (!(p0 > 0.0 && p0 <= 1.0)) {
    throw std::invalid_argument("BaselineConfig: p0 must be in (0, 1]");
  }
  for (std::size_t i = 1; i < p_halving_thresholds.size(); ++i) {
    if (p_halving_thresholds[i] <= p_halving_thresholds[i - 1]) {
      throw std::invalid_argument(
          "BaselineConfig: p_halving_thresholds must be strictly ascending");
    }
  }
}

AttackResult random_search_attack(QueryOracle& oracle, const Image& x, int y,
                                  const BaselineConfig& cfg) {
  cfg.validate();
  if (Shape3{x.channels, x.height, x.width} != oracle.input_shape()) {
    throw std::invalid_argument(
        "random_search_attack: image does not match oracle input");
  }
  if (y < 0 || y >= oracle.num_classes()) {
    throw std::invalid_argument("random_search_attack: label out of range");
  }

  Rng rng(cfg.seed);
  Image cur = stripes_init(x, cfg.eps, 1, InitMode::FullStripes, rng)[0];
  LogitVector cur_logits = oracle.predict_logits(cur);
  std::uint64_t queries = 1;
  double cur_margin = fitness_value(cur_logits, y, cur, x, 0.0);

  AttackResult r;
  r.best_fitness_per_generation.push_back(cur_margin);

  auto finish = [&](const Image& img, const LogitVector& logits, bool success,
                    int steps, double margin) {
    r.success = success;
    r.adversarial = img;
    r.queries_used = queries;
    r.generations_run = steps;
    r.final_fitness = margin;
    r.adversarial_label = predict_label(logits);
    return r;
  };

  if (predict_label(cur_logits) != y) {
    return finish(cur, cur_logits, true, 0, cur_margin);
  }

  for (std::uint64_t step = 1; step <= cfg.budget; ++step) {
    double p = p_schedule(queries, cfg.p0, cfg.p_halving_thresholds);
    Image prop = square_mutation(cur, x, cfg.eps, p, rng);
    LogitVector logits = oracle.predict_logits(prop);
    ++queries;
    double margin = fitness_value(logits, y, prop, x, 0.0);
    if (predict_label(logits) != y) {
      return finish(prop, logits, true, static_cast<int>(step), margin);
    }
    if (margin < cur_margin) {
      cur = std::move(prop);
      cur_logits = std::move(logits);
      cur_margin = margin;
      r.best_fitness_per_generation.push_back(cur_margin);
    }
  }
  return finish(cur, cur_logits, false, static_cast<int>(cfg.budget),
                cur_margin);
}

}  // namespace evoq
