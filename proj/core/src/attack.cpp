#include "evoq/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace evoq {

void AttackConfig::validate() const {
  if (pop_size < 4) {
    throw std::invalid_argument("AttackConfig: pop_size must be at least 4");
  }
  if ((pop_size - 1) % 3 != 0) {
    throw std::invalid_argument(
        "AttackConfig: pop_size - 1 must be divisible by 3");
  }
  if (tournament < 1 || tournament > pop_size) {
    throw std::invalid_argument("AttackConfig: tournament must be in [1, N]");
  }
  if (max_generations < 1) {
    throw std::invalid_argument("AttackConfig: max_generations must be >= 1");
  }
  if (!(p0 > 0.0 && p0 <= 1.0)) {
    throw std::invalid_argument("AttackConfig: p0 must be in (0, 1]");
  }
  if (lambda < 0.0) {
    throw std::invalid_argument("AttackConfig: lambda must be >= 0");
  }
  for (std::size_t i = 1; i < p_halving_thresholds.size(); ++i) {
    if (p_halving_thresholds[i] <= p_halving_thresholds[i - 1]) {
      throw std::invalid_argument(
          "AttackConfig: p_halving_thresholds must be strictly ascending");
    }
  }
}

double fitness_value(const LogitVector& logits, int y, const Image& x_hat,
                     const Image& x, double lambda) {
  if (logits.size() < 2) {
    throw std::invalid_argument("fitness_value: need at least 2 classes");
  }
  if (y < 0 || y >= static_cast<int>(logits.size())) {
    throw std::out_of_range("fitness_value: label out of range");
  }
  double best_other = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < static_cast<int>(logits.size()); ++c) {
    if (c != y) best_other = std::max(best_other, logits[c]);
  }
  return logits[y] - best_other + lambda * l2_dist(x_hat, x);
}

double p_schedule(std::uint64_t queries_used, double p0,
                  const std::vector<std::uint64_t>& thresholds) {
  int m = 0;
  for (auto t : thresholds) {
    if (t <= queries_used) ++m;
  }
  return std::ldexp(p0, -m);
}

std::vector<Image> stripes_init(const Image& x, Epsilon eps, int n,
                                InitMode mode, Rng& rng) {
  if (n < 1) throw std::invalid_argument("stripes_init: n must be >= 1");
  std::vector<Image> out;
  out.reserve(n);
  const double e = eps.value();
  for (int i = 0; i < n; ++i) {
    Image img = x;
    if (mode == InitMode::FullStripes) {
      for (int c = 0; c < x.channels; ++c) {
        for (int col = 0; col < x.width; ++col) {
          double off = rng.pick_sign(e);
          for (int y = 0; y < x.height; ++y) img.at(c, y, col) += off;
        }
      }
    } else {
      for (int c = 0; c < x.channels; ++c) {
        int col = static_cast<int>(rng.index(x.width));
        for (int y = 0; y < x.height; ++y) {
          img.at(c, y, col) += rng.pick_sign(e);
        }
      }
    }
    out.push_back(project_feasible(img, x, eps));
  }
  return out;
}

std::size_t tournament_select(const std::vector<Candidate>& pop, int t,
                              Rng& rng) {
  if (t < 1 || t > static_cast<int>(pop.size())) {
    throw std::invalid_argument("tournament_select: T out of range");
  }
  auto picks = rng.sample_indices(pop.size(), static_cast<std::size_t>(t));
  std::size_t best = pop.size();
  for (std::size_t idx : picks) {
    if (!pop[idx].evaluated) {
      throw std::logic_error("tournament_select: unevaluated candidate");
    }
    if (best == pop.size() || pop[idx].fitness < pop[best].fitness ||
        (pop[idx].fitness == pop[best].fitness && idx < best)) {
      best = idx;
    }
  }
  return best;
}

std::pair<Image, Image> two_point_crossover(const Image& a, const Image& b,
                                            const Image& origin, Epsilon eps,
                                            Rng& rng) {
  detail::require_same_shape(a, b, "two_point_crossover");
  detail::require_same_shape(a, origin, "two_point_crossover");
  const std::size_t d = a.data.size();
  std::size_t i = rng.index(d + 1);
  std::size_t j = rng.index(d + 1);
  if (i > j) std::swap(i, j);
  Image c1 = a;
  Image c2 = b;
  for (std::size_t k = i; k < j; ++k) {
    c1.data[k] = b.data[k];
    c2.data[k] = a.data[k];
  }
  return {project_feasible(c1, origin, eps), project_feasible(c2, origin, eps)};
}

Image square_mutation(const Image& x_hat, const Image& origin, Epsilon eps,
                      double p, Rng& rng) {
  detail::require_same_shape(x_hat, origin, "square_mutation");
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::invalid_argument("square_mutation: p must be in (0, 1]");
  }
  const int h = x_hat.height;
  const int w = x_hat.width;
  const int k = static_cast<int>(
      std::ceil(std::sqrt(p * static_cast<double>(h) * w)));
  if (k > std::min(h, w)) {
    throw std::invalid_argument(
        "square_mutation: square side " + std::to_string(k) +
        " exceeds image " + x_hat.shape_string());
  }
  const int row = static_cast<int>(rng.index(h - k + 1));
  const int col = static_cast<int>(rng.index(w - k + 1));
  Image out = x_hat;
  for (int c = 0; c < x_hat.channels; ++c) {
    double tau = rng.pick_sign(2.0 * eps.value());
    for (int y = row; y < row + k; ++y) {
      for (int x = col; x < col + k; ++x) {
        out.at(c, y, x) += tau;
      }
    }
  }
  return project_feasible(out, origin, eps);
}

namespace {

std::size_t best_index(const std::vector<Candidate>& pop) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pop.size(); ++i) {
    if (pop[i].fitness < pop[best].fitness) best = i;
  }
  return best;
}

AttackResult make_result(const Candidate& cand, bool success,
                         std::uint64_t queries, int generations,
                         std::vector<double> history) {
  AttackResult r;
  r.success = success;
  r.adversarial = cand.image;
  r.queries_used = queries;
  r.generations_run = generations;
  r.final_fitness = cand.fitness;
  r.adversarial_label = predict_label(cand.logits);
  r.best_fitness_per_generation = std::move(history);
  return r;
}

}  // namespace

AttackResult attack(QueryOracle& oracle, const Image& x, int y,
                    const AttackConfig& cfg) {
  cfg.validate();
  if (Shape3{x.channels, x.height, x.width} != oracle.input_shape()) {
    throw std::invalid_argument("attack: image does not match oracle input");
  }
  if (y < 0 || y >= oracle.num_classes()) {
    throw std::invalid_argument("attack: label out of range");
  }

  Rng rng(cfg.seed);
  const int n = cfg.pop_size;

  std::vector<Candidate> pop;
  pop.reserve(n);
  for (Image& img : stripes_init(x, cfg.eps, n, cfg.init_mode, rng)) {
    pop.push_back(Candidate{std::move(img), {}, 0.0, false});
  }

  std::uint64_t queries = 0;
  std::vector<double> history;
  int gen = 0;

  while (true) {
    ++gen;
    // Evaluate in population order; the first adversarial candidate ends
    // the run, so early generations can terminate below N queries.
    for (int i = 0; i < n; ++i) {
      Candidate& cand = pop[i];
      if (cand.evaluated) continue;
      cand.logits = oracle.predict_logits(cand.image);
      ++queries;
      cand.fitness = fitness_value(cand.logits, y, cand.image, x, cfg.lambda);
      cand.evaluated = true;
      if (predict_label(cand.logits) != y) {
        return make_result(cand, true, queries, gen, std::move(history));
      }
    }

    const std::size_t best = best_index(pop);
    history.push_back(pop[best].fitness);
    if (gen == cfg.max_generations) {
      return make_result(pop[best], false, queries, gen, std::move(history));
    }

    // Next generation: the elite image plus (N-1)/3 crossover triples.
    // The elite enters unevaluated and is re-queried with the rest of the
    // generation, so every generation consumes N queries on the failure
    // path (deterministic oracles return it identical logits).
    const double p = p_schedule(queries, cfg.p0, cfg.p_halving_thresholds);
    std::vector<Candidate> next;
    next.reserve(n);
    next.push_back(Candidate{pop[best].image, {}, 0.0, false});
    for (int i = 0; i < (n - 1) / 3; ++i) {
      const Candidate& p1 = pop[tournament_select(pop, cfg.tournament, rng)];
      const Candidate& p2 = pop[tournament_select(pop, cfg.tournament, rng)];
      auto [off1, off2] =
          two_point_crossover(p1.image, p2.image, x, cfg.eps, rng);
      Image mut1 = square_mutation(off1, x, cfg.eps, p, rng);
      Image mut2 = square_mutation(off2, x, cfg.eps, p, rng);
      next.push_back(Candidate{std::move(off1), {}, 0.0, false});
      next.push_back(Candidate{std::move(mut1), {}, 0.0, false});
      next.push_back(Candidate{std::move(mut2), {}, 0.0, false});
    }
    pop = std::move(next);
  }
}

}  // namespace evoq
