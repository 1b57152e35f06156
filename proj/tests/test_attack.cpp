#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "evoq/attack.hpp"
#include "evoq/rng.hpp"

using namespace evoq;

namespace {

Image random_image(Rng& rng, int c, int h, int w) {
  Image img(c, h, w);
  for (auto& v : img.data) v = rng.unit();
  return img;
}

FunctionOracle constant_oracle(Shape3 shape, LogitVector logits) {
  return FunctionOracle(shape, static_cast<int>(logits.size()),
                        [logits](const Image&) { return logits; });
}

bool feasible(const Image& img, const Image& origin, Epsilon eps) {
  if (linf_dist(img, origin) > eps.value() + 1e-12) return false;
  return std::all_of(img.data.begin(), img.data.end(),
                     [](double v) { return v >= 0.0 && v <= 1.0; });
}

AttackConfig small_config(double eps, int n = 7, int t = 3, int g = 4) {
  AttackConfig cfg;
  cfg.eps = Epsilon(eps);
  cfg.pop_size = n;
  cfg.tournament = t;
  cfg.max_generations = g;
  return cfg;
}

}  // namespace

TEST_CASE("fitness matches the worked examples") {
  Image x(1, 3, 3, 0.5);
  SUBCASE("zero distance") {
    CHECK(fitness_value({2.0, 5.0, 1.0}, 0, x, x, 1.0) == -3.0);
  }
  SUBCASE("with l2 term") {
    Image x_hat = x;
    x_hat.at(0, 0, 0) += 0.3;
    x_hat.at(0, 1, 1) += 0.4;  // l2 = 0.5
    CHECK(fitness_value({2.0, 5.0, 1.0}, 0, x_hat, x, 1.0) ==
          doctest::Approx(-2.5).epsilon(1e-12));
  }
}

TEST_CASE("fitness matches an independent recomputation") {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    int classes = 2 + static_cast<int>(rng.index(8));
    LogitVector logits(classes);
    for (auto& v : logits) v = rng.unit() * 20 - 10;
    int y = static_cast<int>(rng.index(classes));
    Image a = random_image(rng, 1, 4, 4);
    Image b = random_image(rng, 1, 4, 4);
    double lambda = rng.unit() * 2;

    double other = -1e300;
    for (int c = 0; c < classes; ++c) {
      if (c != y) other = std::max(other, logits[c]);
    }
    double dist = 0.0;
    for (int i = 0; i < a.size(); ++i) {
      dist += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
    }
    double expect = logits[y] - other + lambda * std::sqrt(dist);
    CHECK(fitness_value(logits, y, a, b, lambda) ==
          doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("fitness rejects bad labels") {
  Image x(1, 2, 2, 0.5);
  CHECK_THROWS_AS(fitness_value({1.0, 2.0}, 2, x, x, 1.0), std::out_of_range);
  CHECK_THROWS_AS(fitness_value({1.0, 2.0}, -1, x, x, 1.0),
                  std::out_of_range);
  CHECK_THROWS_AS(fitness_value({1.0}, 0, x, x, 1.0), std::invalid_argument);
}

TEST_CASE("margin sign agrees with misclassification when lambda is zero") {
  Rng rng(32);
  Image x(1, 2, 2, 0.5);
  for (int trial = 0; trial < 500; ++trial) {
    LogitVector logits(4);
    for (auto& v : logits) v = rng.unit() * 10 - 5;
    int y = static_cast<int>(rng.index(4));
    double other = -1e300;
    for (int c = 0; c < 4; ++c) {
      if (c != y) other = std::max(other, logits[c]);
    }
    if (logits[y] == other) continue;  // strict ties excluded
    double f = fitness_value(logits, y, x, x, 0.0);
    CHECK((f < 0.0) == (predict_label(logits) != y));
  }
}

TEST_CASE("p_schedule reproduces the published halving points") {
  const std::vector<std::uint64_t> thresholds{40,   200,   800,   4000,
                                              8000, 16000, 24000, 32000};
  CHECK(p_schedule(0, 0.1, thresholds) == 0.1);
  CHECK(p_schedule(39, 0.1, thresholds) == 0.1);
  CHECK(p_schedule(40, 0.1, thresholds) == 0.05);
  CHECK(p_schedule(199, 0.1, thresholds) == 0.05);
  CHECK(p_schedule(200, 0.1, thresholds) == 0.025);
  CHECK(p_schedule(32000, 0.1, thresholds) == 0.1 / 256);
  CHECK(p_schedule(40000, 0.1, thresholds) == 0.1 / 256);
}

TEST_CASE("stripes_init with eps 0 returns the origin") {
  Rng rng(33);
  Image x = random_image(rng, 3, 6, 5);
  for (auto mode : {InitMode::FullStripes, InitMode::SparseStripes}) {
    auto pop = stripes_init(x, Epsilon(0.0), 4, mode, rng);
    for (const auto& img : pop) CHECK(img.data == x.data);
  }
}

TEST_CASE("full stripes sit on the ball edge with constant columns") {
  Rng rng(34);
  Image x(2, 5, 6, 0.5);
  auto pop = stripes_init(x, Epsilon(0.1), 8, InitMode::FullStripes, rng);
  REQUIRE(pop.size() == 8);
  for (const auto& img : pop) {
    for (int c = 0; c < x.channels; ++c) {
      for (int col = 0; col < x.width; ++col) {
        double v = img.at(c, 0, col);
        CHECK((v == doctest::Approx(0.4) || v == doctest::Approx(0.6)));
        for (int y = 1; y < x.height; ++y) {
          CHECK(img.at(c, y, col) == v);
        }
      }
    }
  }
}

TEST_CASE("sparse stripes touch at most one column per channel") {
  Rng rng(35);
  Image x(3, 8, 8, 0.5);
  const double eps = 0.07;
  auto pop = stripes_init(x, Epsilon(eps), 10, InitMode::SparseStripes, rng);
  for (const auto& img : pop) {
    int differing = 0;
    for (int c = 0; c < x.channels; ++c) {
      std::set<int> cols;
      for (int y = 0; y < x.height; ++y) {
        for (int col = 0; col < x.width; ++col) {
          double d = img.at(c, y, col) - x.at(c, y, col);
          if (d != 0.0) {
            ++differing;
            cols.insert(col);
            CHECK(std::abs(d) == doctest::Approx(eps).epsilon(1e-12));
          }
        }
      }
      CHECK(cols.size() <= 1);
    }
    CHECK(differing <= x.channels * x.height);
  }
}

TEST_CASE("tournament selection") {
  Rng rng(36);
  std::vector<Candidate> pop;
  Image img(1, 2, 2, 0.5);
  for (double f : {0.3, -1.0, 0.7, -1.0, 2.0}) {
    pop.push_back(Candidate{img, {1.0, 0.0}, f, true});
  }

  SUBCASE("T equals N picks the global best, ties to earliest") {
    for (int i = 0; i < 20; ++i) {
      CHECK(tournament_select(pop, 5, rng) == 1);  // -1.0 at index 1 wins
    }
  }
  SUBCASE("T out of range throws") {
    CHECK_THROWS_AS(tournament_select(pop, 6, rng), std::invalid_argument);
    CHECK_THROWS_AS(tournament_select(pop, 0, rng), std::invalid_argument);
  }
  SUBCASE("T=1 is a uniform draw") {
    std::map<std::size_t, int> counts;
    const int kDraws = 50000;
    for (int i = 0; i < kDraws; ++i) counts[tournament_select(pop, 1, rng)]++;
    for (auto& [idx, n] : counts) {
      CHECK(std::abs(n / static_cast<double>(kDraws) - 0.2) < 0.02);
    }
  }
}

TEST_CASE("tournament frequencies match subset enumeration") {
  // N=5, T=2, distinct fitness values: enumerate all 2-subsets to get the
  // exact win probability of each rank, then compare against sampling.
  Rng rng(37);
  std::vector<Candidate> pop;
  Image img(1, 2, 2, 0.5);
  for (double f : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    pop.push_back(Candidate{img, {1.0, 0.0}, f, true});
  }
  std::map<std::size_t, double> expect;
  int subsets = 0;
  for (std::size_t a = 0; a < 5; ++a) {
    for (std::size_t b = a + 1; b < 5; ++b) {
      expect[pop[a].fitness < pop[b].fitness ? a : b] += 1.0;
      ++subsets;
    }
  }
  for (auto& [idx, n] : expect) n /= subsets;

  std::map<std::size_t, double> got;
  const int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) got[tournament_select(pop, 2, rng)] += 1.0;
  for (auto& [idx, n] : got) n /= kDraws;

  for (std::size_t idx = 0; idx < 5; ++idx) {
    CHECK(std::abs(got[idx] - expect[idx]) < 0.02);
  }
}

TEST_CASE("two point crossover") {
  Rng rng(38);
  Image origin(1, 4, 4, 0.5);

  SUBCASE("identical parents produce identical children") {
    Image p = random_image(rng, 1, 4, 4);
    auto [c1, c2] = two_point_crossover(p, p, p, Epsilon(0.2), rng);
    CHECK(c1.data == p.data);
    CHECK(c2.data == p.data);
  }

  SUBCASE("children swap one contiguous flat segment") {
    Image p1(1, 4, 4, 0.25);
    Image p2(1, 4, 4, 0.75);
    for (int trial = 0; trial < 200; ++trial) {
      auto [c1, c2] = two_point_crossover(p1, p2, origin, Epsilon(0.3), rng);
      // c1 must be 0.75 exactly on [i,j) and 0.25 elsewhere; c2 mirrors it.
      int transitions = 0;
      for (int k = 1; k < c1.size(); ++k) {
        if (c1.data[k] != c1.data[k - 1]) ++transitions;
      }
      CHECK(transitions <= 2);
      for (int k = 0; k < c1.size(); ++k) {
        bool swapped = c1.data[k] == 0.75;
        CHECK(c1.data[k] == (swapped ? 0.75 : 0.25));
        CHECK(c2.data[k] == (swapped ? 0.25 : 0.75));
      }
    }
  }

  SUBCASE("children are projected feasible") {
    for (int trial = 0; trial < 100; ++trial) {
      Image o = random_image(rng, 2, 3, 5);
      Epsilon eps(0.15);
      // parents feasible by construction
      Image p1 = project_feasible(random_image(rng, 2, 3, 5), o, eps);
      Image p2 = project_feasible(random_image(rng, 2, 3, 5), o, eps);
      auto [c1, c2] = two_point_crossover(p1, p2, o, eps, rng);
      CHECK(feasible(c1, o, eps));
      CHECK(feasible(c2, o, eps));
      // every element comes from one of the parents
      for (int k = 0; k < c1.size(); ++k) {
        CHECK((c1.data[k] == p1.data[k] || c1.data[k] == p2.data[k]));
        CHECK((c2.data[k] == p1.data[k] || c2.data[k] == p2.data[k]));
      }
    }
  }
}

TEST_CASE("square mutation geometry") {
  Rng rng(39);

  SUBCASE("side length from the proportion") {
    // p=0.1 on 28x28: ceil(sqrt(78.4)) = 9
    Image x(1, 28, 28, 0.5);
    Image out = square_mutation(x, x, Epsilon(0.1), 0.1, rng);
    std::set<int> rows, cols;
    for (int y = 0; y < 28; ++y) {
      for (int col = 0; col < 28; ++col) {
        if (out.at(0, y, col) != 0.5) {
          rows.insert(y);
          cols.insert(col);
        }
      }
    }
    CHECK(rows.size() == 9);
    CHECK(cols.size() == 9);
  }

  SUBCASE("p=1 covers the whole image") {
    Image x(1, 8, 8, 0.5);
    Image out = square_mutation(x, x, Epsilon(0.05), 1.0, rng);
    for (double v : out.data) CHECK(v != 0.5);
  }

  SUBCASE("degenerate geometry throws") {
    Image x(1, 4, 10, 0.5);  // k = ceil(sqrt(40)) = 7 > min(h,w)
    CHECK_THROWS_AS(square_mutation(x, x, Epsilon(0.1), 1.0, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(square_mutation(x, x, Epsilon(0.1), 0.0, rng),
                    std::invalid_argument);
  }

  SUBCASE("elements outside the window are untouched") {
    for (int trial = 0; trial < 100; ++trial) {
      Image origin = random_image(rng, 3, 10, 10);
      Epsilon eps(0.12);
      Image x_hat = project_feasible(random_image(rng, 3, 10, 10), origin,
                                     eps);
      Image out = square_mutation(x_hat, origin, eps, 0.2, rng);
      CHECK(feasible(out, origin, eps));
      // k = ceil(sqrt(20)) = 5; diffs confined to one 5x5 window shared
      // across channels
      int k = 5;
      std::set<int> rows, cols;
      int diffs = 0;
      for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 10; ++y) {
          for (int col = 0; col < 10; ++col) {
            if (out.at(c, y, col) != x_hat.at(c, y, col)) {
              rows.insert(y);
              cols.insert(col);
              ++diffs;
            }
          }
        }
      }
      CHECK(diffs <= k * k * 3);
      if (!rows.empty()) {
        CHECK(*rows.rbegin() - *rows.begin() < k);
        CHECK(*cols.rbegin() - *cols.begin() < k);
      }
    }
  }
}

TEST_CASE("attack config validation") {
  AttackConfig cfg = small_config(0.1);
  CHECK_NOTHROW(cfg.validate());

  SUBCASE("population must be 1 mod 3") {
    cfg.pop_size = 9;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("population floor") {
    cfg.pop_size = 1;
    cfg.tournament = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("tournament bounds") {
    cfg.tournament = cfg.pop_size + 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("thresholds must ascend") {
    cfg.p_halving_thresholds = {40, 40};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
}

TEST_CASE("attack on a constant oracle exhausts exactly N*G queries") {
  FunctionOracle oracle = constant_oracle({1, 6, 6}, {5.0, 1.0, 0.0});
  Image x(1, 6, 6, 0.5);
  AttackConfig cfg = small_config(0.1, 7, 3, 4);
  AttackResult r = attack(oracle, x, 0, cfg);
  CHECK_FALSE(r.success);
  CHECK(r.queries_used == 7 * 4);
  CHECK(oracle.query_count() == 7 * 4);
  CHECK(r.generations_run == 4);
  CHECK(r.adversarial_label == 0);
  CHECK(feasible(r.adversarial, x, cfg.eps));
  // eps=0 runs are legal and also fail with full accounting
  AttackConfig frozen = small_config(0.0, 4, 2, 3);
  FunctionOracle oracle2 = constant_oracle({1, 6, 6}, {5.0, 1.0, 0.0});
  AttackResult r2 = attack(oracle2, x, 0, frozen);
  CHECK_FALSE(r2.success);
  CHECK(r2.queries_used == 4 * 3);
  CHECK(r2.adversarial.data == x.data);
}

TEST_CASE("attack succeeds during init when the oracle flips easily") {
  // label 1 whenever any pixel moved: the first evaluated stripe candidate
  // is already adversarial.
  Image x(1, 5, 5, 0.5);
  FunctionOracle oracle({1, 5, 5}, 2, [&x](const Image& q) {
    return q.data == x.data ? LogitVector{1.0, 0.0} : LogitVector{0.0, 1.0};
  });
  AttackConfig cfg = small_config(0.2, 7, 3, 5);
  AttackResult r = attack(oracle, x, 0, cfg);
  CHECK(r.success);
  CHECK(r.generations_run == 1);
  CHECK(r.queries_used <= 7);
  CHECK(r.adversarial_label == 1);
  CHECK(feasible(r.adversarial, x, cfg.eps));
}

TEST_CASE("attack is deterministic for a fixed seed") {
  Rng rng(40);
  Image x = random_image(rng, 1, 6, 6);
  auto make_oracle = [] {
    return FunctionOracle({1, 6, 6}, 3, [](const Image& q) {
      // a fixed nonlinear but pure scoring function
      double s1 = 0, s2 = 0;
      for (int i = 0; i < q.size(); ++i) {
        (i % 2 ? s1 : s2) += q.data[i] * ((i % 5) - 2);
      }
      return LogitVector{2.0 + 0.05 * s1, s2, s1 * s2 * 0.01};
    });
  };
  AttackConfig cfg = small_config(0.15, 10, 4, 6);
  cfg.seed = 99;
  auto o1 = make_oracle();
  auto o2 = make_oracle();
  AttackResult a = attack(o1, x, 0, cfg);
  AttackResult b = attack(o2, x, 0, cfg);
  CHECK(a.success == b.success);
  CHECK(a.queries_used == b.queries_used);
  CHECK(a.generations_run == b.generations_run);
  CHECK(a.final_fitness == b.final_fitness);
  CHECK(a.adversarial.data == b.adversarial.data);
  CHECK(a.best_fitness_per_generation == b.best_fitness_per_generation);
}

TEST_CASE("best fitness is non-increasing across generations") {
  Rng seeds(41);
  for (int trial = 0; trial < 30; ++trial) {
    std::uint64_t wseed = seeds.next();
    FunctionOracle oracle({1, 6, 6}, 4, [wseed](const Image& q) {
      // pure pseudo-random linear model derived from wseed
      Rng wr(wseed);
      LogitVector out(4, 0.0);
      for (int c = 0; c < 4; ++c) {
        for (int i = 0; i < q.size(); ++i) {
          out[c] += (wr.unit() - 0.5) * q.data[i];
        }
      }
      return out;
    });
    Image x(1, 6, 6, 0.5);
    LogitVector base = oracle.predict_logits(x);
    AttackConfig cfg = small_config(0.05, 7, 3, 8);
    cfg.seed = seeds.next();
    AttackResult r = attack(oracle, x, predict_label(base), cfg);
    for (std::size_t g = 1; g < r.best_fitness_per_generation.size(); ++g) {
      CHECK(r.best_fitness_per_generation[g] <=
            r.best_fitness_per_generation[g - 1]);
    }
  }
}

TEST_CASE("feasibility closure under operator sequences") {
  Rng rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    int c = 1 + static_cast<int>(rng.index(3));
    int h = 4 + static_cast<int>(rng.index(8));
    int w = 4 + static_cast<int>(rng.index(8));
    Image origin = random_image(rng, c, h, w);
    Epsilon eps(rng.unit() * 0.3);

    auto pop = stripes_init(origin, eps, 2,
                            rng.next() % 2 ? InitMode::FullStripes
                                           : InitMode::SparseStripes,
                            rng);
    Image a = pop[0], b = pop[1];
    for (int step = 0; step < 4; ++step) {
      switch (rng.index(3)) {
        case 0: {
          double pmax = static_cast<double>(std::min(h, w)) *
                        std::min(h, w) / (static_cast<double>(h) * w);
          double p = std::min(pmax, rng.unit() * pmax + 1e-6);
          a = square_mutation(a, origin, eps, p, rng);
          break;
        }
        case 1:
          std::tie(a, b) = two_point_crossover(a, b, origin, eps, rng);
          break;
        default:
          a = project_feasible(a, origin, eps);
          break;
      }
      CHECK(feasible(a, origin, eps));
      CHECK(feasible(b, origin, eps));
    }
  }
}

TEST_CASE("attack rejects mismatched inputs") {
  FunctionOracle oracle = constant_oracle({1, 4, 4}, {1.0, 0.0});
  Image wrong(1, 5, 5, 0.5);
  AttackConfig cfg = small_config(0.1, 4, 2, 2);
  CHECK_THROWS_AS(attack(oracle, wrong, 0, cfg), std::invalid_argument);
  Image x(1, 4, 4, 0.5);
  CHECK_THROWS_AS(attack(oracle, x, 5, cfg), std::invalid_argument);
}
