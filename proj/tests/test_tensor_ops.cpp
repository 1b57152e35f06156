#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "evoq/image.hpp"
#include "evoq/rng.hpp"

using namespace evoq;

namespace {

Image random_image(Rng& rng, int c, int h, int w) {
  Image img(c, h, w);
  for (auto& v : img.data) v = rng.unit();
  return img;
}

}  // namespace

TEST_CASE("linf_dist basics") {
  Image a(1, 2, 2, 0.5);
  CHECK(linf_dist(a, a) == 0.0);

  Image b = a;
  b.at(0, 1, 0) = 0.9;
  CHECK(linf_dist(a, b) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(linf_dist(b, a) == linf_dist(a, b));
}

TEST_CASE("linf_dist matches elementwise scan") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Image a = random_image(rng, 3, 5, 7);
    Image b = random_image(rng, 3, 5, 7);
    double expect = 0.0;
    for (int i = 0; i < a.size(); ++i) {
      expect = std::max(expect, std::abs(a.data[i] - b.data[i]));
    }
    CHECK(linf_dist(a, b) == expect);
  }
}

TEST_CASE("l2_dist basics") {
  Image a(1, 3, 3, 0.2);
  CHECK(l2_dist(a, a) == 0.0);

  Image b = a;
  b.at(0, 0, 0) += 0.3;
  b.at(0, 2, 2) += 0.4;
  CHECK(l2_dist(a, b) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("l2_dist matches naive sum of squares") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    Image a = random_image(rng, 2, 6, 4);
    Image b = random_image(rng, 2, 6, 4);
    double s = 0.0;
    for (int i = 0; i < a.size(); ++i) {
      s += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
    }
    CHECK(l2_dist(a, b) == doctest::Approx(std::sqrt(s)).epsilon(1e-9));
  }
}

TEST_CASE("norms reject shape mismatch") {
  Image a(1, 2, 2), b(1, 2, 3), c(2, 2, 2);
  CHECK_THROWS_AS(linf_dist(a, b), std::invalid_argument);
  CHECK_THROWS_AS(l2_dist(a, c), std::invalid_argument);
  CHECK_THROWS_AS(project_feasible(a, b, Epsilon(0.1)),
                  std::invalid_argument);
}

TEST_CASE("project_feasible pointwise cases") {
  Image origin(1, 1, 1, 0.5);

  SUBCASE("identity on the origin") {
    Image out = project_feasible(origin, origin, Epsilon(0.1));
    CHECK(out.data[0] == 0.5);
  }
  SUBCASE("eps clamp") {
    Image cand(1, 1, 1, 0.75);
    Image out = project_feasible(cand, origin, Epsilon(0.1));
    CHECK(out.data[0] == doctest::Approx(0.6).epsilon(1e-12));
  }
  SUBCASE("eps clamp then box clamp") {
    Image o2(1, 1, 1, 0.02);
    Image cand(1, 1, 1, -0.3);
    Image out = project_feasible(cand, o2, Epsilon(0.1));
    CHECK(out.data[0] == 0.0);
  }
}

TEST_CASE("project_feasible invariants") {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    Image origin = random_image(rng, 1, 4, 5);
    Image cand = origin;
    // push candidates well outside both the ball and the box
    for (auto& v : cand.data) v += (rng.unit() - 0.5) * 3.0;
    Epsilon eps(rng.unit() * 0.5);

    Image out = project_feasible(cand, origin, eps);
    CHECK(linf_dist(out, origin) <= eps.value() + 1e-12);
    for (double v : out.data) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }

    // exact idempotence
    Image again = project_feasible(out, origin, eps);
    CHECK(again.data == out.data);

    // feasible inputs pass through untouched
    Image same = project_feasible(out, origin, eps);
    CHECK(same.data == out.data);
  }
}

TEST_CASE("epsilon validation") {
  CHECK(Epsilon(0.0).value() == 0.0);
  CHECK(Epsilon(1.0).value() == 1.0);
  CHECK(Epsilon(60.0 / 255.0).value() == doctest::Approx(0.2353).epsilon(1e-3));
  CHECK_THROWS_AS(Epsilon(-0.01), std::invalid_argument);
  CHECK_THROWS_AS(Epsilon(1.01), std::invalid_argument);
}

TEST_CASE("image constructor rejects bad shapes") {
  CHECK_THROWS_AS(Image(0, 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(Image(1, -1, 2), std::invalid_argument);
}
