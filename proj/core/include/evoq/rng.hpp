#ifndef EVOQ_RNG_HPP
#define EVOQ_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace evoq {

// Deterministic random stream. Every stochastic operation in the toolkit
// draws from one of these, so a run is fully pinned by its seed. Sampling
// helpers are implemented directly on the raw mt19937_64 output rather than
// through std distributions, whose results vary across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform double in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be positive; the multiply-high map
  // keeps the bias below n / 2^64.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  // +magnitude or -magnitude with equal probability.
  double pick_sign(double magnitude) {
    return (next() & 1u) ? magnitude : -magnitude;
  }

  // Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - unit();  // (0, 1]
    double u2 = unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // k distinct indices sampled uniformly from [0, n), via partial
  // Fisher-Yates. Order of the result is the sampling order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + index(n - i);
      std::swap(all[i], all[j]);
    }
    all.resize(k);
    return all;
  }

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace evoq

#endif  // EVOQ_RNG_HPP
