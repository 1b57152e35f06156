#include "evoq/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evoq {

namespace {
std::size_t checked_size(int channels, int height, int width) {
  if (channels <= 0 || height <= 0 || width <= 0) {
    throw std::invalid_argument("Image: dimensions must be positive");
  }
  return static_cast<std::size_t>(channels) * height * width;
}
}  // namespace

Image::Image(int channels, int height, int width, double fill)
    : channels(channels),
      height(height),
      width(width),
      data(checked_size(channels, height, width), fill) {}

std::string Image::shape_string() const {
  return std::to_string(channels) + "x" + std::to_string(height) + "x" +
         std::to_string(width);
}

Epsilon::Epsilon(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw std::invalid_argument("Epsilon: value must be in [0,1]");
  }
}

namespace detail {
void require_same_shape(const Image& a, const Image& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                a.shape_string() + " vs " + b.shape_string());
  }
}
}  // namespace detail

double linf_dist(const Image& a, const Image& b) {
  detail::require_same_shape(a, b, "linf_dist");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  }
  return m;
}

double l2_dist(const Image& a, const Image& b) {
  detail::require_same_shape(a, b, "l2_dist");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Image project_feasible(const Image& cand, const Image& origin, Epsilon eps) {
  detail::require_same_shape(cand, origin, "project_feasible");
  Image out = cand;
  const double e = eps.value();
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    double lo = origin.data[i] - e;
    double hi = origin.data[i] + e;
    double v = std::clamp(out.data[i], lo, hi);
    out.data[i] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

}  // namespace evoq
