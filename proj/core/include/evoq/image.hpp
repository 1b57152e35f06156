#ifndef EVOQ_IMAGE_HPP
#define EVOQ_IMAGE_HPP

#include <string>
#include <vector>

namespace evoq {

// Dense real-valued image with values in [0,1], stored channel-major:
// data[(c * height + y) * width + x]. All of channel 0's rows come first,
// then channel 1, and so on. This flat layout is the canonical serialization
// used by crossover and by file I/O.
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Image() = default;
  Image(int channels, int height, int width, double fill = 0.0);

  int size() const { return channels * height * width; }

  double& at(int c, int y, int x) {
    return data[static_cast<std::size_t>((c * height + y) * width + x)];
  }
  double at(int c, int y, int x) const {
    return data[static_cast<std::size_t>((c * height + y) * width + x)];
  }

  bool same_shape(const Image& other) const {
    return channels == other.channels && height == other.height &&
           width == other.width;
  }

  std::string shape_string() const;
};

// Maximum L-infinity perturbation radius, in normalized pixel units
// (an 8-bit radius of k corresponds to k/255). Zero is legal; it collapses
// the feasible set to the original image.
class Epsilon {
 public:
  explicit Epsilon(double value);
  double value() const { return value_; }

 private:
  double value_;
};

// max_i |a_i - b_i|. Throws std::invalid_argument on shape mismatch.
double linf_dist(const Image& a, const Image& b);

// Euclidean norm of a - b. Throws std::invalid_argument on shape mismatch.
double l2_dist(const Image& a, const Image& b);

// Clamps cand into [origin - eps, origin + eps] elementwise, then into
// [0,1]. Idempotent; the identity on already-feasible inputs.
Image project_feasible(const Image& cand, const Image& origin, Epsilon eps);

namespace detail {
void require_same_shape(const Image& a, const Image& b, const char* op);
}

}  // namespace evoq

#endif  // EVOQ_IMAGE_HPP
