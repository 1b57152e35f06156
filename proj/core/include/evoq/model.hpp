#ifndef EVOQ_MODEL_HPP
#define EVOQ_MODEL_HPP

#include <cstdint>
#include <vector>

#include "evoq/image.hpp"
#include "evoq/rng.hpp"

namespace evoq {

// Raw pre-softmax class scores.
using LogitVector = std::vector<double>;

enum class LayerKind : std::uint8_t {
  Conv = 1,
  BatchNorm = 2,
  Relu = 3,
  MaxPool = 4,
  Dropout = 5,
  Dense = 6,
};

struct LayerSpec {
  LayerKind kind{};
  int out_channels = 0;  // conv
  int kernel = 0;        // conv, maxpool
  int stride = 0;        // conv, maxpool
  double rate = 0.0;     // dropout (inference no-op)
  int out_features = 0;  // dense

  static LayerSpec conv(int out_channels, int kernel, int stride = 1);
  static LayerSpec batchnorm();
  static LayerSpec relu();
  static LayerSpec maxpool(int kernel, int stride);
  static LayerSpec dropout(double rate);
  static LayerSpec dense(int out_features);
};

struct Shape3 {
  int channels = 0;
  int height = 0;
  int width = 0;
  int count() const { return channels * height * width; }
  bool operator==(const Shape3&) const = default;
};

// Inference-time architecture description. Convolutions use zero padding of
// (kernel-1)/2, so odd kernels at stride 1 preserve spatial size; max pooling
// uses valid windows with floor division. Dense layers consume the
// channel-major flattening of their input.
struct ModelSpec {
  Shape3 input{};
  int num_classes = 0;
  std::vector<LayerSpec> layers;

  // Shape after each layer. Throws std::invalid_argument if consecutive
  // layers do not compose or the final layer is not a dense layer of width
  // num_classes.
  std::vector<Shape3> layer_shapes() const;
  void validate() const;

  // Three conv blocks (conv+batchnorm+relu) at the given widths, each
  // followed by 2x2/2 max pooling, then dropout and two dense layers
  // (hidden width 128, then the class scores).
  static ModelSpec digit_cnn(Shape3 input = {1, 28, 28}, int classes = 10,
                             int c1 = 32, int c2 = 64, int c3 = 128);

  // Single-hidden-layer dense net: dense(hidden), relu, dense(classes).
  static ModelSpec digit_dense(Shape3 input = {1, 28, 28}, int classes = 10,
                               int hidden = 256);
};

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
  std::size_t count() const;
};

// Parameter tensors for one layer, in a fixed order:
//   conv      -> { weight[out,in,k,k], bias[out] }
//   batchnorm -> { gamma[C], beta[C], running_mean[C], running_var[C] }
//   dense     -> { weight[out,in], bias[out] }
//   others    -> {}
struct LayerWeights {
  std::vector<Tensor> tensors;
};

struct Weights {
  std::vector<LayerWeights> layers;  // one entry per ModelSpec layer
};

struct Model {
  ModelSpec spec;
  Weights weights;
  // Throws std::invalid_argument if weights do not match the spec.
  void validate() const;
};

inline constexpr double kBatchNormEpsilon = 1e-5;

// Deterministic inference. Batchnorm uses the stored running statistics;
// dropout is the identity. Accumulation is double precision.
LogitVector forward(const ModelSpec& spec, const Weights& weights,
                    const Image& x);

// Correctly-shaped all-zero parameters (batchnorm gamma=1, var=1).
Weights zero_weights(const ModelSpec& spec);

// He-normal initialization for conv/dense, identity batchnorm.
Weights random_weights(const ModelSpec& spec, Rng& rng);

}  // namespace evoq

#endif  // EVOQ_MODEL_HPP
