#include "evoq/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace evoq {

LayerSpec LayerSpec::conv(int out_channels, int kernel, int stride) {
  LayerSpec s;
  s.kind = LayerKind::Conv;
  s.out_channels = out_channels;
  s.kernel = kernel;
  s.stride = stride;
  return s;
}
LayerSpec LayerSpec::batchnorm() {
  LayerSpec s;
  s.kind = LayerKind::BatchNorm;
  return s;
}
LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = LayerKind::Relu;
  return s;
}
LayerSpec LayerSpec::maxpool(int kernel, int stride) {
  LayerSpec s;
  s.kind = LayerKind::MaxPool;
  s.kernel = kernel;
  s.stride = stride;
  return s;
}
LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec s;
  s.kind = LayerKind::Dropout;
  s.rate = rate;
  return s;
}
LayerSpec LayerSpec::dense(int out_features) {
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.out_features = out_features;
  return s;
}

std::size_t Tensor::count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

namespace {

[[noreturn]] void spec_error(const std::string& msg) {
  throw std::invalid_argument("ModelSpec: " + msg);
}

int conv_padding(int kernel) { return (kernel - 1) / 2; }

}  // namespace

std::vector<Shape3> ModelSpec::layer_shapes() const {
  if (input.channels <= 0 || input.height <= 0 || input.width <= 0) {
    spec_error("input shape must be positive");
  }
  if (num_classes < 2) spec_error("num_classes must be at least 2");
  if (layers.empty()) spec_error("no layers");

  std::vector<Shape3> shapes;
  shapes.reserve(layers.size());
  Shape3 cur = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    switch (l.kind) {
      case LayerKind::Conv: {
        if (l.out_channels <= 0 || l.kernel <= 0 || l.stride <= 0) {
          spec_error("bad conv parameters at layer " + std::to_string(i));
        }
        int p = conv_padding(l.kernel);
        int oh = (cur.height + 2 * p - l.kernel) / l.stride + 1;
        int ow = (cur.width + 2 * p - l.kernel) / l.stride + 1;
        if (oh <= 0 || ow <= 0) {
          spec_error("conv output collapses at layer " + std::to_string(i));
        }
        cur = {l.out_channels, oh, ow};
        break;
      }
      case LayerKind::BatchNorm:
      case LayerKind::Relu:
        break;
      case LayerKind::MaxPool: {
        if (l.kernel <= 0 || l.stride <= 0) {
          spec_error("bad maxpool parameters at layer " + std::to_string(i));
        }
        if (cur.height < l.kernel || cur.width < l.kernel) {
          spec_error("maxpool window exceeds input at layer " +
                     std::to_string(i));
        }
        cur.height = (cur.height - l.kernel) / l.stride + 1;
        cur.width = (cur.width - l.kernel) / l.stride + 1;
        break;
      }
      case LayerKind::Dropout:
        if (l.rate < 0.0 || l.rate >= 1.0) {
          spec_error("dropout rate must be in [0,1) at layer " +
                     std::to_string(i));
        }
        break;
      case LayerKind::Dense:
        if (l.out_features <= 0) {
          spec_error("bad dense width at layer " + std::to_string(i));
        }
        cur = {l.out_features, 1, 1};
        break;
      default:
        spec_error("unknown layer kind at layer " + std::to_string(i));
    }
    shapes.push_back(cur);
  }
  const LayerSpec& last = layers.back();
  if (last.kind != LayerKind::Dense || last.out_features != num_classes) {
    spec_error("final layer must be dense with width num_classes");
  }
  return shapes;
}

void ModelSpec::validate() const { (void)layer_shapes(); }

ModelSpec ModelSpec::digit_cnn(Shape3 input, int classes, int c1, int c2,
                               int c3) {
  ModelSpec m;
  m.input = input;
  m.num_classes = classes;
  for (int c : {c1, c2, c3}) {
    m.layers.push_back(LayerSpec::conv(c, 3, 1));
    m.layers.push_back(LayerSpec::batchnorm());
    m.layers.push_back(LayerSpec::relu());
    m.layers.push_back(LayerSpec::maxpool(2, 2));
  }
  m.layers.push_back(LayerSpec::dropout(0.5));
  m.layers.push_back(LayerSpec::dense(128));
  m.layers.push_back(LayerSpec::dense(classes));
  m.validate();
  return m;
}

ModelSpec ModelSpec::digit_dense(Shape3 input, int classes, int hidden) {
  ModelSpec m;
  m.input = input;
  m.num_classes = classes;
  m.layers.push_back(LayerSpec::dense(hidden));
  m.layers.push_back(LayerSpec::relu());
  m.layers.push_back(LayerSpec::dense(classes));
  m.validate();
  return m;
}

namespace {

std::vector<std::vector<std::uint32_t>> expected_tensor_dims(
    const LayerSpec& l, const Shape3& in) {
  auto u = [](int v) { return static_cast<std::uint32_t>(v); };
  switch (l.kind) {
    case LayerKind::Conv:
      return {{u(l.out_channels), u(in.channels), u(l.kernel), u(l.kernel)},
              {u(l.out_channels)}};
    case LayerKind::BatchNorm:
      return {{u(in.channels)}, {u(in.channels)}, {u(in.channels)},
              {u(in.channels)}};
    case LayerKind::Dense:
      return {{u(l.out_features), u(in.count())}, {u(l.out_features)}};
    default:
      return {};
  }
}

}  // namespace

void Model::validate() const {
  auto shapes = spec.layer_shapes();
  if (weights.layers.size() != spec.layers.size()) {
    throw std::invalid_argument("Model: weights have " +
                                std::to_string(weights.layers.size()) +
                                " layer entries, spec has " +
                                std::to_string(spec.layers.size()));
  }
  Shape3 in = spec.input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    auto expect = expected_tensor_dims(spec.layers[i], in);
    const auto& got = weights.layers[i].tensors;
    if (got.size() != expect.size()) {
      throw std::invalid_argument("Model: layer " + std::to_string(i) +
                                  " has wrong tensor count");
    }
    for (std::size_t t = 0; t < got.size(); ++t) {
      if (got[t].dims != expect[t] || got[t].data.size() != got[t].count()) {
        throw std::invalid_argument("Model: layer " + std::to_string(i) +
                                    " tensor " + std::to_string(t) +
                                    " has wrong shape");
      }
    }
    in = shapes[i];
  }
}

namespace {

// One inference buffer, reused across layers.
struct Activation {
  Shape3 shape;
  std::vector<double> data;
};

void run_conv(const LayerSpec& l, const LayerWeights& w, Activation& a) {
  const Shape3 in = a.shape;
  const int p = conv_padding(l.kernel);
  const int oh = (in.height + 2 * p - l.kernel) / l.stride + 1;
  const int ow = (in.width + 2 * p - l.kernel) / l.stride + 1;
  const auto& weight = w.tensors[0].data;
  const auto& bias = w.tensors[1].data;
  std::vector<double> out(static_cast<std::size_t>(l.out_channels) * oh * ow);
  for (int oc = 0; oc < l.out_channels; ++oc) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias[oc];
        for (int ic = 0; ic < in.channels; ++ic) {
          for (int ky = 0; ky < l.kernel; ++ky) {
            int iy = oy * l.stride - p + ky;
            if (iy < 0 || iy >= in.height) continue;
            for (int kx = 0; kx < l.kernel; ++kx) {
              int ix = ox * l.stride - p + kx;
              if (ix < 0 || ix >= in.width) continue;
              acc += static_cast<double>(
                         weight[((static_cast<std::size_t>(oc) * in.channels +
                                  ic) *
                                     l.kernel +
                                 ky) *
                                    l.kernel +
                                kx]) *
                     a.data[(static_cast<std::size_t>(ic) * in.height + iy) *
                                in.width +
                            ix];
            }
          }
        }
        out[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox] = acc;
      }
    }
  }
  a.shape = {l.out_channels, oh, ow};
  a.data = std::move(out);
}

void run_batchnorm(const LayerWeights& w, Activation& a) {
  const auto& gamma = w.tensors[0].data;
  const auto& beta = w.tensors[1].data;
  const auto& mean = w.tensors[2].data;
  const auto& var = w.tensors[3].data;
  const std::size_t plane =
      static_cast<std::size_t>(a.shape.height) * a.shape.width;
  for (int c = 0; c < a.shape.channels; ++c) {
    const double inv = 1.0 / std::sqrt(static_cast<double>(var[c]) +
                                       kBatchNormEpsilon);
    const double g = gamma[c], b = beta[c], m = mean[c];
    for (std::size_t i = 0; i < plane; ++i) {
      double& v = a.data[c * plane + i];
      v = g * ((v - m) * inv) + b;
    }
  }
}

void run_maxpool(const LayerSpec& l, Activation& a) {
  const Shape3 in = a.shape;
  const int oh = (in.height - l.kernel) / l.stride + 1;
  const int ow = (in.width - l.kernel) / l.stride + 1;
  std::vector<double> out(static_cast<std::size_t>(in.channels) * oh * ow);
  for (int c = 0; c < in.channels; ++c) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double m = -std::numeric_limits<double>::infinity();
        for (int ky = 0; ky < l.kernel; ++ky) {
          for (int kx = 0; kx < l.kernel; ++kx) {
            int iy = oy * l.stride + ky;
            int ix = ox * l.stride + kx;
            m = std::max(m, a.data[(static_cast<std::size_t>(c) * in.height +
                                    iy) *
                                       in.width +
                                   ix]);
          }
        }
        out[(static_cast<std::size_t>(c) * oh + oy) * ow + ox] = m;
      }
    }
  }
  a.shape = {in.channels, oh, ow};
  a.data = std::move(out);
}

void run_dense(const LayerSpec& l, const LayerWeights& w, Activation& a) {
  const auto& weight = w.tensors[0].data;
  const auto& bias = w.tensors[1].data;
  const std::size_t in_count = a.data.size();
  std::vector<double> out(static_cast<std::size_t>(l.out_features));
  for (int o = 0; o < l.out_features; ++o) {
    double acc = bias[o];
    const float* row = weight.data() + static_cast<std::size_t>(o) * in_count;
    for (std::size_t i = 0; i < in_count; ++i) {
      acc += static_cast<double>(row[i]) * a.data[i];
    }
    out[o] = acc;
  }
  a.shape = {l.out_features, 1, 1};
  a.data = std::move(out);
}

}  // namespace

LogitVector forward(const ModelSpec& spec, const Weights& weights,
                    const Image& x) {
  if (Shape3{x.channels, x.height, x.width} != spec.input) {
    throw std::invalid_argument("forward: input shape " + x.shape_string() +
                                " does not match model input");
  }
  if (weights.layers.size() != spec.layers.size()) {
    throw std::invalid_argument("forward: weights/spec layer count mismatch");
  }
  Activation a{spec.input, x.data};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::Conv:
        run_conv(l, weights.layers[i], a);
        break;
      case LayerKind::BatchNorm:
        run_batchnorm(weights.layers[i], a);
        break;
      case LayerKind::Relu:
        for (double& v : a.data) v = std::max(0.0, v);
        break;
      case LayerKind::MaxPool:
        run_maxpool(l, a);
        break;
      case LayerKind::Dropout:
        break;  // identity at inference
      case LayerKind::Dense:
        run_dense(l, weights.layers[i], a);
        break;
    }
  }
  return a.data;
}

Weights zero_weights(const ModelSpec& spec) {
  auto shapes = spec.layer_shapes();
  Weights w;
  w.layers.resize(spec.layers.size());
  Shape3 in = spec.input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    for (const auto& dims : expected_tensor_dims(spec.layers[i], in)) {
      Tensor t;
      t.dims = dims;
      t.data.assign(t.count(), 0.0f);
      w.layers[i].tensors.push_back(std::move(t));
    }
    if (spec.layers[i].kind == LayerKind::BatchNorm) {
      auto& ts = w.layers[i].tensors;
      std::fill(ts[0].data.begin(), ts[0].data.end(), 1.0f);  // gamma
      std::fill(ts[3].data.begin(), ts[3].data.end(), 1.0f);  // running_var
    }
    in = shapes[i];
  }
  return w;
}

Weights random_weights(const ModelSpec& spec, Rng& rng) {
  Weights w = zero_weights(spec);
  Shape3 in = spec.input;
  auto shapes = spec.layer_shapes();
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if (l.kind == LayerKind::Conv) {
      double fan_in = static_cast<double>(in.channels) * l.kernel * l.kernel;
      double stddev = std::sqrt(2.0 / fan_in);
      for (auto& v : w.layers[i].tensors[0].data) {
        v = static_cast<float>(rng.normal() * stddev);
      }
    } else if (l.kind == LayerKind::Dense) {
      double stddev = std::sqrt(2.0 / in.count());
      for (auto& v : w.layers[i].tensors[0].data) {
        v = static_cast<float>(rng.normal() * stddev);
      }
    }
    in = shapes[i];
  }
  return w;
}

}  // namespace evoq
