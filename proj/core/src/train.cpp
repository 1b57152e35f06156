#include "evoq/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <vector>

#include "evoq/oracle.hpp"
#include "evoq/rng.hpp"

namespace evoq {

namespace {

int conv_padding(int kernel) { return (kernel - 1) / 2; }

using Vec = std::vector<double>;
using Batch = std::vector<Vec>;  // one activation vector per sample

// Double-precision parameter state for one layer, mirroring the tensor
// order of LayerWeights. Batchnorm running statistics live outside the
// SGD-updated set.
struct ParamSet {
  std::vector<Vec> tensors;
  std::vector<Vec> grads;
  std::vector<Vec> velocity;
  Vec running_mean, running_var;  // batchnorm only
};

struct LayerCache {
  Batch input;                     // activations entering the layer
  Vec mean, inv_std;               // batchnorm batch statistics
  Batch xhat;                      // batchnorm normalized activations
  std::vector<std::vector<int>> argmax;  // maxpool winners
  Batch mask;                      // dropout keep-scale per element
};

class Trainer {
 public:
  Trainer(const ModelSpec& spec, const TrainConfig& cfg)
      : spec_(spec), cfg_(cfg), shapes_(spec.layer_shapes()), rng_(cfg.seed) {
    init_params();
  }

  void run(const Dataset& train) {
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      rng_.shuffle(order);
      double epoch_loss = 0.0;
      std::size_t seen = 0;
      for (std::size_t start = 0; start < order.size();
           start += cfg_.batch_size) {
        std::size_t stop =
            std::min(order.size(), start + static_cast<std::size_t>(
                                               cfg_.batch_size));
        Batch inputs;
        std::vector<int> labels;
        inputs.reserve(stop - start);
        for (std::size_t i = start; i < stop; ++i) {
          inputs.push_back(train.images[order[i]].data);
          labels.push_back(train.labels[order[i]]);
        }
        double loss = step(inputs, labels);
        if (!std::isfinite(loss)) {
          throw TrainingDivergedError(
              "training diverged: non-finite loss at epoch " +
              std::to_string(epoch));
        }
        epoch_loss += loss * static_cast<double>(inputs.size());
        seen += inputs.size();
      }
      if (cfg_.verbose) {
        std::fprintf(stderr, "epoch %d: loss %.4f\n", epoch,
                     epoch_loss / static_cast<double>(seen));
      }
    }
  }

  Weights quantized() const {
    Weights w = zero_weights(spec_);
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
      const ParamSet& p = params_[i];
      auto& out = w.layers[i].tensors;
      if (spec_.layers[i].kind == LayerKind::BatchNorm) {
        for (std::size_t k = 0; k < p.tensors[0].size(); ++k) {
          out[0].data[k] = static_cast<float>(p.tensors[0][k]);
          out[1].data[k] = static_cast<float>(p.tensors[1][k]);
          out[2].data[k] = static_cast<float>(p.running_mean[k]);
          out[3].data[k] = static_cast<float>(p.running_var[k]);
        }
      } else {
        for (std::size_t t = 0; t < p.tensors.size(); ++t) {
          for (std::size_t k = 0; k < p.tensors[t].size(); ++k) {
            out[t].data[k] = static_cast<float>(p.tensors[t][k]);
          }
        }
      }
    }
    return w;
  }

 private:
  void init_params() {
    params_.resize(spec_.layers.size());
    Shape3 in = spec_.input;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
      const LayerSpec& l = spec_.layers[i];
      ParamSet& p = params_[i];
      if (l.kind == LayerKind::Conv) {
        std::size_t n = static_cast<std::size_t>(l.out_channels) *
                        in.channels * l.kernel * l.kernel;
        double stddev =
            std::sqrt(2.0 / (static_cast<double>(in.channels) * l.kernel *
                             l.kernel));
        Vec w(n);
        for (auto& v : w) v = rng_.normal() * stddev;
        p.tensors = {std::move(w), Vec(l.out_channels, 0.0)};
      } else if (l.kind == LayerKind::Dense) {
        std::size_t n = static_cast<std::size_t>(l.out_features) * in.count();
        double stddev = std::sqrt(2.0 / in.count());
        Vec w(n);
        for (auto& v : w) v = rng_.normal() * stddev;
        p.tensors = {std::move(w), Vec(l.out_features, 0.0)};
      } else if (l.kind == LayerKind::BatchNorm) {
        p.tensors = {Vec(in.channels, 1.0), Vec(in.channels, 0.0)};
        p.running_mean.assign(in.channels, 0.0);
        p.running_var.assign(in.channels, 1.0);
      }
      for (const auto& t : p.tensors) {
        p.grads.push_back(Vec(t.size(), 0.0));
        p.velocity.push_back(Vec(t.size(), 0.0));
      }
      in = shapes_[i];
    }
  }

  // Runs one minibatch: forward, loss, backward, SGD update.
  // Returns the mean cross-entropy loss.
  double step(const Batch& inputs, const std::vector<int>& labels) {
    const std::size_t b = inputs.size();
    caches_.assign(spec_.layers.size(), LayerCache{});
    Batch act = inputs;

    Shape3 in = spec_.input;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
      forward_layer(i, in, act);
      in = shapes_[i];
    }

    // Softmax cross-entropy; dlogits = (softmax - onehot) / batch.
    double loss = 0.0;
    Batch dact(b);
    for (std::size_t s = 0; s < b; ++s) {
      const Vec& logits = act[s];
      double mx = *std::max_element(logits.begin(), logits.end());
      double denom = 0.0;
      for (double v : logits) denom += std::exp(v - mx);
      double logp = logits[labels[s]] - mx - std::log(denom);
      loss -= logp;
      Vec d(logits.size());
      for (std::size_t c = 0; c < logits.size(); ++c) {
        d[c] = (std::exp(logits[c] - mx) / denom -
                (static_cast<int>(c) == labels[s] ? 1.0 : 0.0)) /
               static_cast<double>(b);
      }
      dact[s] = std::move(d);
    }
    loss /= static_cast<double>(b);

    for (auto& p : params_) {
      for (auto& g : p.grads) std::fill(g.begin(), g.end(), 0.0);
    }
    for (std::size_t i = spec_.layers.size(); i-- > 0;) {
      Shape3 lin = (i == 0) ? spec_.input : shapes_[i - 1];
      backward_layer(i, lin, dact);
    }

    for (auto& p : params_) {
      for (std::size_t t = 0; t < p.tensors.size(); ++t) {
        for (std::size_t k = 0; k < p.tensors[t].size(); ++k) {
          double g = p.grads[t][k] + cfg_.weight_decay * p.tensors[t][k];
          p.velocity[t][k] = cfg_.momentum * p.velocity[t][k] -
                             cfg_.learning_rate * g;
          p.tensors[t][k] += p.velocity[t][k];
        }
      }
    }
    return loss;
  }

  void forward_layer(std::size_t i, Shape3 in, Batch& act) {
    const LayerSpec& l = spec_.layers[i];
    LayerCache& cache = caches_[i];
    ParamSet& p = params_[i];
    const std::size_t b = act.size();

    switch (l.kind) {
      case LayerKind::Conv: {
        cache.input = act;
        const int pd = conv_padding(l.kernel);
        const Shape3 out = shapes_[i];
        const Vec& w = p.tensors[0];
        const Vec& bias = p.tensors[1];
        for (std::size_t s = 0; s < b; ++s) {
          Vec o(static_cast<std::size_t>(out.count()), 0.0);
          for (int oc = 0; oc < out.channels; ++oc) {
            for (int oy = 0; oy < out.height; ++oy) {
              for (int ox = 0; ox < out.width; ++ox) {
                double acc = bias[oc];
                for (int ic = 0; ic < in.channels; ++ic) {
                  for (int ky = 0; ky < l.kernel; ++ky) {
                    int iy = oy * l.stride - pd + ky;
                    if (iy < 0 || iy >= in.height) continue;
                    for (int kx = 0; kx < l.kernel; ++kx) {
                      int ix = ox * l.stride - pd + kx;
                      if (ix < 0 || ix >= in.width) continue;
                      acc += w[((static_cast<std::size_t>(oc) * in.channels +
                                 ic) *
                                    l.kernel +
                                ky) *
                                   l.kernel +
                               kx] *
                             act[s][(static_cast<std::size_t>(ic) * in.height +
                                     iy) *
                                        in.width +
                                    ix];
                    }
                  }
                }
                o[(static_cast<std::size_t>(oc) * out.height + oy) *
                      out.width +
                  ox] = acc;
              }
            }
          }
          act[s] = std::move(o);
        }
        break;
      }
      case LayerKind::BatchNorm: {
        cache.input = act;
        const std::size_t plane =
            static_cast<std::size_t>(in.height) * in.width;
        const std::size_t m = b * plane;
        cache.mean.assign(in.channels, 0.0);
        cache.inv_std.assign(in.channels, 0.0);
        Vec var(in.channels, 0.0);
        for (int c = 0; c < in.channels; ++c) {
          double sum = 0.0;
          for (std::size_t s = 0; s < b; ++s) {
            for (std::size_t k = 0; k < plane; ++k) {
              sum += act[s][c * plane + k];
            }
          }
          double mean = sum / static_cast<double>(m);
          double sq = 0.0;
          for (std::size_t s = 0; s < b; ++s) {
            for (std::size_t k = 0; k < plane; ++k) {
              double d = act[s][c * plane + k] - mean;
              sq += d * d;
            }
          }
          var[c] = sq / static_cast<double>(m);
          cache.mean[c] = mean;
          cache.inv_std[c] = 1.0 / std::sqrt(var[c] + kBatchNormEpsilon);
          p.running_mean[c] = 0.9 * p.running_mean[c] + 0.1 * mean;
          p.running_var[c] = 0.9 * p.running_var[c] + 0.1 * var[c];
        }
        cache.xhat.assign(b, Vec());
        for (std::size_t s = 0; s < b; ++s) {
          cache.xhat[s].resize(act[s].size());
          for (int c = 0; c < in.channels; ++c) {
            for (std::size_t k = 0; k < plane; ++k) {
              double xh =
                  (act[s][c * plane + k] - cache.mean[c]) * cache.inv_std[c];
              cache.xhat[s][c * plane + k] = xh;
              act[s][c * plane + k] = p.tensors[0][c] * xh + p.tensors[1][c];
            }
          }
        }
        break;
      }
      case LayerKind::Relu: {
        cache.input = act;
        for (auto& v : act) {
          for (auto& e : v) e = std::max(0.0, e);
        }
        break;
      }
      case LayerKind::MaxPool: {
        const Shape3 out = shapes_[i];
        cache.argmax.assign(b, {});
        for (std::size_t s = 0; s < b; ++s) {
          Vec o(static_cast<std::size_t>(out.count()));
          std::vector<int> arg(o.size());
          for (int c = 0; c < in.channels; ++c) {
            for (int oy = 0; oy < out.height; ++oy) {
              for (int ox = 0; ox < out.width; ++ox) {
                double best = -std::numeric_limits<double>::infinity();
                int best_idx = -1;
                for (int ky = 0; ky < l.kernel; ++ky) {
                  for (int kx = 0; kx < l.kernel; ++kx) {
                    int idx = (c * in.height + oy * l.stride + ky) * in.width +
                              ox * l.stride + kx;
                    if (act[s][idx] > best) {
                      best = act[s][idx];
                      best_idx = idx;
                    }
                  }
                }
                std::size_t oidx =
                    (static_cast<std::size_t>(c) * out.height + oy) *
                        out.width +
                    ox;
                o[oidx] = best;
                arg[oidx] = best_idx;
              }
            }
          }
          act[s] = std::move(o);
          cache.argmax[s] = std::move(arg);
        }
        break;
      }
      case LayerKind::Dropout: {
        cache.mask.assign(b, Vec());
        if (l.rate <= 0.0) {
          for (std::size_t s = 0; s < b; ++s) {
            cache.mask[s].assign(act[s].size(), 1.0);
          }
          break;
        }
        const double keep_scale = 1.0 / (1.0 - l.rate);
        for (std::size_t s = 0; s < b; ++s) {
          cache.mask[s].resize(act[s].size());
          for (std::size_t k = 0; k < act[s].size(); ++k) {
            double m = (rng_.unit() >= l.rate) ? keep_scale : 0.0;
            cache.mask[s][k] = m;
            act[s][k] *= m;
          }
        }
        break;
      }
      case LayerKind::Dense: {
        cache.input = act;
        const Vec& w = p.tensors[0];
        const Vec& bias = p.tensors[1];
        const std::size_t nin = act.empty() ? 0 : act[0].size();
        for (std::size_t s = 0; s < b; ++s) {
          Vec o(static_cast<std::size_t>(l.out_features));
          for (int oo = 0; oo < l.out_features; ++oo) {
            double acc = bias[oo];
            const double* row = w.data() + static_cast<std::size_t>(oo) * nin;
            for (std::size_t k = 0; k < nin; ++k) acc += row[k] * act[s][k];
            o[oo] = acc;
          }
          act[s] = std::move(o);
        }
        break;
      }
    }
  }

  void backward_layer(std::size_t i, Shape3 in, Batch& dact) {
    const LayerSpec& l = spec_.layers[i];
    LayerCache& cache = caches_[i];
    ParamSet& p = params_[i];
    const std::size_t b = dact.size();

    switch (l.kind) {
      case LayerKind::Conv: {
        const int pd = conv_padding(l.kernel);
        const Shape3 out = shapes_[i];
        const Vec& w = p.tensors[0];
        Vec& gw = p.grads[0];
        Vec& gb = p.grads[1];
        for (std::size_t s = 0; s < b; ++s) {
          Vec dx(static_cast<std::size_t>(in.count()), 0.0);
          for (int oc = 0; oc < out.channels; ++oc) {
            for (int oy = 0; oy < out.height; ++oy) {
              for (int ox = 0; ox < out.width; ++ox) {
                double g =
                    dact[s][(static_cast<std::size_t>(oc) * out.height + oy) *
                                out.width +
                            ox];
                if (g == 0.0) continue;
                gb[oc] += g;
                for (int ic = 0; ic < in.channels; ++ic) {
                  for (int ky = 0; ky < l.kernel; ++ky) {
                    int iy = oy * l.stride - pd + ky;
                    if (iy < 0 || iy >= in.height) continue;
                    for (int kx = 0; kx < l.kernel; ++kx) {
                      int ix = ox * l.stride - pd + kx;
                      if (ix < 0 || ix >= in.width) continue;
                      std::size_t widx =
                          ((static_cast<std::size_t>(oc) * in.channels + ic) *
                               l.kernel +
                           ky) *
                              l.kernel +
                          kx;
                      std::size_t xidx =
                          (static_cast<std::size_t>(ic) * in.height + iy) *
                              in.width +
                          ix;
                      gw[widx] += g * cache.input[s][xidx];
                      dx[xidx] += g * w[widx];
                    }
                  }
                }
              }
            }
          }
          dact[s] = std::move(dx);
        }
        break;
      }
      case LayerKind::BatchNorm: {
        const std::size_t plane =
            static_cast<std::size_t>(in.height) * in.width;
        const double m = static_cast<double>(b * plane);
        Vec& ggamma = p.grads[0];
        Vec& gbeta = p.grads[1];
        Vec sum_dy(in.channels, 0.0), sum_dy_xhat(in.channels, 0.0);
        for (std::size_t s = 0; s < b; ++s) {
          for (int c = 0; c < in.channels; ++c) {
            for (std::size_t k = 0; k < plane; ++k) {
              double dy = dact[s][c * plane + k];
              sum_dy[c] += dy;
              sum_dy_xhat[c] += dy * cache.xhat[s][c * plane + k];
            }
          }
        }
        for (int c = 0; c < in.channels; ++c) {
          ggamma[c] += sum_dy_xhat[c];
          gbeta[c] += sum_dy[c];
        }
        for (std::size_t s = 0; s < b; ++s) {
          for (int c = 0; c < in.channels; ++c) {
            double scale = p.tensors[0][c] * cache.inv_std[c];
            for (std::size_t k = 0; k < plane; ++k) {
              double dy = dact[s][c * plane + k];
              double xh = cache.xhat[s][c * plane + k];
              dact[s][c * plane + k] =
                  scale * (dy - sum_dy[c] / m - xh * sum_dy_xhat[c] / m);
            }
          }
        }
        break;
      }
      case LayerKind::Relu: {
        for (std::size_t s = 0; s < b; ++s) {
          for (std::size_t k = 0; k < dact[s].size(); ++k) {
            if (cache.input[s][k] <= 0.0) dact[s][k] = 0.0;
          }
        }
        break;
      }
      case LayerKind::MaxPool: {
        for (std::size_t s = 0; s < b; ++s) {
          Vec dx(static_cast<std::size_t>(in.count()), 0.0);
          for (std::size_t k = 0; k < dact[s].size(); ++k) {
            dx[cache.argmax[s][k]] += dact[s][k];
          }
          dact[s] = std::move(dx);
        }
        break;
      }
      case LayerKind::Dropout: {
        for (std::size_t s = 0; s < b; ++s) {
          for (std::size_t k = 0; k < dact[s].size(); ++k) {
            dact[s][k] *= cache.mask[s][k];
          }
        }
        break;
      }
      case LayerKind::Dense: {
        const Vec& w = p.tensors[0];
        Vec& gw = p.grads[0];
        Vec& gb = p.grads[1];
        const std::size_t nin = static_cast<std::size_t>(in.count());
        for (std::size_t s = 0; s < b; ++s) {
          Vec dx(nin, 0.0);
          for (int oo = 0; oo < l.out_features; ++oo) {
            double g = dact[s][oo];
            gb[oo] += g;
            const double* row = w.data() + static_cast<std::size_t>(oo) * nin;
            double* grow = gw.data() + static_cast<std::size_t>(oo) * nin;
            for (std::size_t k = 0; k < nin; ++k) {
              grow[k] += g * cache.input[s][k];
              dx[k] += g * row[k];
            }
          }
          dact[s] = std::move(dx);
        }
        break;
      }
    }
  }

  const ModelSpec& spec_;
  TrainConfig cfg_;
  std::vector<Shape3> shapes_;
  Rng rng_;
  std::vector<ParamSet> params_;
  std::vector<LayerCache> caches_;
};

}  // namespace

Weights train_fixture(const ModelSpec& spec, const Dataset& train,
                      const TrainConfig& cfg) {
  spec.validate();
  if (train.size() == 0) {
    throw std::invalid_argument("train_fixture: empty dataset");
  }
  if (train.images.size() != train.labels.size()) {
    throw std::invalid_argument("train_fixture: image/label count mismatch");
  }
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train.labels[i] < 0 || train.labels[i] >= spec.num_classes) {
      throw std::invalid_argument("train_fixture: label out of range");
    }
  }
  Trainer t(spec, cfg);
  t.run(train);
  return t.quantized();
}

double evaluate_accuracy(const Model& model, const Dataset& data) {
  if (data.size() == 0) {
    throw std::invalid_argument("evaluate_accuracy: empty dataset");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    LogitVector logits = forward(model.spec, model.weights, data.images[i]);
    if (predict_label(logits) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace evoq
