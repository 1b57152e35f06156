#include <cmath>

#include "doctest.h"
#include "evoq/oracle.hpp"
#include "evoq/rng.hpp"
#include "evoq/train.hpp"

using namespace evoq;

namespace {

// Two-class set, separable by construction: class 0 lights the left half,
// class 1 the right half, plus low-amplitude noise.
Dataset separable_toy(int per_class, int side, Rng& rng) {
  Dataset ds;
  for (int i = 0; i < per_class * 2; ++i) {
    int label = i % 2;
    Image img(1, side, side, 0.0);
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        bool lit = label == 0 ? (x < side / 2) : (x >= side / 2);
        img.at(0, y, x) = (lit ? 0.8 : 0.1) + rng.unit() * 0.1;
      }
    }
    ds.images.push_back(std::move(img));
    ds.labels.push_back(label);
  }
  return ds;
}

double train_accuracy(const Model& m, const Dataset& ds) {
  return evaluate_accuracy(m, ds);
}

// Mean cross-entropy of the model on a batch, matching the trainer's loss.
double dataset_loss(const ModelSpec& spec, const Weights& w,
                    const Dataset& ds) {
  double total = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    LogitVector logits = forward(spec, w, ds.images[i]);
    double mx = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double v : logits) denom += std::exp(v - mx);
    total -= logits[ds.labels[i]] - mx - std::log(denom);
  }
  return total / static_cast<double>(ds.size());
}

}  // namespace

TEST_CASE("dense trainer separates a separable toy set") {
  Rng rng(21);
  Dataset ds = separable_toy(16, 4, rng);
  auto spec = ModelSpec::digit_dense({1, 4, 4}, 2, 8);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.1;
  cfg.seed = 1;
  Weights w = train_fixture(spec, ds, cfg);
  CHECK(train_accuracy({spec, w}, ds) == 1.0);
}

TEST_CASE("conv trainer converges on a toy set") {
  Rng rng(22);
  Dataset ds = separable_toy(24, 8, rng);
  ModelSpec spec;
  spec.input = {1, 8, 8};
  spec.num_classes = 2;
  spec.layers = {LayerSpec::conv(4, 3, 1), LayerSpec::batchnorm(),
                 LayerSpec::relu(),        LayerSpec::maxpool(2, 2),
                 LayerSpec::dropout(0.1),  LayerSpec::dense(2)};
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.05;
  cfg.seed = 2;
  Weights w = train_fixture(spec, ds, cfg);
  CHECK(train_accuracy({spec, w}, ds) >= 0.95);
}

TEST_CASE("training is bitwise deterministic for a fixed seed") {
  Rng rng(23);
  Dataset ds = separable_toy(12, 4, rng);
  auto spec = ModelSpec::digit_dense({1, 4, 4}, 2, 6);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 77;
  Weights a = train_fixture(spec, ds, cfg);
  Weights b = train_fixture(spec, ds, cfg);
  REQUIRE(a.layers.size() == b.layers.size());
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    REQUIRE(a.layers[i].tensors.size() == b.layers[i].tensors.size());
    for (std::size_t t = 0; t < a.layers[i].tensors.size(); ++t) {
      CHECK(a.layers[i].tensors[t].data == b.layers[i].tensors[t].data);
    }
  }
}

TEST_CASE("divergence is reported, not swallowed") {
  Rng rng(24);
  Dataset ds = separable_toy(12, 4, rng);
  auto spec = ModelSpec::digit_dense({1, 4, 4}, 2, 6);
  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.learning_rate = 1.0;
  cfg.weight_decay = 1e8;  // |1 - lr*wd| >> 1: unbounded parameter growth
  cfg.seed = 3;
  CHECK_THROWS_AS(train_fixture(spec, ds, cfg), TrainingDivergedError);
}

TEST_CASE("trainer rejects bad datasets") {
  auto spec = ModelSpec::digit_dense({1, 4, 4}, 2, 6);
  Dataset empty;
  CHECK_THROWS_AS(train_fixture(spec, empty, {}), std::invalid_argument);

  Rng rng(25);
  Dataset bad = separable_toy(4, 4, rng);
  bad.labels[0] = 7;  // out of range for 2 classes
  CHECK_THROWS_AS(train_fixture(spec, bad, {}), std::invalid_argument);
}

TEST_CASE("one SGD step matches finite-difference gradients") {
  // No batchnorm or dropout here: inference forward must equal the
  // trainer's forward for the loss probe to be meaningful.
  Rng rng(26);
  Dataset ds = separable_toy(4, 6, rng);
  ModelSpec spec;
  spec.input = {1, 6, 6};
  spec.num_classes = 2;
  spec.layers = {LayerSpec::conv(2, 3, 1), LayerSpec::relu(),
                 LayerSpec::maxpool(2, 2), LayerSpec::dense(2)};

  TrainConfig init_only;
  init_only.epochs = 0;
  init_only.seed = 5;
  Weights w0 = train_fixture(spec, ds, init_only);

  const double lr = 1e-2;
  TrainConfig one_step = init_only;
  one_step.epochs = 1;
  one_step.batch_size = static_cast<int>(ds.size());
  one_step.learning_rate = lr;
  one_step.momentum = 0.0;
  one_step.weight_decay = 0.0;
  Weights w1 = train_fixture(spec, ds, one_step);

  // Sample parameters across every trainable tensor and compare the
  // implied analytic gradient with a central difference.
  Rng pick(27);
  for (std::size_t li = 0; li < w0.layers.size(); ++li) {
    for (std::size_t t = 0; t < w0.layers[li].tensors.size(); ++t) {
      auto& tensor = w0.layers[li].tensors[t];
      if (tensor.data.empty()) continue;
      for (int probe = 0; probe < 3; ++probe) {
        std::size_t k = pick.index(tensor.data.size());
        double analytic =
            (static_cast<double>(tensor.data[k]) -
             static_cast<double>(w1.layers[li].tensors[t].data[k])) /
            lr;
        const double delta = 1e-3;
        Weights plus = w0, minus = w0;
        plus.layers[li].tensors[t].data[k] += static_cast<float>(delta);
        minus.layers[li].tensors[t].data[k] -= static_cast<float>(delta);
        double numeric = (dataset_loss(spec, plus, ds) -
                          dataset_loss(spec, minus, ds)) /
                         (2 * delta);
        CHECK(analytic ==
              doctest::Approx(numeric).epsilon(0.08).scale(0.01));
      }
    }
  }
}
