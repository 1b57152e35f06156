#ifndef EVOQ_TRAIN_HPP
#define EVOQ_TRAIN_HPP

#include <stdexcept>

#include "evoq/dataset.hpp"
#include "evoq/model.hpp"

namespace evoq {

// Desk-scale fixture trainer: minibatch SGD with momentum and L2 weight
// decay on a softmax cross-entropy loss. Deterministic given the seed.
struct TrainConfig {
  int epochs = 10;
  int batch_size = 64;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-6;
  std::uint64_t seed = 1;
  bool verbose = false;
};

class TrainingDivergedError : public std::runtime_error {
 public:
  explicit TrainingDivergedError(const std::string& what)
      : std::runtime_error(what) {}
};

// Trains from scratch and returns float32-quantized weights. Dropout layers
// apply inverted dropout while training (identity at inference); batchnorm
// layers use batch statistics while training and store running statistics
// for inference. Throws TrainingDivergedError if the loss turns non-finite.
Weights train_fixture(const ModelSpec& spec, const Dataset& train,
                      const TrainConfig& cfg);

// Fraction of images whose argmax matches the label.
double evaluate_accuracy(const Model& model, const Dataset& data);

}  // namespace evoq

#endif  // EVOQ_TRAIN_HPP
