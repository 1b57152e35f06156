#include "evoq/oracle.hpp"

#include <stdexcept>
#include <utility>

namespace evoq {

int predict_label(const LogitVector& logits) {
  if (logits.empty()) {
    throw std::invalid_argument("predict_label: empty logit vector");
  }
  int best = 0;
  for (int i = 1; i < static_cast<int>(logits.size()); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

ModelOracle::ModelOracle(std::shared_ptr<const Model> model)
    : model_(std::move(model)) {
  if (!model_) throw std::invalid_argument("ModelOracle: null model");
  model_->validate();
  if (model_->spec.num_classes < 2) {
    throw std::invalid_argument("ModelOracle: need at least 2 classes");
  }
}

LogitVector ModelOracle::predict_logits(const Image& x) {
  LogitVector out = forward(model_->spec, model_->weights, x);
  count_.fetch_add(1, std::memory_order_relaxed);
  return out;
}

FunctionOracle::FunctionOracle(Shape3 input, int classes,
                               std::function<LogitVector(const Image&)> fn)
    : input_(input), classes_(classes), fn_(std::move(fn)) {
  if (classes_ < 2) {
    throw std::invalid_argument("FunctionOracle: need at least 2 classes");
  }
}

LogitVector FunctionOracle::predict_logits(const Image& x) {
  if (Shape3{x.channels, x.height, x.width} != input_) {
    throw std::invalid_argument("FunctionOracle: input shape mismatch");
  }
  LogitVector out = fn_(x);
  if (static_cast<int>(out.size()) != classes_) {
    throw std::runtime_error("FunctionOracle: function returned wrong width");
  }
  count_.fetch_add(1, std::memory_order_relaxed);
  return out;
}

}  // namespace evoq
