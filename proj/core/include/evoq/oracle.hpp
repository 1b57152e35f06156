#ifndef EVOQ_ORACLE_HPP
#define EVOQ_ORACLE_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>

#include "evoq/model.hpp"

namespace evoq {

// Index of the maximum logit; ties break to the lowest index.
// Throws std::invalid_argument on an empty vector.
int predict_label(const LogitVector& logits);

// Black-box classifier interface. Each successful predict_logits call
// charges exactly one query; the counter is atomic, so concurrent callers
// observe a total equal to the number of completed calls. Calls that throw
// (e.g. shape mismatch) are not charged.
class QueryOracle {
 public:
  virtual ~QueryOracle() = default;
  virtual LogitVector predict_logits(const Image& x) = 0;
  virtual std::uint64_t query_count() const = 0;
  virtual int num_classes() const = 0;
  virtual Shape3 input_shape() const = 0;
};

// Oracle backed by an in-process model. The model is shared and read-only,
// so any number of oracles (one per attacked image) can wrap it at once.
class ModelOracle final : public QueryOracle {
 public:
  explicit ModelOracle(std::shared_ptr<const Model> model);

  LogitVector predict_logits(const Image& x) override;
  std::uint64_t query_count() const override { return count_.load(); }
  int num_classes() const override { return model_->spec.num_classes; }
  Shape3 input_shape() const override { return model_->spec.input; }

 private:
  std::shared_ptr<const Model> model_;
  std::atomic<std::uint64_t> count_{0};
};

// Oracle defined by an arbitrary logit function. Used for toy victims and
// tests; the function must be pure for attack results to be reproducible.
class FunctionOracle final : public QueryOracle {
 public:
  FunctionOracle(Shape3 input, int classes,
                 std::function<LogitVector(const Image&)> fn);

  LogitVector predict_logits(const Image& x) override;
  std::uint64_t query_count() const override { return count_.load(); }
  int num_classes() const override { return classes_; }
  Shape3 input_shape() const override { return input_; }

 private:
  Shape3 input_;
  int classes_;
  std::function<LogitVector(const Image&)> fn_;
  std::atomic<std::uint64_t> count_{0};
};

}  // namespace evoq

#endif  // EVOQ_ORACLE_HPP
