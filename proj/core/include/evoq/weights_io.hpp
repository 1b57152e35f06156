#ifndef EVOQ_WEIGHTS_IO_HPP
#define EVOQ_WEIGHTS_IO_HPP

#include <stdexcept>
#include <string>

#include "evoq/model.hpp"

namespace evoq {

// Model container, binary, little-endian:
//
//   magic   "EVOQ" (4 bytes)
//   version u32 (currently 1)
//   count   u32                      number of records
//   record: tag u8, rank u8, dims u32[rank], payload float32[...]
//
// Record 0 is always tag 0 (input): dims {channels, height, width, classes},
// empty payload. Subsequent records map 1:1 onto the model's layers:
//
//   tag 1 conv      dims {out, in, kernel, stride}
//                   payload  weight[out*in*k*k] then bias[out]
//   tag 2 batchnorm dims {C}
//                   payload  gamma, beta, running_mean, running_var (C each)
//   tag 3 relu      rank 0, no payload
//   tag 4 maxpool   dims {kernel, stride}, no payload
//   tag 5 dropout   rank 0, payload {rate}
//   tag 6 dense     dims {out, in}
//                   payload  weight[out*in] then bias[out]
//
// The payload length is fully determined by (tag, dims).

enum class WeightsIoErrorKind {
  BadMagic,
  BadVersion,
  Truncated,
  Shape,
  Io,
};

class WeightsIoError : public std::runtime_error {
 public:
  WeightsIoError(WeightsIoErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  WeightsIoErrorKind kind() const { return kind_; }

 private:
  WeightsIoErrorKind kind_;
};

void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

}  // namespace evoq

#endif  // EVOQ_WEIGHTS_IO_HPP
