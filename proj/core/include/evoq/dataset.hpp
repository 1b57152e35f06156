#ifndef EVOQ_DATASET_HPP
#define EVOQ_DATASET_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "evoq/image.hpp"

namespace evoq {

struct Dataset {
  std::vector<Image> images;
  std::vector<int> labels;
  std::size_t size() const { return images.size(); }
};

enum class DatasetIoErrorKind {
  BadMagic,
  CountMismatch,
  Truncated,
  BadLabel,
  Io,
};

class DatasetIoError : public std::runtime_error {
 public:
  DatasetIoError(DatasetIoErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  DatasetIoErrorKind kind() const { return kind_; }

 private:
  DatasetIoErrorKind kind_;
};

// IDX-format digit data (big-endian; images magic 0x00000803, labels magic
// 0x00000801). Bytes scale to [0,1] as v/255. Gzip-compressed files are
// detected by their 1f 8b prefix and inflated transparently.
Dataset load_mnist_idx(const std::string& images_path,
                       const std::string& labels_path);

// Raw binary records of (label byte + channels*32*32 pixel bytes), the
// common container for 3x32x32 color splits. Labels must be < 10.
Dataset load_cifar_raw(const std::string& path);

}  // namespace evoq

#endif  // EVOQ_DATASET_HPP
