#ifndef EVOQ_DEFENSES_HPP
#define EVOQ_DEFENSES_HPP

#include <string>
#include <string_view>

#include "evoq/oracle.hpp"

namespace evoq {

// Deterministic input transformation applied in front of an oracle.
// Selected from config strings: "jpeg:70", "bitdepth:3", "smooth:5".
struct DefenseSpec {
  enum class Kind { Jpeg, BitDepth, Smooth };
  Kind kind{};
  int param = 0;  // jpeg quality, bit depth, or window size

  static DefenseSpec parse(std::string_view text);
  std::string to_string() const;
  void validate() const;
};

// Maps each element to round(v * (2^d - 1)) / (2^d - 1). d in [1, 8].
Image bit_depth_reduce(const Image& x, int d);

// Per-channel w x w median filter with reflect padding. w odd, >= 1.
Image spatial_smooth(const Image& x, int w);

// Mean-filter variant behind the same interface.
Image spatial_smooth_mean(const Image& x, int w);

// Per-channel blockwise 8x8 DCT quantization with the standard luminance
// table scaled by the usual quality factor (no subsampling or entropy
// coding, which do not affect pixel values). q in [1, 100].
Image jpeg_like_compress(const Image& x, int q);

Image apply_defense(const Image& x, const DefenseSpec& spec);

// Applies the transform to every query before forwarding to the base
// oracle. Exactly one query is charged per call (by the base); the
// transform itself is free, so both counters advance in lockstep.
class DefendedOracle final : public QueryOracle {
 public:
  DefendedOracle(QueryOracle& base, DefenseSpec spec);

  LogitVector predict_logits(const Image& x) override {
    return base_.predict_logits(apply_defense(x, spec_));
  }
  std::uint64_t query_count() const override { return base_.query_count(); }
  int num_classes() const override { return base_.num_classes(); }
  Shape3 input_shape() const override { return base_.input_shape(); }

 private:
  QueryOracle& base_;
  DefenseSpec spec_;
};

}  // namespace evoq

#endif  // EVOQ_DEFENSES_HPP
