#ifndef EVOQ_NETPBM_HPP
#define EVOQ_NETPBM_HPP

#include <string>

#include "evoq/image.hpp"

namespace evoq {

// Binary netpbm, 8-bit, maxval 255; pixel byte = round(v * 255).
// One-channel images are written as PGM (P5), three-channel as PPM (P6,
// interleaved). Other channel counts are rejected.
void write_pnm(const std::string& path, const Image& img);

// Reads P5/P6 with maxval 255; values scale back as byte / 255.
Image read_pnm(const std::string& path);

}  // namespace evoq

#endif  // EVOQ_NETPBM_HPP
