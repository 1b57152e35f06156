#include "evoq/netpbm.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace evoq {

namespace {

std::uint8_t to_byte(double v) {
  long b = std::lround(v * 255.0);
  return static_cast<std::uint8_t>(b < 0 ? 0 : (b > 255 ? 255 : b));
}

// Skips whitespace and '#' comments, then reads one unsigned integer.
int read_token(std::istream& in, const std::string& path) {
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
    } else if (!std::isspace(ch)) {
      break;
    }
  }
  if (ch == EOF) throw std::runtime_error("read_pnm: truncated header: " + path);
  int value = 0;
  bool any = false;
  while (ch != EOF && std::isdigit(ch)) {
    value = value * 10 + (ch - '0');
    any = true;
    ch = in.get();
  }
  if (!any) throw std::runtime_error("read_pnm: malformed header: " + path);
  return value;
}

}  // namespace

void write_pnm(const std::string& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw std::invalid_argument(
        "write_pnm: only 1-channel (PGM) or 3-channel (PPM) images, got " +
        img.shape_string());
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_pnm: cannot open " + path);
  f << (img.channels == 1 ? "P5" : "P6") << "\n"
    << img.width << " " << img.height << "\n255\n";
  std::string row;
  for (int y = 0; y < img.height; ++y) {
    row.clear();
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        row.push_back(static_cast<char>(to_byte(img.at(c, y, x))));
      }
    }
    f.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!f) throw std::runtime_error("write_pnm: write failed: " + path);
}

Image read_pnm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_pnm: cannot open " + path);
  char p, kind;
  f.get(p);
  f.get(kind);
  if (p != 'P' || (kind != '5' && kind != '6')) {
    throw std::runtime_error("read_pnm: not a binary PGM/PPM: " + path);
  }
  int width = read_token(f, path);
  int height = read_token(f, path);
  int maxval = read_token(f, path);
  if (maxval != 255) {
    throw std::runtime_error("read_pnm: unsupported maxval: " + path);
  }
  const int channels = (kind == '5') ? 1 : 3;
  Image img(channels, height, width);
  std::string buf(static_cast<std::size_t>(width) * height * channels, '\0');
  f.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (f.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw std::runtime_error("read_pnm: truncated payload: " + path);
  }
  std::size_t pos = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        img.at(c, y, x) =
            static_cast<std::uint8_t>(buf[pos++]) / 255.0;
      }
    }
  }
  return img;
}

}  // namespace evoq
