#include "evoq/defenses.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace evoq {

DefenseSpec DefenseSpec::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("DefenseSpec: expected '<kind>:<param>', got '" +
                                std::string(text) + "'");
  }
  std::string_view name = text.substr(0, colon);
  std::string_view num = text.substr(colon + 1);
  int param = 0;
  auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), param);
  if (ec != std::errc() || ptr != num.data() + num.size()) {
    throw std::invalid_argument("DefenseSpec: bad parameter in '" +
                                std::string(text) + "'");
  }
  DefenseSpec spec;
  if (name == "jpeg") {
    spec.kind = Kind::Jpeg;
  } else if (name == "bitdepth") {
    spec.kind = Kind::BitDepth;
  } else if (name == "smooth") {
    spec.kind = Kind::Smooth;
  } else {
    throw std::invalid_argument("DefenseSpec: unknown kind '" +
                                std::string(name) + "'");
  }
  spec.param = param;
  spec.validate();
  return spec;
}

std::string DefenseSpec::to_string() const {
  switch (kind) {
    case Kind::Jpeg:
      return "jpeg:" + std::to_string(param);
    case Kind::BitDepth:
      return "bitdepth:" + std::to_string(param);
    case Kind::Smooth:
      return "smooth:" + std::to_string(param);
  }
  return "?";
}

void DefenseSpec::validate() const {
  switch (kind) {
    case Kind::Jpeg:
      if (param < 1 || param > 100) {
        throw std::invalid_argument("DefenseSpec: jpeg quality out of [1,100]");
      }
      break;
    case Kind::BitDepth:
      if (param < 1 || param > 8) {
        throw std::invalid_argument("DefenseSpec: bit depth out of [1,8]");
      }
      break;
    case Kind::Smooth:
      if (param < 1 || param % 2 == 0) {
        throw std::invalid_argument("DefenseSpec: window must be odd and >= 1");
      }
      break;
  }
}

Image bit_depth_reduce(const Image& x, int d) {
  if (d < 1 || d > 8) {
    throw std::invalid_argument("bit_depth_reduce: d out of [1,8]");
  }
  const double levels = static_cast<double>((1 << d) - 1);
  Image out = x;
  for (double& v : out.data) {
    v = std::round(v * levels) / levels;
  }
  return out;
}

namespace {

// Half-sample symmetric reflection: ...dcba|abcd|dcba...
int reflect(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

template <typename Reduce>
Image window_filter(const Image& x, int w, Reduce reduce) {
  if (w < 1 || w % 2 == 0) {
    throw std::invalid_argument("spatial_smooth: window must be odd and >= 1");
  }
  if (w == 1) return x;
  const int half = w / 2;
  Image out = x;
  std::vector<double> buf;
  buf.reserve(static_cast<std::size_t>(w) * w);
  for (int c = 0; c < x.channels; ++c) {
    for (int y = 0; y < x.height; ++y) {
      for (int col = 0; col < x.width; ++col) {
        buf.clear();
        for (int dy = -half; dy <= half; ++dy) {
          int sy = reflect(y + dy, x.height);
          for (int dx = -half; dx <= half; ++dx) {
            int sx = reflect(col + dx, x.width);
            buf.push_back(x.at(c, sy, sx));
          }
        }
        out.at(c, y, col) = reduce(buf);
      }
    }
  }
  return out;
}

}  // namespace

Image spatial_smooth(const Image& x, int w) {
  return window_filter(x, w, [](std::vector<double>& buf) {
    auto mid = buf.begin() + buf.size() / 2;
    std::nth_element(buf.begin(), mid, buf.end());
    return *mid;
  });
}

Image spatial_smooth_mean(const Image& x, int w) {
  return window_filter(x, w, [](std::vector<double>& buf) {
    double s = 0.0;
    for (double v : buf) s += v;
    return s / static_cast<double>(buf.size());
  });
}

namespace {

// Standard luminance quantization table.
constexpr std::array<int, 64> kLumaQuant = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};

struct DctBasis {
  // a[u][x] = alpha(u) * cos((2x+1) * u * pi / 16); orthonormal, so the
  // 2-D transform is A f A^T and its inverse is A^T F A.
  double a[8][8];
  DctBasis() {
    const double pi = 3.14159265358979323846;
    for (int u = 0; u < 8; ++u) {
      double alpha = (u == 0) ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) {
        a[u][x] = alpha * std::cos((2 * x + 1) * u * pi / 16.0);
      }
    }
  }
};

std::array<double, 64> quant_table(int q) {
  const double scale = (q < 50) ? 5000.0 / q : 200.0 - 2.0 * q;
  std::array<double, 64> t{};
  for (int i = 0; i < 64; ++i) {
    t[i] = std::max(1.0, std::round(kLumaQuant[i] * scale / 100.0));
  }
  return t;
}

}  // namespace

Image jpeg_like_compress(const Image& x, int q) {
  if (q < 1 || q > 100) {
    throw std::invalid_argument("jpeg_like_compress: q out of [1,100]");
  }
  static const DctBasis dct;
  const auto quant = quant_table(q);

  const int bh = (x.height + 7) / 8;
  const int bw = (x.width + 7) / 8;
  Image out = x;

  double block[8][8], tmp[8][8], coef[8][8];
  for (int c = 0; c < x.channels; ++c) {
    for (int by = 0; by < bh; ++by) {
      for (int bx = 0; bx < bw; ++bx) {
        // Gather with edge replication, shifted to [-0.5, 0.5] * 255.
        for (int y = 0; y < 8; ++y) {
          int sy = std::min(by * 8 + y, x.height - 1);
          for (int xx = 0; xx < 8; ++xx) {
            int sx = std::min(bx * 8 + xx, x.width - 1);
            block[y][xx] = (x.at(c, sy, sx) - 0.5) * 255.0;
          }
        }
        // coef = A * block * A^T
        for (int u = 0; u < 8; ++u) {
          for (int xx = 0; xx < 8; ++xx) {
            double s = 0.0;
            for (int k = 0; k < 8; ++k) s += dct.a[u][k] * block[k][xx];
            tmp[u][xx] = s;
          }
        }
        for (int u = 0; u < 8; ++u) {
          for (int v = 0; v < 8; ++v) {
            double s = 0.0;
            for (int k = 0; k < 8; ++k) s += tmp[u][k] * dct.a[v][k];
            coef[u][v] = std::round(s / quant[u * 8 + v]) * quant[u * 8 + v];
          }
        }
        // block = A^T * coef * A
        for (int y = 0; y < 8; ++y) {
          for (int v = 0; v < 8; ++v) {
            double s = 0.0;
            for (int k = 0; k < 8; ++k) s += dct.a[k][y] * coef[k][v];
            tmp[y][v] = s;
          }
        }
        for (int y = 0; y < 8; ++y) {
          int oy = by * 8 + y;
          if (oy >= x.height) break;
          for (int xx = 0; xx < 8; ++xx) {
            int ox = bx * 8 + xx;
            if (ox >= x.width) continue;
            double s = 0.0;
            for (int k = 0; k < 8; ++k) s += tmp[y][k] * dct.a[k][xx];
            out.at(c, oy, ox) = std::clamp(s / 255.0 + 0.5, 0.0, 1.0);
          }
        }
      }
    }
  }
  return out;
}

Image apply_defense(const Image& x, const DefenseSpec& spec) {
  switch (spec.kind) {
    case DefenseSpec::Kind::Jpeg:
      return jpeg_like_compress(x, spec.param);
    case DefenseSpec::Kind::BitDepth:
      return bit_depth_reduce(x, spec.param);
    case DefenseSpec::Kind::Smooth:
      return spatial_smooth(x, spec.param);
  }
  throw std::logic_error("apply_defense: unreachable");
}

DefendedOracle::DefendedOracle(QueryOracle& base, DefenseSpec spec)
    : base_(base), spec_(spec) {
  spec_.validate();
}

}  // namespace evoq
