#include "evoq/dataset.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>

namespace evoq {

namespace {

[[noreturn]] void fail(DatasetIoErrorKind kind, const std::string& msg) {
  throw DatasetIoError(kind, msg);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(DatasetIoErrorKind::Io, "cannot open: " + path);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

std::string gunzip(const std::string& in, const std::string& path) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) {
    fail(DatasetIoErrorKind::Io, "zlib init failed");
  }
  std::string out;
  std::vector<char> chunk(1 << 16);
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(chunk.data());
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      fail(DatasetIoErrorKind::Truncated, "corrupt gzip stream: " + path);
    }
    out.append(chunk.data(), chunk.size() - zs.avail_out);
  }
  inflateEnd(&zs);
  return out;
}

std::string read_maybe_gz(const std::string& path) {
  std::string raw = read_file(path);
  if (raw.size() >= 2 && static_cast<std::uint8_t>(raw[0]) == 0x1f &&
      static_cast<std::uint8_t>(raw[1]) == 0x8b) {
    return gunzip(raw, path);
  }
  return raw;
}

std::uint32_t be32(const std::string& buf, std::size_t pos,
                   const std::string& path) {
  if (pos + 4 > buf.size()) {
    fail(DatasetIoErrorKind::Truncated, "truncated header: " + path);
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v = (v << 8) | static_cast<std::uint8_t>(buf[pos + i]);
  }
  return v;
}

}  // namespace

Dataset load_mnist_idx(const std::string& images_path,
                       const std::string& labels_path) {
  std::string ibuf = read_maybe_gz(images_path);
  std::string lbuf = read_maybe_gz(labels_path);

  if (be32(ibuf, 0, images_path) != 0x00000803u) {
    fail(DatasetIoErrorKind::BadMagic, "bad image magic in " + images_path);
  }
  if (be32(lbuf, 0, labels_path) != 0x00000801u) {
    fail(DatasetIoErrorKind::BadMagic, "bad label magic in " + labels_path);
  }
  std::uint32_t n = be32(ibuf, 4, images_path);
  std::uint32_t h = be32(ibuf, 8, images_path);
  std::uint32_t w = be32(ibuf, 12, images_path);
  std::uint32_t nl = be32(lbuf, 4, labels_path);
  if (n != nl) {
    fail(DatasetIoErrorKind::CountMismatch,
         "image count " + std::to_string(n) + " != label count " +
             std::to_string(nl));
  }
  std::size_t need = 16 + static_cast<std::size_t>(n) * h * w;
  if (ibuf.size() < need) {
    fail(DatasetIoErrorKind::Truncated, "image payload truncated: " +
                                            images_path);
  }
  if (lbuf.size() < 8 + n) {
    fail(DatasetIoErrorKind::Truncated, "label payload truncated: " +
                                            labels_path);
  }

  Dataset ds;
  ds.images.reserve(n);
  ds.labels.reserve(n);
  std::size_t pos = 16;
  for (std::uint32_t i = 0; i < n; ++i) {
    Image img(1, static_cast<int>(h), static_cast<int>(w));
    for (std::size_t px = 0; px < static_cast<std::size_t>(h) * w; ++px) {
      img.data[px] = static_cast<std::uint8_t>(ibuf[pos + px]) / 255.0;
    }
    pos += static_cast<std::size_t>(h) * w;
    ds.images.push_back(std::move(img));
    int label = static_cast<std::uint8_t>(lbuf[8 + i]);
    if (label > 9) {
      fail(DatasetIoErrorKind::BadLabel,
           "label " + std::to_string(label) + " out of range at index " +
               std::to_string(i));
    }
    ds.labels.push_back(label);
  }
  return ds;
}

Dataset load_cifar_raw(const std::string& path) {
  std::string buf = read_maybe_gz(path);
  constexpr std::size_t kRecord = 1 + 3 * 32 * 32;
  if (buf.empty() || buf.size() % kRecord != 0) {
    fail(DatasetIoErrorKind::Truncated,
         "file size is not a whole number of records: " + path);
  }
  Dataset ds;
  std::size_t n = buf.size() / kRecord;
  ds.images.reserve(n);
  ds.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const char* rec = buf.data() + i * kRecord;
    int label = static_cast<std::uint8_t>(rec[0]);
    if (label > 9) {
      fail(DatasetIoErrorKind::BadLabel,
           "label " + std::to_string(label) + " out of range at record " +
               std::to_string(i));
    }
    Image img(3, 32, 32);
    for (std::size_t px = 0; px < 3 * 32 * 32; ++px) {
      img.data[px] = static_cast<std::uint8_t>(rec[1 + px]) / 255.0;
    }
    ds.images.push_back(std::move(img));
    ds.labels.push_back(label);
  }
  return ds;
}

}  // namespace evoq
