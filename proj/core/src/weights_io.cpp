#include "evoq/weights_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace evoq {

namespace {

constexpr char kMagic[4] = {'E', 'V', 'O', 'Q'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxDim = 1u << 24;

[[noreturn]] void fail(WeightsIoErrorKind kind, const std::string& msg) {
  throw WeightsIoError(kind, msg);
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  std::uint8_t u8() {
    if (pos + 1 > buf.size()) fail(WeightsIoErrorKind::Truncated, "truncated");
    return static_cast<std::uint8_t>(buf[pos++]);
  }
  std::uint32_t u32() {
    if (pos + 4 > buf.size()) fail(WeightsIoErrorKind::Truncated, "truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos + i]))
           << (8 * i);
    }
    pos += 4;
    return v;
  }
  float f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  void floats(std::vector<float>& dst, std::size_t n) {
    if (pos + 4 * n > buf.size()) {
      fail(WeightsIoErrorKind::Truncated, "truncated mid-tensor");
    }
    dst.resize(n);
    for (std::size_t i = 0; i < n; ++i) dst[i] = f32();
  }
};

std::uint8_t layer_tag(LayerKind k) { return static_cast<std::uint8_t>(k); }

void write_record(std::string& out, std::uint8_t tag,
                  const std::vector<std::uint32_t>& dims,
                  const std::vector<const std::vector<float>*>& payloads) {
  out.push_back(static_cast<char>(tag));
  out.push_back(static_cast<char>(dims.size()));
  for (auto d : dims) put_u32(out, d);
  for (const auto* p : payloads) {
    for (float v : *p) put_f32(out, v);
  }
}

}  // namespace

void save_model(const std::string& path, const Model& model) {
  model.validate();
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(model.spec.layers.size() + 1));

  const ModelSpec& spec = model.spec;
  write_record(out, 0,
               {static_cast<std::uint32_t>(spec.input.channels),
                static_cast<std::uint32_t>(spec.input.height),
                static_cast<std::uint32_t>(spec.input.width),
                static_cast<std::uint32_t>(spec.num_classes)},
               {});

  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const auto& ts = model.weights.layers[i].tensors;
    switch (l.kind) {
      case LayerKind::Conv:
        write_record(out, layer_tag(l.kind),
                     {ts[0].dims[0], ts[0].dims[1], ts[0].dims[2],
                      static_cast<std::uint32_t>(l.stride)},
                     {&ts[0].data, &ts[1].data});
        break;
      case LayerKind::BatchNorm:
        write_record(out, layer_tag(l.kind), {ts[0].dims[0]},
                     {&ts[0].data, &ts[1].data, &ts[2].data, &ts[3].data});
        break;
      case LayerKind::Relu:
        write_record(out, layer_tag(l.kind), {}, {});
        break;
      case LayerKind::MaxPool:
        write_record(out, layer_tag(l.kind),
                     {static_cast<std::uint32_t>(l.kernel),
                      static_cast<std::uint32_t>(l.stride)},
                     {});
        break;
      case LayerKind::Dropout: {
        std::vector<float> rate{static_cast<float>(l.rate)};
        write_record(out, layer_tag(l.kind), {}, {&rate});
        break;
      }
      case LayerKind::Dense:
        write_record(out, layer_tag(l.kind), {ts[0].dims[0], ts[0].dims[1]},
                     {&ts[0].data, &ts[1].data});
        break;
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(WeightsIoErrorKind::Io, "cannot open for write: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) fail(WeightsIoErrorKind::Io, "write failed: " + path);
}

Model load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(WeightsIoErrorKind::Io, "cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());

  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    fail(WeightsIoErrorKind::BadMagic, "bad magic in " + path);
  }
  Reader r{buf, 4};
  std::uint32_t version = r.u32();
  if (version != kVersion) {
    fail(WeightsIoErrorKind::BadVersion,
         "unsupported format version " + std::to_string(version));
  }
  std::uint32_t count = r.u32();
  if (count < 2) fail(WeightsIoErrorKind::Shape, "no layer records");

  Model model;
  for (std::uint32_t rec = 0; rec < count; ++rec) {
    std::uint8_t tag = r.u8();
    std::uint8_t rank = r.u8();
    if (rank > 8) fail(WeightsIoErrorKind::Shape, "implausible rank");
    std::vector<std::uint32_t> dims(rank);
    for (auto& d : dims) {
      d = r.u32();
      if (d == 0 || d > kMaxDim) {
        fail(WeightsIoErrorKind::Shape, "implausible dimension");
      }
    }

    auto u32s = [&](std::size_t i) { return dims.at(i); };
    auto expect_rank = [&](std::uint8_t want) {
      if (rank != want) {
        fail(WeightsIoErrorKind::Shape,
             "record " + std::to_string(rec) + ": wrong rank");
      }
    };

    if (rec == 0) {
      if (tag != 0) fail(WeightsIoErrorKind::Shape, "missing input record");
      expect_rank(4);
      model.spec.input = {static_cast<int>(u32s(0)), static_cast<int>(u32s(1)),
                          static_cast<int>(u32s(2))};
      model.spec.num_classes = static_cast<int>(u32s(3));
      continue;
    }

    LayerWeights lw;
    LayerSpec ls;
    switch (tag) {
      case 1: {  // conv
        expect_rank(4);
        ls = LayerSpec::conv(static_cast<int>(u32s(0)),
                             static_cast<int>(u32s(2)),
                             static_cast<int>(u32s(3)));
        Tensor w, b;
        w.dims = {u32s(0), u32s(1), u32s(2), u32s(2)};
        b.dims = {u32s(0)};
        r.floats(w.data, w.count());
        r.floats(b.data, b.count());
        lw.tensors = {std::move(w), std::move(b)};
        break;
      }
      case 2: {  // batchnorm
        expect_rank(1);
        ls = LayerSpec::batchnorm();
        for (int t = 0; t < 4; ++t) {
          Tensor ten;
          ten.dims = {u32s(0)};
          r.floats(ten.data, ten.count());
          lw.tensors.push_back(std::move(ten));
        }
        break;
      }
      case 3:
        expect_rank(0);
        ls = LayerSpec::relu();
        break;
      case 4:
        expect_rank(2);
        ls = LayerSpec::maxpool(static_cast<int>(u32s(0)),
                                static_cast<int>(u32s(1)));
        break;
      case 5: {
        expect_rank(0);
        std::vector<float> rate;
        r.floats(rate, 1);
        ls = LayerSpec::dropout(rate[0]);
        break;
      }
      case 6: {  // dense
        expect_rank(2);
        ls = LayerSpec::dense(static_cast<int>(u32s(0)));
        Tensor w, b;
        w.dims = {u32s(0), u32s(1)};
        b.dims = {u32s(0)};
        r.floats(w.data, w.count());
        r.floats(b.data, b.count());
        lw.tensors = {std::move(w), std::move(b)};
        break;
      }
      default:
        fail(WeightsIoErrorKind::Shape,
             "unknown layer tag " + std::to_string(tag));
    }
    model.spec.layers.push_back(ls);
    model.weights.layers.push_back(std::move(lw));
  }

  if (r.pos != buf.size()) {
    fail(WeightsIoErrorKind::Shape, "trailing bytes after last record");
  }
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    fail(WeightsIoErrorKind::Shape, e.what());
  }
  return model;
}

}  // namespace evoq
