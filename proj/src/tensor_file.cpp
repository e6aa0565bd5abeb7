#include "toppose/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace toppose {
namespace {

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const std::vector<char>& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  return v;
}

constexpr std::size_t kHeaderFixed = sizeof(kTensorMagic) + 8;
constexpr std::uint32_t kMaxDims = 16;

}  // namespace

std::size_t TensorFile::element_count() const {
  std::size_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return n;
}

std::vector<char> encode_tensor(const TensorFile& tensor) {
  if (tensor.element_count() != tensor.values.size())
    throw InvalidInput("tensor: element count does not match dims");
  std::vector<char> out(std::begin(kTensorMagic), std::end(kTensorMagic));
  out.reserve(kHeaderFixed + 4 * tensor.dims.size() + 4 * tensor.values.size());
  put_u32(out, kTensorVersion);
  put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
  for (std::uint32_t d : tensor.dims) put_u32(out, d);
  for (float v : tensor.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

TensorFile decode_tensor(const std::vector<char>& bytes) {
  if (bytes.size() < kHeaderFixed || std::memcmp(bytes.data(), kTensorMagic, 8) != 0)
    throw SchemaError("tensor: bad magic");
  const std::uint32_t version = get_u32(bytes, 8);
  if (version != kTensorVersion)
    throw SchemaError("tensor: unsupported version " + std::to_string(version));
  const std::uint32_t ndim = get_u32(bytes, 12);
  if (ndim > kMaxDims) throw SchemaError("tensor: too many dims");
  std::size_t offset = kHeaderFixed;
  if (bytes.size() < offset + 4 * std::size_t{ndim}) throw SchemaError("tensor: truncated header");
  TensorFile t;
  for (std::uint32_t i = 0; i < ndim; ++i, offset += 4) t.dims.push_back(get_u32(bytes, offset));
  const std::size_t capacity = (bytes.size() - offset) / 4;
  std::size_t count = 1;
  for (std::uint32_t d : t.dims) {
    if (d != 0 && count > capacity / d) throw SchemaError("tensor: dims exceed payload size");
    count *= d;
  }
  if (bytes.size() != offset + 4 * count)
    throw SchemaError("tensor: payload holds " + std::to_string((bytes.size() - offset) / 4) +
                      " values, dims require " + std::to_string(count));
  t.values.resize(count);
  for (std::size_t i = 0; i < count; ++i, offset += 4)
    t.values[i] = std::bit_cast<float>(get_u32(bytes, offset));
  return t;
}

void write_tensor_file(const std::filesystem::path& path, const TensorFile& tensor) {
  const auto bytes = encode_tensor(tensor);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

TensorFile read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_tensor(bytes);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

TensorFile to_tensor_file(const HeatmapStack<float>& heatmaps) {
  TensorFile t;
  t.dims = {static_cast<std::uint32_t>(heatmaps.channels()),
            static_cast<std::uint32_t>(heatmaps.height()),
            static_cast<std::uint32_t>(heatmaps.width())};
  t.values.reserve(t.element_count());
  for (const auto& p : heatmaps) t.values.insert(t.values.end(), p.data(), p.data() + p.size());
  return t;
}

TensorFile to_tensor_file(const OffsetStack<float>& offsets) {
  TensorFile t;
  t.dims = {static_cast<std::uint32_t>(2 * offsets.channels()),
            static_cast<std::uint32_t>(offsets.height()),
            static_cast<std::uint32_t>(offsets.width())};
  t.values.reserve(t.element_count());
  for (int k = 0; k < offsets.channels(); ++k) {
    const auto& x = offsets.dx[k];
    const auto& y = offsets.dy[k];
    t.values.insert(t.values.end(), x.data(), x.data() + x.size());
    t.values.insert(t.values.end(), y.data(), y.data() + y.size());
  }
  return t;
}

namespace {

void require_rank3(const TensorFile& t) {
  if (t.dims.size() != 3 || t.dims[1] == 0 || t.dims[2] == 0)
    throw SchemaError("tensor: expected [channels, height, width]");
  if (t.values.size() != t.element_count()) throw SchemaError("tensor: element count mismatch");
}

void copy_plane(const float* src, Plane<float>& dst) {
  std::copy(src, src + dst.size(), dst.data());
}

}  // namespace

HeatmapStack<float> heatmaps_from_tensor(const TensorFile& tensor) {
  require_rank3(tensor);
  const int c = static_cast<int>(tensor.dims[0]);
  const int h = static_cast<int>(tensor.dims[1]);
  const int w = static_cast<int>(tensor.dims[2]);
  HeatmapStack<float> out(c, h, w);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int k = 0; k < c; ++k) copy_plane(tensor.values.data() + plane * k, out[k]);
  return out;
}

OffsetStack<float> offsets_from_tensor(const TensorFile& tensor) {
  require_rank3(tensor);
  if (tensor.dims[0] % 2 != 0) throw SchemaError("tensor: offset channel count must be even");
  const int c = static_cast<int>(tensor.dims[0] / 2);
  const int h = static_cast<int>(tensor.dims[1]);
  const int w = static_cast<int>(tensor.dims[2]);
  OffsetStack<float> out(c, h, w);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int k = 0; k < c; ++k) {
    copy_plane(tensor.values.data() + plane * (2 * k), out.dx[k]);
    copy_plane(tensor.values.data() + plane * (2 * k + 1), out.dy[k]);
  }
  return out;
}

std::string tensor_file_name(ImageId image_id, int box_index, TensorKind kind) {
  return std::to_string(image_id) + "_" + std::to_string(box_index) +
         (kind == TensorKind::Heatmap ? "_heat.tns" : "_off.tns");
}

}  // namespace toppose
