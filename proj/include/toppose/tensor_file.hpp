#pragma once

// Binary tensor container: the 8 magic bytes "GRMITNSR", then little-endian
// uint32 version (1), ndim and ndim dims, then row-major little-endian
// IEEE-754 float32 values.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "toppose/common.hpp"
#include "toppose/tensor.hpp"

namespace toppose {

inline constexpr char kTensorMagic[8] = {'G', 'R', 'M', 'I', 'T', 'N', 'S', 'R'};
inline constexpr std::uint32_t kTensorVersion = 1;

struct TensorFile {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t element_count() const;
};

std::vector<char> encode_tensor(const TensorFile& tensor);
TensorFile decode_tensor(const std::vector<char>& bytes);

void write_tensor_file(const std::filesystem::path& path, const TensorFile& tensor);
TensorFile read_tensor_file(const std::filesystem::path& path);

/// Heatmaps as [K, H, W].
TensorFile to_tensor_file(const HeatmapStack<float>& heatmaps);
/// Offsets as [2K, H, W] with channel 2k holding x and 2k + 1 holding y.
TensorFile to_tensor_file(const OffsetStack<float>& offsets);

HeatmapStack<float> heatmaps_from_tensor(const TensorFile& tensor);
OffsetStack<float> offsets_from_tensor(const TensorFile& tensor);

enum class TensorKind { Heatmap, Offset };

/// "<image_id>_<box_index>_heat.tns" / "..._off.tns"
std::string tensor_file_name(ImageId image_id, int box_index, TensorKind kind);

}  // namespace toppose
