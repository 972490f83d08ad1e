#pragma once

#include <string>
#include <vector>

#include "pulsar/nn.hpp"
#include "pulsar/types.hpp"

namespace pulsar {

// Binary containers, all little-endian, fixed field order, no padding:
//
//   waveform  "PWFM" | u32 version | u32 H W D phi | f32 bin_ns
//             | u32 stamps[H*W] | f32 payload[H*W*D]
//   mask      "PMSK" | u32 version | u32 H W D phi | f32 bin_ns
//             | u32 stamps[H*W] | u8 labels[H*W*D]
//   weights   "PWTS" | u32 version | u32 layers | per layer:
//             u32 name_len | name | u32 ndim | u32 dims[ndim]
//             | then all f32 values concatenated in layer order
//   points    bare 16-byte records: f32 x y z intensity
//
// Readers validate magic, version, dimensions and byte counts and throw
// pulsar::io_error naming the file and offending field or byte offset.

inline constexpr std::uint32_t kFileVersion = 1;

struct WaveformFile {
  WaveformTensor tensor;
  ScanTimingMatrix timing;
};

struct MaskFile {
  SegMask mask;
  ScanTimingMatrix timing;
};

void write_waveform(const std::string& path, const WaveformTensor& w,
                    const ScanTimingMatrix& tm);
WaveformFile read_waveform(const std::string& path);

/// Writes a label grid; without a timing matrix a trivial one (group size 1)
/// is recorded. bin_ns only matters when the mask is at sensor resolution.
void write_mask(const std::string& path, const SegMask& m,
                const ScanTimingMatrix* tm = nullptr, float bin_ns = 1.0f);
MaskFile read_mask(const std::string& path);

void write_weights(const std::string& path, const nn::WeightBundle& wb);
nn::WeightBundle read_weights(const std::string& path);

std::vector<Point3D> load_pointcloud_bin(const std::string& path);
void write_pointcloud_bin(const std::string& path,
                          const std::vector<Point3D>& points);

}  // namespace pulsar
