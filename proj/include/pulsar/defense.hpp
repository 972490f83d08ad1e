#pragma once

#include <vector>

#include "pulsar/types.hpp"

namespace pulsar {

/// Zeroes every voxel the mask labels kAttack. Shapes must match exactly.
WaveformTensor apply_mask(const WaveformTensor& w, const SegMask& mask);

/// Subtracts from each direction the per-bin mean of its timing group
/// (inclusive of the direction itself) and clamps at zero. Identical spoofed
/// rows cancel; echoes that differ across the group survive attenuated.
/// Groups of size 1 degenerate to all-zero rows and raise a warning.
WaveformTensor avg_subtract(const WaveformTensor& w,
                            const ScanTimingMatrix& tm);

/// Flags bins whose amplitude is at least min_amplitude in EVERY member of a
/// timing group (the signature of a shared spoofing train), then widens each
/// flagged bin by guard_bins to cover pulse shoulders. All group members
/// receive the same kAttack labels. Size-1 groups produce no labels and a
/// warning. guard_bins < 0 selects the ground-truth label half-width.
SegMask coherence_mask(const WaveformTensor& w, const ScanTimingMatrix& tm,
                       float min_amplitude = 1.0f, int guard_bins = -1);

/// Nearest-neighbor resampling of a label grid. Each axis must be an integer
/// multiple (upsample, out[x] = in[x / f]) or divisor (downsample,
/// out[x] = in[x * f]) of the source; upsample-then-downsample by the same
/// factors is the identity.
SegMask resize_mask(const SegMask& m, int channels, int azimuth_bins,
                    int time_bins);

/// Radius outlier removal: keeps points with at least min_neighbors other
/// points (self excluded) within Euclidean distance radius_m. Exact; output
/// preserves input order.
std::vector<Point3D> ror_filter(const std::vector<Point3D>& points,
                                double radius_m = 0.05, int min_neighbors = 1);

/// Statistical outlier removal: computes each point's mean distance to its k
/// exact nearest neighbors and drops points whose mean exceeds
/// mu + std_ratio * sigma (sample standard deviation over all points).
/// Fewer than k + 1 points: input passes through with a warning.
std::vector<Point3D> sor_filter(const std::vector<Point3D>& points, int k = 20,
                                double std_ratio = 2.0);

/// Defense selection for report building and the command-line tool.
struct DefenseMethod {
  enum class Kind { kNone, kOracleMask, kAvgSubtract, kCoherence, kExternalMask, kRor, kSor };

  Kind kind = Kind::kNone;
  float theta_min = 1.0f;   // coherence amplitude floor
  int guard_bins = -1;      // coherence dilation; <0 = label half-width
  std::string mask_path;    // external mask file
  double ror_radius_m = 0.05;
  int ror_min_neighbors = 1;
  int sor_k = 20;
  double sor_std_ratio = 2.0;

  std::string name() const;

  /// Accepts none | oracle | avg_subtract | avg | coherence | ror | sor |
  /// mask:<path>. Throws std::invalid_argument otherwise.
  static DefenseMethod parse(const std::string& text);
};

/// Flattened member indices (ascending) for each timestamp of tm.
std::vector<std::vector<std::int32_t>> group_members(const ScanTimingMatrix& tm);

}  // namespace pulsar
