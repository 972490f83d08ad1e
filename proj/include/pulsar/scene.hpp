#pragma once

#include <cstdint>
#include <vector>

#include "pulsar/types.hpp"

namespace pulsar {

/// Axis-aligned box obstacle. intensity < 0 asks the generator to draw one
/// uniformly from the scene's intensity range (keyed by the scene seed).
struct BoxSpec {
  float center[3] = {0, 0, 0};
  float size[3] = {1, 1, 1};
  float intensity = -1.0f;
};

/// Vertical rectangular wall between (x1, y1) and (x2, y2).
struct WallSpec {
  float x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  float z_base = 0, height = 1;
  float intensity = -1.0f;
};

enum class Background { kAbsent, kMaxRange };

struct SceneSpec {
  std::uint64_t seed = 0;
  std::vector<BoxSpec> boxes;
  std::vector<WallSpec> walls;
  bool has_ground = false;
  float ground_height = -2.0f;
  float ground_intensity = 0.5f;
  Background background = Background::kAbsent;
  float background_intensity = 0.2f;
  float intensity_min = 0.5f;
  float intensity_max = 2.5f;

  void validate() const;
};

/// Ray-casts the scene through the sensor grid (one ray per cell center,
/// nearest hit wins) into a range image. Deterministic in spec.seed; with
/// Background::kMaxRange misses become returns at the unambiguous range
/// limit, otherwise they stay absent.
RangeImage gen_synthetic_scene(const SceneSpec& spec, const SensorConfig& sc);

enum class KeepRule { kNearest, kStrongest };

struct ProjectionStats {
  std::size_t dropped_out_of_fov = 0;
  std::size_t dropped_out_of_range = 0;
  std::size_t collisions = 0;
};

/// Bins Cartesian points into the sensor grid. Colliding points keep the
/// nearest (or strongest) one; points outside the FoV or beyond the
/// unambiguous range are dropped and counted.
RangeImage project_to_range_image(const std::vector<Point3D>& points,
                                  const SensorConfig& sc,
                                  KeepRule keep = KeepRule::kNearest,
                                  ProjectionStats* stats = nullptr);

/// Converts present cells back to Cartesian points at cell-center angles.
std::vector<Point3D> range_image_to_points(const RangeImage& ri,
                                           const SensorConfig& sc);

/// Keeps every factor-th channel starting at row 0 (e.g. 64 -> 32 beams).
RangeImage channel_downsample(const RangeImage& ri, int factor);

}  // namespace pulsar
