#include "pulsar/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pulsar/parallel.hpp"
#include "pulsar/rng.hpp"

namespace pulsar {

namespace {

constexpr double kRayEps = 1e-6;
constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Ray {
  double dx, dy, dz;  // unit direction from the sensor origin
};

Ray cell_ray(const SensorConfig& sc, int i, int j) {
  double az = sc.azimuth_center_deg(j) * kDegToRad;
  double el = sc.elevation_center_deg(i) * kDegToRad;
  double ce = std::cos(el);
  return {ce * std::cos(az), ce * std::sin(az), std::sin(el)};
}

// Slab test; returns entry distance or a negative value on miss. The sensor
// sits at the origin, so rays starting inside a box are treated as misses.
double ray_box(const Ray& r, const BoxSpec& b) {
  double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
  const double dir[3] = {r.dx, r.dy, r.dz};
  for (int a = 0; a < 3; ++a) {
    double lo = b.center[a] - b.size[a] * 0.5;
    double hi = b.center[a] + b.size[a] * 0.5;
    if (std::abs(dir[a]) < kRayEps) {
      if (0.0 < lo || 0.0 > hi) return -1.0;
      continue;
    }
    double t1 = lo / dir[a], t2 = hi / dir[a];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return -1.0;
  }
  return tmin > kRayEps ? tmin : -1.0;
}

double ray_ground(const Ray& r, double height) {
  if (std::abs(r.dz) < kRayEps) return -1.0;
  double t = height / r.dz;
  return t > kRayEps ? t : -1.0;
}

double ray_wall(const Ray& r, const WallSpec& w) {
  double sx = double(w.x2) - w.x1, sy = double(w.y2) - w.y1;
  double den = r.dx * sy - r.dy * sx;
  if (std::abs(den) < kRayEps) return -1.0;
  double t = (double(w.x1) * sy - double(w.y1) * sx) / den;
  double s = (double(w.x1) * r.dy - double(w.y1) * r.dx) / den;
  if (t <= kRayEps || s < 0.0 || s > 1.0) return -1.0;
  double z = t * r.dz;
  if (z < w.z_base || z > double(w.z_base) + w.height) return -1.0;
  return t;
}

}  // namespace

void SceneSpec::validate() const {
  if (!(intensity_min > 0) || intensity_max < intensity_min)
    throw std::invalid_argument("SceneSpec: need 0 < intensity_min <= intensity_max");
  for (const BoxSpec& b : boxes)
    for (float s : b.size)
      if (!(s > 0)) throw std::invalid_argument("SceneSpec: box sizes must be positive");
  for (const WallSpec& w : walls) {
    if (!(w.height > 0))
      throw std::invalid_argument("SceneSpec: wall height must be positive");
    if (w.x1 == w.x2 && w.y1 == w.y2)
      throw std::invalid_argument("SceneSpec: wall endpoints coincide");
  }
  auto check_intensity = [&](float v, const char* what) {
    if (v >= 0 && (v < intensity_min || v > intensity_max))
      throw std::invalid_argument(std::string("SceneSpec: ") + what +
                                  " intensity outside the configured range");
  };
  for (const BoxSpec& b : boxes) check_intensity(b.intensity, "box");
  for (const WallSpec& w : walls) check_intensity(w.intensity, "wall");
}

RangeImage gen_synthetic_scene(const SceneSpec& spec, const SensorConfig& sc) {
  spec.validate();
  sc.validate();

  // Resolve randomized intensities up front, one draw per obstacle, so the
  // result does not depend on ray evaluation order.
  std::vector<float> box_int(spec.boxes.size());
  std::vector<float> wall_int(spec.walls.size());
  std::uint64_t obstacle = 0;
  auto resolve = [&](float configured) {
    double v = configured >= 0
                   ? configured
                   : rng::uniform(rng::key(spec.seed, rng::kStreamScene, obstacle),
                                  spec.intensity_min, spec.intensity_max);
    ++obstacle;
    return float(v);
  };
  for (std::size_t b = 0; b < spec.boxes.size(); ++b)
    box_int[b] = resolve(spec.boxes[b].intensity);
  for (std::size_t w = 0; w < spec.walls.size(); ++w)
    wall_int[w] = resolve(spec.walls[w].intensity);

  RangeImage ri(sc.channels, sc.azimuth_bins);
  double max_range = sc.max_range_m();

  parallel_for(std::int64_t(sc.direction_count()),
               [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t f = lo; f < hi; ++f) {
      int i = int(f / sc.azimuth_bins);
      int j = int(f % sc.azimuth_bins);
      Ray ray = cell_ray(sc, i, j);

      double best = std::numeric_limits<double>::infinity();
      float intensity = 0.0f;
      for (std::size_t b = 0; b < spec.boxes.size(); ++b) {
        double t = ray_box(ray, spec.boxes[b]);
        if (t > 0 && t < best) { best = t; intensity = box_int[b]; }
      }
      for (std::size_t w = 0; w < spec.walls.size(); ++w) {
        double t = ray_wall(ray, spec.walls[w]);
        if (t > 0 && t < best) { best = t; intensity = wall_int[w]; }
      }
      if (spec.has_ground) {
        double t = ray_ground(ray, spec.ground_height);
        if (t > 0 && t < best) { best = t; intensity = spec.ground_intensity; }
      }

      if (best <= max_range) {
        ri.set(i, j, float(best), intensity);
      } else if (spec.background == Background::kMaxRange) {
        ri.set(i, j, float(max_range), spec.background_intensity);
      }
    }
  });
  return ri;
}

RangeImage project_to_range_image(const std::vector<Point3D>& points,
                                  const SensorConfig& sc, KeepRule keep,
                                  ProjectionStats* stats) {
  sc.validate();
  RangeImage ri(sc.channels, sc.azimuth_bins);
  ProjectionStats local;
  double max_range = sc.max_range_m();
  double span = double(sc.vertical_fov_hi_deg) - sc.vertical_fov_lo_deg;

  for (const Point3D& p : points) {
    double dist = std::sqrt(double(p.x) * p.x + double(p.y) * p.y + double(p.z) * p.z);
    if (dist < kRayEps) {
      ++local.dropped_out_of_fov;
      continue;
    }
    double elev = std::asin(double(p.z) / dist) / kDegToRad;
    if (elev < sc.vertical_fov_lo_deg || elev > sc.vertical_fov_hi_deg) {
      ++local.dropped_out_of_fov;
      continue;
    }
    if (dist > max_range) {
      ++local.dropped_out_of_range;
      continue;
    }
    double az = std::atan2(double(p.y), double(p.x)) / kDegToRad;
    if (az >= 180.0) az -= 360.0;
    int j = int(std::floor((az + 180.0) / 360.0 * sc.azimuth_bins));
    j = std::min(j, sc.azimuth_bins - 1);
    int i = int(std::floor((sc.vertical_fov_hi_deg - elev) / span * sc.channels));
    i = std::min(i, sc.channels - 1);

    if (!ri.has(i, j)) {
      ri.set(i, j, float(dist), p.intensity);
      continue;
    }
    ++local.collisions;
    bool replace = keep == KeepRule::kNearest
                       ? dist < ri.distance(i, j)
                       : p.intensity > ri.intensity(i, j);
    if (replace) ri.set(i, j, float(dist), p.intensity);
  }
  if (stats) *stats = local;
  return ri;
}

std::vector<Point3D> range_image_to_points(const RangeImage& ri,
                                           const SensorConfig& sc) {
  if (ri.channels() != sc.channels || ri.azimuth_bins() != sc.azimuth_bins)
    throw std::invalid_argument("range_image_to_points: range image does not match sensor grid");
  std::vector<Point3D> pts;
  pts.reserve(ri.present_count());
  for (int i = 0; i < ri.channels(); ++i)
    for (int j = 0; j < ri.azimuth_bins(); ++j) {
      if (!ri.has(i, j)) continue;
      Ray r = cell_ray(sc, i, j);
      float d = ri.distance(i, j);
      pts.push_back({float(r.dx * d), float(r.dy * d), float(r.dz * d),
                     ri.intensity(i, j)});
    }
  return pts;
}

RangeImage channel_downsample(const RangeImage& ri, int factor) {
  if (factor <= 0)
    throw std::invalid_argument("channel_downsample: factor must be >= 1");
  if (ri.channels() % factor != 0)
    throw std::invalid_argument("channel_downsample: channel count " +
                                std::to_string(ri.channels()) +
                                " not divisible by factor " + std::to_string(factor));
  RangeImage out(ri.channels() / factor, ri.azimuth_bins());
  for (int i = 0; i < out.channels(); ++i)
    for (int j = 0; j < out.azimuth_bins(); ++j)
      if (ri.has(i * factor, j))
        out.set(i, j, ri.distance(i * factor, j), ri.intensity(i * factor, j));
  return out;
}

}  // namespace pulsar
