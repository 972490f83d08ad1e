#include "pulsar/defense.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <queue>
#include <unordered_map>

#include "pulsar/attack.hpp"
#include "pulsar/parallel.hpp"

namespace pulsar {

std::vector<std::vector<std::int32_t>> group_members(const ScanTimingMatrix& tm) {
  tm.validate();
  std::vector<std::vector<std::int32_t>> groups(tm.timestamp_count);
  for (std::size_t f = 0; f < tm.stamps.size(); ++f) {
    std::uint32_t tau = tm.stamps[f];
    if (tau >= tm.timestamp_count)
      throw std::invalid_argument("group_members: timestamp exceeds timestamp_count");
    groups[tau].push_back(std::int32_t(f));
  }
  return groups;
}

WaveformTensor apply_mask(const WaveformTensor& w, const SegMask& mask) {
  const SensorConfig& sc = w.sensor();
  if (mask.channels() != sc.channels || mask.azimuth_bins() != sc.azimuth_bins ||
      mask.time_bins() != sc.time_bins)
    throw std::invalid_argument("apply_mask: mask shape does not match waveform");

  WaveformTensor out(sc);
  const float* in = w.data().data();
  const std::uint8_t* lab = mask.data().data();
  float* o = out.data().data();
  parallel_for(std::int64_t(w.size()), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t v = b; v < e; ++v)
      o[v] = lab[v] == SegMask::kAttack ? 0.0f : in[v];
  });
  return out;
}

WaveformTensor avg_subtract(const WaveformTensor& w,
                            const ScanTimingMatrix& tm) {
  const SensorConfig& sc = w.sensor();
  if (tm.channels != sc.channels || tm.azimuth_bins != sc.azimuth_bins)
    throw std::invalid_argument("avg_subtract: timing matrix does not match waveform grid");

  auto groups = group_members(tm);
  WaveformTensor out(sc);
  int d = sc.time_bins;
  std::atomic<bool> degenerate{false};

  parallel_for(std::int64_t(groups.size()), [&](std::int64_t b, std::int64_t e) {
    std::vector<double> mean(d);
    for (std::int64_t g = b; g < e; ++g) {
      const auto& members = groups[g];
      if (members.empty()) continue;
      if (members.size() == 1) {
        degenerate = true;  // zero row already in place
        continue;
      }
      std::fill(mean.begin(), mean.end(), 0.0);
      for (std::int32_t f : members) {
        const float* row = w.data().data() + std::size_t(f) * d;
        for (int t = 0; t < d; ++t) mean[t] += row[t];
      }
      double inv = 1.0 / double(members.size());
      for (int t = 0; t < d; ++t) mean[t] *= inv;
      for (std::int32_t f : members) {
        const float* row = w.data().data() + std::size_t(f) * d;
        float* orow = out.data().data() + std::size_t(f) * d;
        for (int t = 0; t < d; ++t)
          orow[t] = std::max(0.0f, float(row[t] - mean[t]));
      }
    }
  });
  if (degenerate)
    warn("avg_subtract: group size 1 is degenerate, affected rows zeroed");
  return out;
}

SegMask coherence_mask(const WaveformTensor& w, const ScanTimingMatrix& tm,
                       float min_amplitude, int guard_bins) {
  const SensorConfig& sc = w.sensor();
  if (tm.channels != sc.channels || tm.azimuth_bins != sc.azimuth_bins)
    throw std::invalid_argument("coherence_mask: timing matrix does not match waveform grid");
  if (!(min_amplitude > 0))
    throw std::invalid_argument("coherence_mask: min_amplitude must be > 0");
  if (guard_bins < 0)
    guard_bins = label_window_bins(PulseModel{}, sc);

  auto groups = group_members(tm);
  SegMask mask(sc.channels, sc.azimuth_bins, sc.time_bins);
  int d = sc.time_bins;
  std::atomic<bool> degenerate{false};

  parallel_for(std::int64_t(groups.size()), [&](std::int64_t b, std::int64_t e) {
    std::vector<float> gmin(d);
    std::vector<std::uint8_t> labels(d);
    for (std::int64_t g = b; g < e; ++g) {
      const auto& members = groups[g];
      if (members.empty()) continue;
      if (members.size() == 1) {
        degenerate = true;
        continue;
      }
      const float* first = w.data().data() + std::size_t(members[0]) * d;
      std::copy(first, first + d, gmin.begin());
      for (std::size_t m = 1; m < members.size(); ++m) {
        const float* row = w.data().data() + std::size_t(members[m]) * d;
        for (int t = 0; t < d; ++t) gmin[t] = std::min(gmin[t], row[t]);
      }
      std::fill(labels.begin(), labels.end(), SegMask::kBackground);
      for (int t = 0; t < d; ++t) {
        if (gmin[t] < min_amplitude) continue;
        int lo = std::max(0, t - guard_bins);
        int hi = std::min(d - 1, t + guard_bins);
        for (int u = lo; u <= hi; ++u) labels[u] = SegMask::kAttack;
      }
      for (std::int32_t f : members)
        std::memcpy(mask.data().data() + std::size_t(f) * d, labels.data(), d);
    }
  });
  if (degenerate)
    warn("coherence_mask: group size 1 carries no cross-member evidence, left unlabeled");
  return mask;
}

namespace {

// Per-axis index mapping for nearest-neighbor resize.
struct AxisMap {
  int factor = 1;
  bool up = true;
};

AxisMap axis_map(int src, int dst, const char* axis) {
  if (dst <= 0)
    throw std::invalid_argument(std::string("resize_mask: target ") + axis +
                                " must be positive");
  if (dst >= src) {
    if (dst % src != 0)
      throw std::invalid_argument(std::string("resize_mask: target ") + axis +
                                  " " + std::to_string(dst) +
                                  " is not a multiple of source " + std::to_string(src));
    return {dst / src, true};
  }
  if (src % dst != 0)
    throw std::invalid_argument(std::string("resize_mask: target ") + axis + " " +
                                std::to_string(dst) +
                                " does not divide source " + std::to_string(src));
  return {src / dst, false};
}

inline int map_index(int x, const AxisMap& m) {
  return m.up ? x / m.factor : x * m.factor;
}

}  // namespace

SegMask resize_mask(const SegMask& m, int channels, int azimuth_bins,
                    int time_bins) {
  AxisMap mh = axis_map(m.channels(), channels, "channels");
  AxisMap mw = axis_map(m.azimuth_bins(), azimuth_bins, "azimuth_bins");
  AxisMap md = axis_map(m.time_bins(), time_bins, "time_bins");

  SegMask out(channels, azimuth_bins, time_bins);
  parallel_for(std::int64_t(channels) * azimuth_bins,
               [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t f = b; f < e; ++f) {
      int i = int(f / azimuth_bins);
      int j = int(f % azimuth_bins);
      const std::uint8_t* src = m.row(map_index(i, mh), map_index(j, mw));
      std::uint8_t* dst = out.row(i, j);
      for (int t = 0; t < time_bins; ++t) dst[t] = src[map_index(t, md)];
    }
  });
  return out;
}

namespace {

struct GridKey {
  std::int64_t x, y, z;
  bool operator==(const GridKey& o) const {
    return x == o.x && y == o.y && z == o.z;
  }
};

struct GridKeyHash {
  std::size_t operator()(const GridKey& k) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint64_t v : {std::uint64_t(k.x), std::uint64_t(k.y), std::uint64_t(k.z)}) {
      h ^= v;
      h *= 0x100000001b3ULL;
    }
    return std::size_t(h);
  }
};

using PointGrid = std::unordered_map<GridKey, std::vector<std::int32_t>, GridKeyHash>;

GridKey cell_of(const Point3D& p, double cell) {
  return {std::int64_t(std::floor(p.x / cell)),
          std::int64_t(std::floor(p.y / cell)),
          std::int64_t(std::floor(p.z / cell))};
}

double dist2(const Point3D& a, const Point3D& b) {
  double dx = double(a.x) - b.x, dy = double(a.y) - b.y, dz = double(a.z) - b.z;
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

std::vector<Point3D> ror_filter(const std::vector<Point3D>& points,
                                double radius_m, int min_neighbors) {
  if (!(radius_m > 0))
    throw std::invalid_argument("ror_filter: radius_m must be > 0");
  if (min_neighbors < 0)
    throw std::invalid_argument("ror_filter: min_neighbors must be >= 0");
  if (points.empty() || min_neighbors == 0) return points;

  PointGrid grid;
  grid.reserve(points.size());
  for (std::size_t p = 0; p < points.size(); ++p)
    grid[cell_of(points[p], radius_m)].push_back(std::int32_t(p));

  double r2 = radius_m * radius_m;
  std::vector<char> keep(points.size(), 0);
  parallel_for(std::int64_t(points.size()), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t p = b; p < e; ++p) {
      GridKey c = cell_of(points[p], radius_m);
      int found = 0;
      for (std::int64_t dx = -1; dx <= 1 && found < min_neighbors; ++dx)
        for (std::int64_t dy = -1; dy <= 1 && found < min_neighbors; ++dy)
          for (std::int64_t dz = -1; dz <= 1 && found < min_neighbors; ++dz) {
            auto it = grid.find({c.x + dx, c.y + dy, c.z + dz});
            if (it == grid.end()) continue;
            for (std::int32_t q : it->second) {
              if (q == p) continue;
              if (dist2(points[p], points[q]) <= r2 && ++found >= min_neighbors)
                break;
            }
          }
      keep[p] = found >= min_neighbors;
    }
  });

  std::vector<Point3D> out;
  out.reserve(points.size());
  for (std::size_t p = 0; p < points.size(); ++p)
    if (keep[p]) out.push_back(points[p]);
  return out;
}

std::vector<Point3D> sor_filter(const std::vector<Point3D>& points, int k,
                                double std_ratio) {
  if (k <= 0) throw std::invalid_argument("sor_filter: k must be >= 1");
  if (std_ratio < 0)
    throw std::invalid_argument("sor_filter: std_ratio must be >= 0");
  if (points.size() < std::size_t(k) + 1) {
    warn("sor_filter: fewer than k + 1 points, returning input unchanged");
    return points;
  }

  // Uniform grid sized for a handful of points per cell; ring-by-ring search
  // stops once the kth best distance is provably final.
  double lo[3] = {points[0].x, points[0].y, points[0].z};
  double hi[3] = {points[0].x, points[0].y, points[0].z};
  for (const Point3D& p : points) {
    lo[0] = std::min(lo[0], double(p.x)); hi[0] = std::max(hi[0], double(p.x));
    lo[1] = std::min(lo[1], double(p.y)); hi[1] = std::max(hi[1], double(p.y));
    lo[2] = std::min(lo[2], double(p.z)); hi[2] = std::max(hi[2], double(p.z));
  }
  double span = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2], 1e-9});
  double cell = span / std::max(1.0, std::cbrt(double(points.size()) / 2.0));

  PointGrid grid;
  grid.reserve(points.size());
  for (std::size_t p = 0; p < points.size(); ++p)
    grid[cell_of(points[p], cell)].push_back(std::int32_t(p));

  std::vector<double> mean_dist(points.size(), 0.0);
  parallel_for(std::int64_t(points.size()), [&](std::int64_t b, std::int64_t e) {
    std::priority_queue<double> best;  // max-heap of k smallest squared dists
    for (std::int64_t p = b; p < e; ++p) {
      while (!best.empty()) best.pop();
      GridKey c = cell_of(points[p], cell);
      std::int64_t scanned_cells = 0;
      for (std::int64_t ring = 0;; ++ring) {
        for (std::int64_t dx = -ring; dx <= ring; ++dx)
          for (std::int64_t dy = -ring; dy <= ring; ++dy)
            for (std::int64_t dz = -ring; dz <= ring; ++dz) {
              if (std::max({std::llabs(dx), std::llabs(dy), std::llabs(dz)}) != ring)
                continue;
              auto it = grid.find({c.x + dx, c.y + dy, c.z + dz});
              if (it == grid.end()) continue;
              ++scanned_cells;
              for (std::int32_t q : it->second) {
                if (q == p) continue;
                double d2 = dist2(points[p], points[q]);
                if (best.size() < std::size_t(k)) best.push(d2);
                else if (d2 < best.top()) { best.pop(); best.push(d2); }
              }
            }
        // Unscanned cells lie at Chebyshev distance > ring, hence any point
        // in them is farther than ring * cell from the query.
        double bound = double(ring) * cell;
        if (best.size() == std::size_t(k) && best.top() <= bound * bound) break;
        if (scanned_cells == std::int64_t(grid.size())) break;
      }
      double sum = 0.0;
      std::size_t cnt = best.size();
      while (!best.empty()) { sum += std::sqrt(best.top()); best.pop(); }
      mean_dist[p] = sum / double(cnt);
    }
  });

  double mu = 0.0;
  for (double m : mean_dist) mu += m;
  mu /= double(mean_dist.size());
  double var = 0.0;
  for (double m : mean_dist) var += (m - mu) * (m - mu);
  var /= double(mean_dist.size() - 1);
  double threshold = mu + std_ratio * std::sqrt(var);

  std::vector<Point3D> out;
  out.reserve(points.size());
  for (std::size_t p = 0; p < points.size(); ++p)
    if (mean_dist[p] <= threshold) out.push_back(points[p]);
  return out;
}

std::string DefenseMethod::name() const {
  switch (kind) {
    case Kind::kNone: return "none";
    case Kind::kOracleMask: return "oracle_mask";
    case Kind::kAvgSubtract: return "avg_subtract";
    case Kind::kCoherence: return "coherence_mask";
    case Kind::kExternalMask: return "external_mask";
    case Kind::kRor: return "ror_filter";
    case Kind::kSor: return "sor_filter";
  }
  return "unknown";
}

DefenseMethod DefenseMethod::parse(const std::string& text) {
  DefenseMethod m;
  if (text == "none") m.kind = Kind::kNone;
  else if (text == "oracle") m.kind = Kind::kOracleMask;
  else if (text == "avg_subtract" || text == "avg") m.kind = Kind::kAvgSubtract;
  else if (text == "coherence") m.kind = Kind::kCoherence;
  else if (text == "ror") m.kind = Kind::kRor;
  else if (text == "sor") m.kind = Kind::kSor;
  else if (text.rfind("mask:", 0) == 0 && text.size() > 5) {
    m.kind = Kind::kExternalMask;
    m.mask_path = text.substr(5);
  } else {
    throw std::invalid_argument(
        "unknown defense '" + text +
        "' (expected none|oracle|avg_subtract|coherence|ror|sor|mask:<path>)");
  }
  return m;
}

}  // namespace pulsar
