#include "pulsar/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "pulsar/parallel.hpp"

namespace pulsar {

void warn(const std::string& message) {
  std::cerr << "warning: " << message << "\n";
}

double gaussian_pulse(double t_ns, double sigma_ns) {
  if (!(sigma_ns > 0))
    throw std::invalid_argument("gaussian_pulse: sigma_ns must be > 0");
  double u = t_ns / sigma_ns;
  return std::exp(-0.5 * u * u);
}

void add_pulse(float* row, int bins, double bin_duration_ns, double center_ns,
               double amplitude, double sigma_ns) {
  double support = kPulseSupportSigmas * sigma_ns;
  int lo = int(std::ceil((center_ns - support) / bin_duration_ns));
  int hi = int(std::floor((center_ns + support) / bin_duration_ns));
  lo = std::max(lo, 0);
  hi = std::min(hi, bins - 1);
  double inv2s2 = 1.0 / (2.0 * sigma_ns * sigma_ns);
  for (int t = lo; t <= hi; ++t) {
    double dt = t * bin_duration_ns - center_ns;
    row[t] += float(amplitude * std::exp(-dt * dt * inv2s2));
  }
}

ScanTimingMatrix build_timing_matrix(const SensorConfig& sc, int group_size,
                                     ScanOrder order) {
  sc.validate();
  if (group_size <= 0)
    throw std::invalid_argument("build_timing_matrix: group_size must be >= 1");

  ScanTimingMatrix tm;
  tm.channels = sc.channels;
  tm.azimuth_bins = sc.azimuth_bins;
  tm.group_size = group_size;
  tm.stamps.resize(std::size_t(sc.channels) * sc.azimuth_bins);

  std::int64_t n = tm.stamps.size();
  for (std::int64_t f = 0; f < n; ++f) {
    std::int64_t i, j;
    if (order == ScanOrder::kRowMajor) {
      i = f / sc.azimuth_bins;
      j = f % sc.azimuth_bins;
    } else {
      j = f / sc.channels;
      i = f % sc.channels;
    }
    tm.stamps[i * sc.azimuth_bins + j] = std::uint32_t(f / group_size);
  }
  tm.timestamp_count = std::uint32_t((n + group_size - 1) / group_size);
  return tm;
}

WaveformTensor synthesize_benign(const RangeImage& ri, const PulseModel& pm,
                                 const SensorConfig& sc) {
  pm.validate();
  sc.validate();
  if (ri.channels() != sc.channels || ri.azimuth_bins() != sc.azimuth_bins)
    throw std::invalid_argument("synthesize_benign: range image does not match sensor grid");

  double max_range = sc.max_range_m();
  for (int i = 0; i < ri.channels(); ++i)
    for (int j = 0; j < ri.azimuth_bins(); ++j)
      if (ri.has(i, j) && ri.distance(i, j) > max_range)
        throw std::invalid_argument(
            "synthesize_benign: cell (" + std::to_string(i) + ", " +
            std::to_string(j) + ") at " + std::to_string(ri.distance(i, j)) +
            " m exceeds the unambiguous range " + std::to_string(max_range) + " m");

  WaveformTensor out(sc);
  double tof_per_meter = 2.0 / sc.light_speed * 1e9;  // ns of round trip per meter
  parallel_for(ri.cell_count(), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t f = b; f < e; ++f) {
      int i = int(f / sc.azimuth_bins);
      int j = int(f % sc.azimuth_bins);
      if (!ri.has(i, j)) continue;
      double center = ri.distance(i, j) * tof_per_meter;
      add_pulse(out.row(i, j), sc.time_bins, sc.bin_duration_ns, center,
                pm.amplitude_scale * ri.intensity(i, j), pm.sigma_ns);
    }
  });
  return out;
}

RangeImage peak_detect(const WaveformTensor& w, const PulseModel& pm,
                       float peak_threshold) {
  pm.validate();
  if (!(peak_threshold > 0))
    throw std::invalid_argument("peak_detect: peak_threshold must be > 0");
  const SensorConfig& sc = w.sensor();

  RangeImage ri(sc.channels, sc.azimuth_bins);
  double meters_per_bin = sc.meters_per_bin();
  parallel_for(std::int64_t(sc.direction_count()),
               [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t f = b; f < e; ++f) {
      int i = int(f / sc.azimuth_bins);
      int j = int(f % sc.azimuth_bins);
      const float* row = w.row(i, j);
      int best = 0;
      for (int t = 1; t < sc.time_bins; ++t)
        if (row[t] > row[best]) best = t;  // strict: earliest bin wins ties
      if (row[best] < peak_threshold) continue;
      ri.set(i, j, float(best * meters_per_bin),
             float(row[best] / pm.amplitude_scale));
    }
  });
  return ri;
}

}  // namespace pulsar
