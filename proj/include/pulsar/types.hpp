#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pulsar {

// Error taxonomy used across the library:
//   std::invalid_argument  - configuration or domain violations
//   pulsar::io_error       - unreadable, truncated or malformed files
//   pulsar::metric_error   - metrics whose denominator is empty
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class metric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Receiver geometry and sampling grid of the simulated sensor.
///
/// The waveform cube is channels x azimuth_bins x time_bins. Channel 0 is the
/// topmost laser; azimuth bin j covers [-180 + j*360/W, -180 + (j+1)*360/W)
/// degrees and time bin t covers [t*dt, (t+1)*dt) nanoseconds.
struct SensorConfig {
  int channels = 32;
  int azimuth_bins = 1800;
  int time_bins = 800;
  float bin_duration_ns = 1.0f;
  float vertical_fov_lo_deg = -30.67f;
  float vertical_fov_hi_deg = 10.67f;
  double light_speed = 3.0e8;  // m/s

  int direction_count() const { return channels * azimuth_bins; }
  double window_ns() const { return time_bins * double(bin_duration_ns); }
  double meters_per_bin() const {
    return light_speed * double(bin_duration_ns) * 1e-9 / 2.0;
  }
  double max_range_m() const { return meters_per_bin() * time_bins; }
  double azimuth_center_deg(int j) const {
    return -180.0 + (j + 0.5) * 360.0 / azimuth_bins;
  }
  double elevation_center_deg(int i) const {
    double span = double(vertical_fov_hi_deg) - vertical_fov_lo_deg;
    return vertical_fov_hi_deg - (i + 0.5) * span / channels;
  }

  void validate() const {
    if (channels <= 0 || azimuth_bins <= 0 || time_bins <= 0)
      throw std::invalid_argument("SensorConfig: grid dims must be positive");
    if (!(bin_duration_ns > 0))
      throw std::invalid_argument("SensorConfig: bin_duration_ns must be > 0");
    if (!(vertical_fov_lo_deg < vertical_fov_hi_deg))
      throw std::invalid_argument("SensorConfig: vertical FoV must be a nonempty interval");
    if (!(light_speed > 0))
      throw std::invalid_argument("SensorConfig: light_speed must be > 0");
  }

  bool same_grid(const SensorConfig& o) const {
    return channels == o.channels && azimuth_bins == o.azimuth_bins &&
           time_bins == o.time_bins && bin_duration_ns == o.bin_duration_ns;
  }
};

/// Transmit pulse: p(t) = exp(-t^2 / (2 sigma^2)), scaled by amplitude_scale
/// (the gamma factor that converts surface intensity to received amplitude).
struct PulseModel {
  double sigma_ns = 2.0;
  double amplitude_scale = 1.0;

  void validate() const {
    if (!(sigma_ns > 0))
      throw std::invalid_argument("PulseModel: sigma_ns must be > 0");
    if (!(amplitude_scale > 0))
      throw std::invalid_argument("PulseModel: amplitude_scale must be > 0");
  }
};

/// Per-direction first-return range and surface intensity. A negative stored
/// distance marks an absent cell (no return).
class RangeImage {
 public:
  RangeImage() = default;
  RangeImage(int channels, int azimuth_bins)
      : h_(channels), w_(azimuth_bins),
        distance_(std::size_t(channels) * azimuth_bins, -1.0f),
        intensity_(std::size_t(channels) * azimuth_bins, 0.0f) {
    if (channels <= 0 || azimuth_bins <= 0)
      throw std::invalid_argument("RangeImage: dims must be positive");
  }

  int channels() const { return h_; }
  int azimuth_bins() const { return w_; }
  std::size_t cell_count() const { return distance_.size(); }

  bool has(int i, int j) const { return distance_[idx(i, j)] >= 0.0f; }
  float distance(int i, int j) const { return distance_[idx(i, j)]; }
  float intensity(int i, int j) const { return intensity_[idx(i, j)]; }

  void set(int i, int j, float distance_m, float intensity) {
    if (distance_m < 0)
      throw std::invalid_argument("RangeImage::set: negative distance");
    distance_[idx(i, j)] = distance_m;
    intensity_[idx(i, j)] = intensity;
  }
  void clear(int i, int j) {
    distance_[idx(i, j)] = -1.0f;
    intensity_[idx(i, j)] = 0.0f;
  }

  std::size_t present_count() const {
    std::size_t n = 0;
    for (float d : distance_) n += (d >= 0.0f);
    return n;
  }

 private:
  std::size_t idx(int i, int j) const { return std::size_t(i) * w_ + j; }

  int h_ = 0, w_ = 0;
  std::vector<float> distance_;
  std::vector<float> intensity_;
};

/// Dense float32 cube of received amplitude, row-major (channel, azimuth,
/// time) with the time axis contiguous.
class WaveformTensor {
 public:
  WaveformTensor() = default;
  explicit WaveformTensor(const SensorConfig& sc) : sc_(sc) {
    sc.validate();
    data_.assign(std::size_t(sc.channels) * sc.azimuth_bins * sc.time_bins, 0.0f);
  }

  const SensorConfig& sensor() const { return sc_; }
  int channels() const { return sc_.channels; }
  int azimuth_bins() const { return sc_.azimuth_bins; }
  int time_bins() const { return sc_.time_bins; }
  std::size_t size() const { return data_.size(); }

  float* row(int i, int j) {
    return data_.data() + (std::size_t(i) * sc_.azimuth_bins + j) * sc_.time_bins;
  }
  const float* row(int i, int j) const {
    return data_.data() + (std::size_t(i) * sc_.azimuth_bins + j) * sc_.time_bins;
  }
  float at(int i, int j, int t) const { return row(i, j)[t]; }
  float& at(int i, int j, int t) { return row(i, j)[t]; }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  bool same_shape(const WaveformTensor& o) const { return sc_.same_grid(o.sc_); }

 private:
  SensorConfig sc_;
  std::vector<float> data_;
};

/// Per-voxel semantic labels over a (possibly downsampled) waveform grid.
class SegMask {
 public:
  static constexpr std::uint8_t kBackground = 0;
  static constexpr std::uint8_t kObject = 1;
  static constexpr std::uint8_t kAttack = 2;
  static constexpr int kClassCount = 3;

  SegMask() = default;
  SegMask(int channels, int azimuth_bins, int time_bins)
      : h_(channels), w_(azimuth_bins), d_(time_bins),
        data_(std::size_t(channels) * azimuth_bins * time_bins, 0) {
    if (channels <= 0 || azimuth_bins <= 0 || time_bins <= 0)
      throw std::invalid_argument("SegMask: dims must be positive");
  }

  int channels() const { return h_; }
  int azimuth_bins() const { return w_; }
  int time_bins() const { return d_; }
  std::size_t size() const { return data_.size(); }

  std::uint8_t* row(int i, int j) {
    return data_.data() + (std::size_t(i) * w_ + j) * d_;
  }
  const std::uint8_t* row(int i, int j) const {
    return data_.data() + (std::size_t(i) * w_ + j) * d_;
  }
  std::uint8_t at(int i, int j, int t) const { return row(i, j)[t]; }
  std::uint8_t& at(int i, int j, int t) { return row(i, j)[t]; }

  std::vector<std::uint8_t>& data() { return data_; }
  const std::vector<std::uint8_t>& data() const { return data_; }

  bool same_shape(const SegMask& o) const {
    return h_ == o.h_ && w_ == o.w_ && d_ == o.d_;
  }

 private:
  int h_ = 0, w_ = 0, d_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Acquisition timestamps: stamps[i*W + j] is the discrete emission slot of
/// direction (i, j). Directions sharing a stamp form one group of size <=
/// group_size (the trailing group may be smaller).
struct ScanTimingMatrix {
  int channels = 0;
  int azimuth_bins = 0;
  int group_size = 1;
  std::uint32_t timestamp_count = 0;
  std::vector<std::uint32_t> stamps;

  std::uint32_t at(int i, int j) const {
    return stamps[std::size_t(i) * azimuth_bins + j];
  }

  void validate() const {
    if (channels <= 0 || azimuth_bins <= 0 || group_size <= 0)
      throw std::invalid_argument("ScanTimingMatrix: dims and group_size must be positive");
    if (stamps.size() != std::size_t(channels) * azimuth_bins)
      throw std::invalid_argument("ScanTimingMatrix: stamp count does not match grid");
  }
};

struct Point3D {
  float x = 0, y = 0, z = 0;
  float intensity = 0;
};

/// Emits a one-line diagnostic on stderr. Library code warns instead of
/// failing for degenerate-but-legal inputs (e.g. group size 1).
void warn(const std::string& message);

}  // namespace pulsar
