#pragma once

#include "pulsar/types.hpp"

namespace pulsar {

/// Periodic spoofing-pulse train fired into an azimuth sector.
struct AttackConfig {
  double pulse_interval_ns = 100.0;  // 10 MHz emitter
  double amplitude_min = 3.0;
  double amplitude_max = 8.0;
  double jitter_bound_ns = 20.0;  // per-pulse timing error, U(-b, +b)
  double sector_lo_deg = -45.0;
  double sector_hi_deg = 45.0;
  std::uint64_t seed = 0;

  /// Pulses per acquisition window: K = floor(T_max / interval); pulse k
  /// (1-based) is nominally centered at k * interval.
  int pulse_count(const SensorConfig& sc) const {
    return int(sc.window_ns() / pulse_interval_ns);
  }

  void validate() const {
    if (!(pulse_interval_ns > 0))
      throw std::invalid_argument("AttackConfig: pulse_interval_ns must be > 0");
    if (!(amplitude_min > 0) || amplitude_max < amplitude_min)
      throw std::invalid_argument("AttackConfig: need 0 < amplitude_min <= amplitude_max");
    if (jitter_bound_ns < 0)
      throw std::invalid_argument("AttackConfig: jitter_bound_ns must be >= 0");
    if (!(sector_lo_deg < sector_hi_deg))
      throw std::invalid_argument("AttackConfig: sector must be a nonempty interval");
  }
};

/// Additive receiver noise, N(0, std) per voxel, keyed by voxel index.
struct NoiseConfig {
  double std = 0.05;
  std::uint64_t seed = 0;

  void validate() const {
    if (std < 0) throw std::invalid_argument("NoiseConfig: std must be >= 0");
  }
};

/// Attack contribution plus the exact pulse geometry it was rendered from.
/// pulse_centers_ns[tau] holds the jittered centers drawn for timestamp tau
/// (shared verbatim by every direction in that group); amplitudes_ns mirrors
/// it. in_sector flags directions (flattened i*W+j) the emitter can reach.
struct AttackTrain {
  WaveformTensor waveform;
  std::vector<std::vector<float>> pulse_centers_ns;
  std::vector<std::vector<float>> amplitudes;
  std::vector<std::uint8_t> in_sector;
};

/// True when azimuth bin j's center lies inside [lo_deg, hi_deg].
bool azimuth_in_sector(const SensorConfig& sc, int j, double lo_deg,
                       double hi_deg);

/// Renders the spoofing train. Each timestamp draws one jitter and one
/// amplitude per pulse from counter-keyed streams (seed, timestamp, k), so
/// all directions sharing a timestamp receive bitwise-identical rows and the
/// result is independent of scheduling. Directions outside the sector stay
/// zero. K == 0 is legal and produces an empty train with a warning.
AttackTrain generate_attack_train(const ScanTimingMatrix& tm,
                                  const AttackConfig& ac, const PulseModel& pm,
                                  const SensorConfig& sc);

/// Composes the received cube: benign + attack + N(0, std), clamped at zero.
/// Noise is keyed per voxel from nc.seed, so the result is deterministic and
/// thread-count independent.
WaveformTensor inject(const WaveformTensor& benign,
                      const WaveformTensor& attack, const NoiseConfig& nc);

// Ground-truth label windows extend kLabelWindowSigmas standard deviations
// (rounded up to whole bins) to each side of a pulse center, wide enough
// that the residue outside a masked pulse stays below detection threshold.
inline constexpr double kLabelWindowSigmas = 3.0;

/// Half-width, in time bins, of a ground-truth label window.
int label_window_bins(const PulseModel& pm, const SensorConfig& sc);

/// Voxel labels from synthesis geometry: bins within the label window of a
/// legitimate echo get kObject, bins within the window of a spoofed pulse get
/// kAttack (attack wins where windows overlap), everything else kBackground.
SegMask label_ground_truth(const RangeImage& benign, const AttackTrain& attack,
                           const ScanTimingMatrix& tm, const PulseModel& pm,
                           const SensorConfig& sc);

}  // namespace pulsar
