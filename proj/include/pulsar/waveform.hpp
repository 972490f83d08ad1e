#pragma once

#include "pulsar/types.hpp"

namespace pulsar {

// Pulses are evaluated only within +/- kPulseSupportSigmas standard
// deviations of their center; beyond that exp() is below 1e-13 and cannot
// move a float32 amplitude.
inline constexpr double kPulseSupportSigmas = 8.0;

/// Unit-amplitude Gaussian pulse shape p(t) = exp(-t^2 / (2 sigma^2)),
/// t in nanoseconds relative to the pulse center.
double gaussian_pulse(double t_ns, double sigma_ns);

/// Accumulates amplitude * p(t - center) into a waveform row of `bins` time
/// bins sampled at bin_duration_ns. Bin t is evaluated at its center of mass
/// t * bin_duration_ns (convention shared by synthesis and peak detection).
void add_pulse(float* row, int bins, double bin_duration_ns, double center_ns,
               double amplitude, double sigma_ns);

enum class ScanOrder { kRowMajor, kColumnMajor };

/// Assigns emission timestamps in scan order, filling groups of group_size
/// directions per timestamp. The trailing group may be smaller.
ScanTimingMatrix build_timing_matrix(const SensorConfig& sc, int group_size,
                                     ScanOrder order = ScanOrder::kRowMajor);

/// Renders echo pulses for every present range-image cell: a cell at distance
/// d with intensity i contributes amplitude_scale * i * p(t - 2d/c).
/// Throws std::invalid_argument if a cell's distance exceeds the sensor's
/// unambiguous range.
WaveformTensor synthesize_benign(const RangeImage& ri, const PulseModel& pm,
                                 const SensorConfig& sc);

/// First-return extraction: per direction takes the amplitude-maximal bin
/// (earliest bin wins ties), drops it below peak_threshold, and converts to
/// distance d = c * t * dt / 2 and intensity amplitude / amplitude_scale.
RangeImage peak_detect(const WaveformTensor& w, const PulseModel& pm,
                       float peak_threshold = 0.25f);

}  // namespace pulsar
