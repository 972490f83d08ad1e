#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pulsar/defense.hpp"
#include "pulsar/types.hpp"

namespace pulsar {

struct SectorDeg {
  double lo = -45.0;
  double hi = 45.0;
};

struct RecoveryCounts {
  std::size_t evaluated = 0;    // in-sector directions with a benign return
  std::size_t recovered = 0;    // present within the distance threshold
  std::size_t missing = 0;      // benign present, nothing recovered
  std::size_t displaced = 0;    // recovered but off by more than the threshold
  std::size_t false_alarms = 0; // recovered where benign had no return
};

/// Percentage of in-sector benign returns whose recovered range lies within
/// threshold_m. Throws metric_error when no in-sector benign return exists.
double point_recovery_accuracy(const RangeImage& benign,
                               const RangeImage& recovered,
                               const SensorConfig& sc, SectorDeg sector,
                               double threshold_m = 0.5,
                               RecoveryCounts* counts = nullptr);

/// Percentage of in-sector directions whose amplitude-argmax bin carries the
/// kAttack ground-truth label. Throws metric_error on an empty sector.
double attack_success_rate(const WaveformTensor& attacked, const SegMask& gt,
                           SectorDeg sector);

/// Intersection over union of one label class; two empty sets rate as 1.
double mask_iou(const SegMask& pred, const SegMask& gt, std::uint8_t cls);

struct DefenseEntry {
  std::string method;
  double accuracy = 0.0;
  bool has_accuracy = false;
  double attack_success = 0.0;
  bool has_attack_success = false;
  double object_iou = 0.0, attack_iou = 0.0;
  bool has_iou = false;
  RecoveryCounts counts;
  std::string error;  // empty when the entry succeeded
};

struct RecoveryReport {
  std::string tool;
  nlohmann::ordered_json config;
  std::vector<DefenseEntry> entries;
};

struct ReportInputs {
  const WaveformTensor* attacked = nullptr;
  const ScanTimingMatrix* timing = nullptr;
  const RangeImage* benign = nullptr;
  const SegMask* ground_truth = nullptr;  // optional; enables oracle/ASR/IoU
  PulseModel pulse;
  float peak_threshold = 0.25f;
  SectorDeg sector;
  double threshold_m = 0.5;
};

/// Runs every requested defense end-to-end against the attacked cube and
/// scores it. A failing defense records its error in its entry; remaining
/// entries still run.
RecoveryReport build_report(const ReportInputs& in,
                            const std::vector<DefenseMethod>& methods);

/// Stable-key-order JSON document (ends with a newline).
std::string report_json(const RecoveryReport& r);

/// One CSV row per defense; undefined fields print as "-".
std::string report_csv(const RecoveryReport& r);

}  // namespace pulsar
