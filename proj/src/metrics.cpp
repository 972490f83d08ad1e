#include "pulsar/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "pulsar/attack.hpp"
#include "pulsar/io.hpp"
#include "pulsar/scene.hpp"
#include "pulsar/version.hpp"
#include "pulsar/waveform.hpp"

namespace pulsar {

double point_recovery_accuracy(const RangeImage& benign,
                               const RangeImage& recovered,
                               const SensorConfig& sc, SectorDeg sector,
                               double threshold_m, RecoveryCounts* counts) {
  if (benign.channels() != recovered.channels() ||
      benign.azimuth_bins() != recovered.azimuth_bins())
    throw std::invalid_argument("point_recovery_accuracy: range images differ in shape");
  if (benign.channels() != sc.channels || benign.azimuth_bins() != sc.azimuth_bins)
    throw std::invalid_argument("point_recovery_accuracy: range image does not match sensor grid");
  if (!(threshold_m > 0))
    throw std::invalid_argument("point_recovery_accuracy: threshold_m must be > 0");

  RecoveryCounts c;
  for (int j = 0; j < sc.azimuth_bins; ++j) {
    if (!azimuth_in_sector(sc, j, sector.lo, sector.hi)) continue;
    for (int i = 0; i < sc.channels; ++i) {
      if (!benign.has(i, j)) {
        if (recovered.has(i, j)) ++c.false_alarms;
        continue;
      }
      ++c.evaluated;
      if (!recovered.has(i, j)) {
        ++c.missing;
      } else if (std::abs(double(recovered.distance(i, j)) - benign.distance(i, j)) <=
                 threshold_m) {
        ++c.recovered;
      } else {
        ++c.displaced;
      }
    }
  }
  if (counts) *counts = c;
  if (c.evaluated == 0)
    throw metric_error("point_recovery_accuracy: no in-sector benign return to evaluate");
  return 100.0 * double(c.recovered) / double(c.evaluated);
}

double attack_success_rate(const WaveformTensor& attacked, const SegMask& gt,
                           SectorDeg sector) {
  const SensorConfig& sc = attacked.sensor();
  if (gt.channels() != sc.channels || gt.azimuth_bins() != sc.azimuth_bins ||
      gt.time_bins() != sc.time_bins)
    throw std::invalid_argument("attack_success_rate: mask shape does not match waveform");

  std::size_t total = 0, hits = 0;
  for (int j = 0; j < sc.azimuth_bins; ++j) {
    if (!azimuth_in_sector(sc, j, sector.lo, sector.hi)) continue;
    for (int i = 0; i < sc.channels; ++i) {
      const float* row = attacked.row(i, j);
      int best = 0;
      for (int t = 1; t < sc.time_bins; ++t)
        if (row[t] > row[best]) best = t;
      ++total;
      hits += gt.at(i, j, best) == SegMask::kAttack;
    }
  }
  if (total == 0)
    throw metric_error("attack_success_rate: sector contains no direction");
  return 100.0 * double(hits) / double(total);
}

double mask_iou(const SegMask& pred, const SegMask& gt, std::uint8_t cls) {
  if (!pred.same_shape(gt))
    throw std::invalid_argument("mask_iou: masks differ in shape");
  std::size_t inter = 0, uni = 0;
  const std::uint8_t* p = pred.data().data();
  const std::uint8_t* g = gt.data().data();
  for (std::size_t v = 0; v < pred.size(); ++v) {
    bool a = p[v] == cls, b = g[v] == cls;
    inter += a && b;
    uni += a || b;
  }
  return uni == 0 ? 1.0 : double(inter) / double(uni);
}

namespace {

RangeImage filtered_points_to_image(const RangeImage& detected,
                                    const SensorConfig& sc,
                                    const DefenseMethod& m) {
  std::vector<Point3D> pts = range_image_to_points(detected, sc);
  std::vector<Point3D> kept =
      m.kind == DefenseMethod::Kind::kRor
          ? ror_filter(pts, m.ror_radius_m, m.ror_min_neighbors)
          : sor_filter(pts, m.sor_k, m.sor_std_ratio);
  return project_to_range_image(kept, sc, KeepRule::kNearest);
}

}  // namespace

RecoveryReport build_report(const ReportInputs& in,
                            const std::vector<DefenseMethod>& methods) {
  if (!in.attacked || !in.timing || !in.benign)
    throw std::invalid_argument("build_report: attacked tensor, timing matrix and benign reference are required");
  const SensorConfig& sc = in.attacked->sensor();

  RecoveryReport report;
  report.tool = std::string(kToolName) + " " + kToolVersion;

  for (const DefenseMethod& m : methods) {
    DefenseEntry entry;
    entry.method = m.name();
    try {
      RangeImage recovered;
      const SegMask* pred_mask = nullptr;
      SegMask owned_mask;
      bool waveform_domain = true;

      switch (m.kind) {
        case DefenseMethod::Kind::kNone:
          recovered = peak_detect(*in.attacked, in.pulse, in.peak_threshold);
          entry.has_attack_success = in.ground_truth != nullptr;
          if (in.ground_truth)
            entry.attack_success =
                attack_success_rate(*in.attacked, *in.ground_truth, in.sector);
          break;
        case DefenseMethod::Kind::kOracleMask: {
          if (!in.ground_truth)
            throw std::invalid_argument("oracle defense requires ground-truth labels");
          owned_mask = *in.ground_truth;
          pred_mask = &owned_mask;
          break;
        }
        case DefenseMethod::Kind::kAvgSubtract: {
          WaveformTensor defended = avg_subtract(*in.attacked, *in.timing);
          recovered = peak_detect(defended, in.pulse, in.peak_threshold);
          if (in.ground_truth) {
            entry.attack_success =
                attack_success_rate(defended, *in.ground_truth, in.sector);
            entry.has_attack_success = true;
          }
          break;
        }
        case DefenseMethod::Kind::kCoherence: {
          owned_mask = coherence_mask(*in.attacked, *in.timing, m.theta_min,
                                      m.guard_bins);
          pred_mask = &owned_mask;
          break;
        }
        case DefenseMethod::Kind::kExternalMask: {
          MaskFile mf = read_mask(m.mask_path);
          owned_mask = std::move(mf.mask);
          if (owned_mask.channels() != sc.channels ||
              owned_mask.azimuth_bins() != sc.azimuth_bins ||
              owned_mask.time_bins() != sc.time_bins)
            owned_mask = resize_mask(owned_mask, sc.channels, sc.azimuth_bins,
                                     sc.time_bins);
          pred_mask = &owned_mask;
          break;
        }
        case DefenseMethod::Kind::kRor:
        case DefenseMethod::Kind::kSor: {
          waveform_domain = false;
          RangeImage detected = peak_detect(*in.attacked, in.pulse, in.peak_threshold);
          recovered = filtered_points_to_image(detected, sc, m);
          break;
        }
      }

      if (pred_mask) {
        WaveformTensor defended = apply_mask(*in.attacked, *pred_mask);
        recovered = peak_detect(defended, in.pulse, in.peak_threshold);
        if (in.ground_truth) {
          entry.attack_success =
              attack_success_rate(defended, *in.ground_truth, in.sector);
          entry.has_attack_success = true;
          entry.object_iou = mask_iou(*pred_mask, *in.ground_truth, SegMask::kObject);
          entry.attack_iou = mask_iou(*pred_mask, *in.ground_truth, SegMask::kAttack);
          entry.has_iou = true;
        }
      }
      (void)waveform_domain;

      entry.accuracy = point_recovery_accuracy(*in.benign, recovered, sc,
                                               in.sector, in.threshold_m,
                                               &entry.counts);
      entry.has_accuracy = true;
    } catch (const std::exception& ex) {
      entry.error = ex.what();
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

namespace {

nlohmann::ordered_json entry_json(const DefenseEntry& e) {
  nlohmann::ordered_json j;
  j["method"] = e.method;
  j["point_recovery_accuracy"] =
      e.has_accuracy ? nlohmann::ordered_json(e.accuracy) : nullptr;
  j["attack_success_rate"] =
      e.has_attack_success ? nlohmann::ordered_json(e.attack_success) : nullptr;
  j["object_iou"] = e.has_iou ? nlohmann::ordered_json(e.object_iou) : nullptr;
  j["attack_iou"] = e.has_iou ? nlohmann::ordered_json(e.attack_iou) : nullptr;
  j["counts"] = {{"evaluated", e.counts.evaluated},
                 {"recovered", e.counts.recovered},
                 {"missing", e.counts.missing},
                 {"displaced", e.counts.displaced},
                 {"false_alarms", e.counts.false_alarms}};
  j["error"] = e.error.empty() ? nlohmann::ordered_json(nullptr)
                               : nlohmann::ordered_json(e.error);
  return j;
}

std::string fmt_or_dash(bool defined, double v) {
  if (!defined) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string report_json(const RecoveryReport& r) {
  nlohmann::ordered_json j;
  j["tool"] = r.tool;
  j["config"] = r.config.is_null() ? nlohmann::ordered_json::object() : r.config;
  j["entries"] = nlohmann::ordered_json::array();
  for (const DefenseEntry& e : r.entries) j["entries"].push_back(entry_json(e));
  return j.dump(2) + "\n";
}

std::string report_csv(const RecoveryReport& r) {
  std::string csv =
      "method,point_recovery_accuracy,attack_success_rate,object_iou,"
      "attack_iou,evaluated,recovered,missing,displaced,false_alarms,error\n";
  for (const DefenseEntry& e : r.entries) {
    csv += e.method;
    csv += ',' + fmt_or_dash(e.has_accuracy, e.accuracy);
    csv += ',' + fmt_or_dash(e.has_attack_success, e.attack_success);
    csv += ',' + fmt_or_dash(e.has_iou, e.object_iou);
    csv += ',' + fmt_or_dash(e.has_iou, e.attack_iou);
    csv += ',' + std::to_string(e.counts.evaluated);
    csv += ',' + std::to_string(e.counts.recovered);
    csv += ',' + std::to_string(e.counts.missing);
    csv += ',' + std::to_string(e.counts.displaced);
    csv += ',' + std::to_string(e.counts.false_alarms);
    csv += ',';
    for (char ch : e.error) csv += (ch == ',' || ch == '\n') ? ';' : ch;
    csv += '\n';
  }
  return csv;
}

}  // namespace pulsar
