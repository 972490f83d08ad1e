// pulsar: spoofing-attack simulation and defense evaluation for full-waveform
// lidar cubes. Subcommands: synth, attack, defend, eval, bench.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 unreadable or
// malformed file, 4 metric undefined on the given input. Human-readable
// diagnostics go to stderr; files carry all machine-readable output.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pulsar/attack.hpp"
#include "pulsar/defense.hpp"
#include "pulsar/io.hpp"
#include "pulsar/metrics.hpp"
#include "pulsar/rng.hpp"
#include "pulsar/scene.hpp"
#include "pulsar/suite.hpp"
#include "pulsar/version.hpp"
#include "pulsar/waveform.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string tool_id() {
  return std::string(pulsar::kToolName) + " " + pulsar::kToolVersion;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pulsar::io_error(path + ": cannot open for writing");
  out << text;
  if (!out) throw pulsar::io_error(path + ": write failed");
}

// Every command that writes a primary artifact drops a sibling manifest with
// the fully resolved configuration, so runs can be reproduced bit for bit.
void write_manifest(const std::string& primary_out, const std::string& command,
                    const ordered_json& options, const ordered_json& inputs,
                    const ordered_json& outputs) {
  ordered_json m;
  m["tool"] = tool_id();
  m["command"] = command;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  m["options"] = options;
  write_text(primary_out + ".manifest.json", m.dump(2) + "\n");
}

pulsar::SuiteConfig load_suite_arg(const std::string& ref) {
  if (ref == "standard") return pulsar::standard_suite();
  return pulsar::load_suite_file(ref);
}

pulsar::ScanOrder parse_scan_order(const std::string& s) {
  if (s == "row") return pulsar::ScanOrder::kRowMajor;
  if (s == "col") return pulsar::ScanOrder::kColumnMajor;
  throw std::invalid_argument("--scan-order must be 'row' or 'col'");
}

// ---------------------------------------------------------------- synth ----

struct SynthArgs {
  std::string scene_path;
  std::string suite_ref;
  int scene_index = 0;
  std::string out;
  int phi = 4;
  std::string scan_order = "row";
  // sensor / pulse overrides (negative = keep source default)
  int channels = -1, azimuth_bins = -1, time_bins = -1;
  double bin_ns = -1, sigma_ns = -1, gamma = -1;
};

int cmd_synth(const SynthArgs& a) {
  pulsar::SensorConfig sc;
  pulsar::PulseModel pm;
  pulsar::SceneSpec scene;

  if (!a.suite_ref.empty()) {
    pulsar::SuiteConfig suite = load_suite_arg(a.suite_ref);
    if (a.scene_index < 0 || std::size_t(a.scene_index) >= suite.scenes.size())
      throw std::invalid_argument("--scene-index out of range; suite has " +
                                  std::to_string(suite.scenes.size()) + " scenes");
    sc = suite.sensor;
    pm = suite.pulse;
    scene = suite.scenes[std::size_t(a.scene_index)];
  } else {
    std::ifstream in(a.scene_path);
    if (!in) throw pulsar::io_error(a.scene_path + ": cannot open");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& ex) {
      throw pulsar::io_error(a.scene_path + ": " + ex.what());
    }
    try {
      scene = pulsar::parse_scene(j);
    } catch (const json::exception& ex) {
      throw pulsar::io_error(a.scene_path + ": malformed scene: " + ex.what());
    }
  }

  if (a.channels > 0) sc.channels = a.channels;
  if (a.azimuth_bins > 0) sc.azimuth_bins = a.azimuth_bins;
  if (a.time_bins > 0) sc.time_bins = a.time_bins;
  if (a.bin_ns > 0) sc.bin_duration_ns = float(a.bin_ns);
  if (a.sigma_ns > 0) pm.sigma_ns = a.sigma_ns;
  if (a.gamma > 0) pm.amplitude_scale = a.gamma;

  pulsar::RangeImage ri = pulsar::gen_synthetic_scene(scene, sc);
  pulsar::ScanTimingMatrix tm =
      pulsar::build_timing_matrix(sc, a.phi, parse_scan_order(a.scan_order));
  pulsar::WaveformTensor w = pulsar::synthesize_benign(ri, pm, sc);
  pulsar::write_waveform(a.out, w, tm);

  ordered_json options{{"phi", a.phi},
                       {"scan_order", a.scan_order},
                       {"channels", sc.channels},
                       {"azimuth_bins", sc.azimuth_bins},
                       {"time_bins", sc.time_bins},
                       {"bin_duration_ns", sc.bin_duration_ns},
                       {"sigma_ns", pm.sigma_ns},
                       {"amplitude_scale", pm.amplitude_scale},
                       {"scene_seed", scene.seed}};
  ordered_json inputs = ordered_json::object();
  if (!a.suite_ref.empty()) {
    inputs["suite"] = a.suite_ref;
    inputs["scene_index"] = a.scene_index;
  } else {
    inputs["scene"] = a.scene_path;
  }
  write_manifest(a.out, "synth", options, inputs, {{"waveform", a.out}});
  std::cerr << "synth: " << ri.present_count() << " returns over "
            << sc.direction_count() << " directions -> " << a.out << "\n";
  return 0;
}

// --------------------------------------------------------------- attack ----

struct AttackArgs {
  std::string in, out, gt_mask;
  double freq_mhz = -1, interval_ns = -1;
  double amp_min = 3.0, amp_max = 8.0;
  double jitter_ns = 20.0;
  double sector_deg = 45.0;
  double noise_std = 0.05;
  std::uint64_t seed = 0;
  int phi = -1;
  std::string scan_order = "row";
  double sigma_ns = 2.0, gamma = 1.0, peak_threshold = 0.25;
};

int cmd_attack(const AttackArgs& a) {
  pulsar::WaveformFile benign = pulsar::read_waveform(a.in);
  const pulsar::SensorConfig& sc = benign.tensor.sensor();

  pulsar::ScanTimingMatrix tm = a.phi > 0
      ? pulsar::build_timing_matrix(sc, a.phi, parse_scan_order(a.scan_order))
      : benign.timing;

  pulsar::AttackConfig ac;
  if (a.freq_mhz > 0 && a.interval_ns > 0)
    throw std::invalid_argument("--freq-mhz and --interval-ns are mutually exclusive");
  if (a.freq_mhz > 0) ac.pulse_interval_ns = 1000.0 / a.freq_mhz;
  else if (a.interval_ns > 0) ac.pulse_interval_ns = a.interval_ns;
  ac.amplitude_min = a.amp_min;
  ac.amplitude_max = a.amp_max;
  ac.jitter_bound_ns = a.jitter_ns;
  ac.sector_lo_deg = -a.sector_deg;
  ac.sector_hi_deg = a.sector_deg;
  ac.seed = a.seed;

  pulsar::PulseModel pm{a.sigma_ns, a.gamma};
  pulsar::NoiseConfig nc{a.noise_std, pulsar::rng::key(a.seed, 1)};

  pulsar::AttackTrain train = pulsar::generate_attack_train(tm, ac, pm, sc);
  pulsar::WaveformTensor attacked = pulsar::inject(benign.tensor, train.waveform, nc);
  pulsar::write_waveform(a.out, attacked, tm);

  if (!a.gt_mask.empty()) {
    pulsar::RangeImage ri =
        pulsar::peak_detect(benign.tensor, pm, float(a.peak_threshold));
    pulsar::SegMask gt = pulsar::label_ground_truth(ri, train, tm, pm, sc);
    pulsar::write_mask(a.gt_mask, gt, &tm, sc.bin_duration_ns);
    pulsar::SectorDeg sector{ac.sector_lo_deg, ac.sector_hi_deg};
    std::cerr << "attack: success rate "
              << pulsar::attack_success_rate(attacked, gt, sector)
              << "% over the sector\n";
  }

  ordered_json options{{"pulse_interval_ns", ac.pulse_interval_ns},
                       {"pulse_count", ac.pulse_count(sc)},
                       {"amplitude", {ac.amplitude_min, ac.amplitude_max}},
                       {"jitter_bound_ns", ac.jitter_bound_ns},
                       {"sector_deg", {ac.sector_lo_deg, ac.sector_hi_deg}},
                       {"noise_std", a.noise_std},
                       {"seed", a.seed},
                       {"phi", tm.group_size},
                       {"timing_rebuilt", a.phi > 0},
                       {"sigma_ns", a.sigma_ns},
                       {"amplitude_scale", a.gamma},
                       {"peak_threshold", a.peak_threshold}};
  ordered_json outputs{{"waveform", a.out}};
  outputs["gt_mask"] = a.gt_mask.empty() ? ordered_json(nullptr) : ordered_json(a.gt_mask);
  write_manifest(a.out, "attack", options, {{"waveform", a.in}}, outputs);
  std::cerr << "attack: " << ac.pulse_count(sc) << " pulses per window -> "
            << a.out << "\n";
  return 0;
}

// --------------------------------------------------------------- defend ----

struct DefendArgs {
  std::string in, method_text = "none";
  std::string mask;  // ground-truth or external mask input
  std::string out_points, out_waveform, out_mask;
  double theta_min = 1.0;
  int guard_bins = -1;
  double ror_radius = 0.05;
  int ror_min_neighbors = 1;
  int sor_k = 20;
  double sor_ratio = 2.0;
  double sigma_ns = 2.0, gamma = 1.0, peak_threshold = 0.25;
};

int cmd_defend(const DefendArgs& a) {
  pulsar::WaveformFile file = pulsar::read_waveform(a.in);
  const pulsar::SensorConfig& sc = file.tensor.sensor();
  pulsar::PulseModel pm{a.sigma_ns, a.gamma};

  pulsar::DefenseMethod method = pulsar::DefenseMethod::parse(a.method_text);
  method.theta_min = float(a.theta_min);
  method.guard_bins = a.guard_bins;
  method.ror_radius_m = a.ror_radius;
  method.ror_min_neighbors = a.ror_min_neighbors;
  method.sor_k = a.sor_k;
  method.sor_std_ratio = a.sor_ratio;

  std::optional<pulsar::SegMask> pred_mask;
  std::optional<pulsar::WaveformTensor> defended;
  std::vector<pulsar::Point3D> points;

  switch (method.kind) {
    case pulsar::DefenseMethod::Kind::kNone:
      defended = file.tensor;
      break;
    case pulsar::DefenseMethod::Kind::kAvgSubtract:
      defended = pulsar::avg_subtract(file.tensor, file.timing);
      break;
    case pulsar::DefenseMethod::Kind::kCoherence:
      pred_mask = pulsar::coherence_mask(file.tensor, file.timing,
                                         method.theta_min, method.guard_bins);
      break;
    case pulsar::DefenseMethod::Kind::kOracleMask:
      if (a.mask.empty())
        throw std::invalid_argument("--method oracle requires --mask with ground-truth labels");
      [[fallthrough]];
    case pulsar::DefenseMethod::Kind::kExternalMask: {
      std::string path = method.kind == pulsar::DefenseMethod::Kind::kExternalMask
                             ? method.mask_path
                             : a.mask;
      pulsar::MaskFile mf = pulsar::read_mask(path);
      pulsar::SegMask m = std::move(mf.mask);
      if (m.channels() != sc.channels || m.azimuth_bins() != sc.azimuth_bins ||
          m.time_bins() != sc.time_bins)
        m = pulsar::resize_mask(m, sc.channels, sc.azimuth_bins, sc.time_bins);
      pred_mask = std::move(m);
      break;
    }
    case pulsar::DefenseMethod::Kind::kRor:
    case pulsar::DefenseMethod::Kind::kSor: {
      pulsar::RangeImage detected =
          pulsar::peak_detect(file.tensor, pm, float(a.peak_threshold));
      std::vector<pulsar::Point3D> pts = pulsar::range_image_to_points(detected, sc);
      points = method.kind == pulsar::DefenseMethod::Kind::kRor
                   ? pulsar::ror_filter(pts, method.ror_radius_m,
                                        method.ror_min_neighbors)
                   : pulsar::sor_filter(pts, method.sor_k, method.sor_std_ratio);
      break;
    }
  }

  if (pred_mask) defended = pulsar::apply_mask(file.tensor, *pred_mask);
  if (defended && points.empty()) {
    pulsar::RangeImage recovered =
        pulsar::peak_detect(*defended, pm, float(a.peak_threshold));
    points = pulsar::range_image_to_points(recovered, sc);
  }

  pulsar::write_pointcloud_bin(a.out_points, points);
  if (!a.out_waveform.empty()) {
    if (!defended)
      throw std::invalid_argument("--out-waveform is not available for point-domain defenses");
    pulsar::write_waveform(a.out_waveform, *defended, file.timing);
  }
  if (!a.out_mask.empty()) {
    if (!pred_mask)
      throw std::invalid_argument("--out-mask requires a mask-producing defense");
    pulsar::write_mask(a.out_mask, *pred_mask, &file.timing, sc.bin_duration_ns);
  }

  ordered_json options{{"method", method.name()},
                       {"theta_min", method.theta_min},
                       {"guard_bins", method.guard_bins},
                       {"ror_radius_m", method.ror_radius_m},
                       {"ror_min_neighbors", method.ror_min_neighbors},
                       {"sor_k", method.sor_k},
                       {"sor_std_ratio", method.sor_std_ratio},
                       {"sigma_ns", a.sigma_ns},
                       {"amplitude_scale", a.gamma},
                       {"peak_threshold", a.peak_threshold}};
  ordered_json inputs{{"waveform", a.in}};
  inputs["mask"] = a.mask.empty() ? ordered_json(nullptr) : ordered_json(a.mask);
  ordered_json outputs{{"points", a.out_points}};
  outputs["waveform"] = a.out_waveform.empty() ? ordered_json(nullptr)
                                               : ordered_json(a.out_waveform);
  outputs["mask"] = a.out_mask.empty() ? ordered_json(nullptr)
                                       : ordered_json(a.out_mask);
  write_manifest(a.out_points, "defend", options, inputs, outputs);
  std::cerr << "defend(" << method.name() << "): " << points.size()
            << " points -> " << a.out_points << "\n";
  return 0;
}

// ----------------------------------------------------------------- eval ----

struct EvalArgs {
  std::string benign, recovered_points, defended_waveform;
  std::string gt_mask, pred_mask;
  std::string out;
  std::string method_label = "evaluated";
  double sector_deg = 45.0;
  double threshold_m = 0.5;
  double sigma_ns = 2.0, gamma = 1.0, peak_threshold = 0.25;
};

int cmd_eval(const EvalArgs& a) {
  if (a.recovered_points.empty() == a.defended_waveform.empty())
    throw std::invalid_argument("eval needs exactly one of --points or --defended");

  pulsar::WaveformFile benign = pulsar::read_waveform(a.benign);
  const pulsar::SensorConfig& sc = benign.tensor.sensor();
  pulsar::PulseModel pm{a.sigma_ns, a.gamma};
  pulsar::SectorDeg sector{-a.sector_deg, a.sector_deg};

  pulsar::RangeImage benign_ri =
      pulsar::peak_detect(benign.tensor, pm, float(a.peak_threshold));

  pulsar::RangeImage recovered;
  std::optional<pulsar::WaveformTensor> defended;
  if (!a.defended_waveform.empty()) {
    pulsar::WaveformFile df = pulsar::read_waveform(a.defended_waveform);
    if (!df.tensor.same_shape(benign.tensor))
      throw std::invalid_argument("eval: defended waveform shape differs from benign reference");
    recovered = pulsar::peak_detect(df.tensor, pm, float(a.peak_threshold));
    defended = std::move(df.tensor);
  } else {
    std::vector<pulsar::Point3D> pts =
        pulsar::load_pointcloud_bin(a.recovered_points);
    recovered = pulsar::project_to_range_image(pts, sc, pulsar::KeepRule::kNearest);
  }

  std::optional<pulsar::SegMask> gt;
  if (!a.gt_mask.empty()) {
    pulsar::MaskFile mf = pulsar::read_mask(a.gt_mask);
    if (mf.mask.channels() != sc.channels ||
        mf.mask.azimuth_bins() != sc.azimuth_bins ||
        mf.mask.time_bins() != sc.time_bins)
      throw std::invalid_argument("eval: ground-truth mask shape differs from benign reference");
    gt = std::move(mf.mask);
  }

  pulsar::DefenseEntry entry;
  entry.method = a.method_label;
  entry.accuracy = pulsar::point_recovery_accuracy(
      benign_ri, recovered, sc, sector, a.threshold_m, &entry.counts);
  entry.has_accuracy = true;
  if (gt && defended) {
    entry.attack_success = pulsar::attack_success_rate(*defended, *gt, sector);
    entry.has_attack_success = true;
  }
  if (gt && !a.pred_mask.empty()) {
    pulsar::MaskFile pf = pulsar::read_mask(a.pred_mask);
    pulsar::SegMask pred = std::move(pf.mask);
    if (!pred.same_shape(*gt))
      pred = pulsar::resize_mask(pred, gt->channels(), gt->azimuth_bins(),
                                 gt->time_bins());
    entry.object_iou = pulsar::mask_iou(pred, *gt, pulsar::SegMask::kObject);
    entry.attack_iou = pulsar::mask_iou(pred, *gt, pulsar::SegMask::kAttack);
    entry.has_iou = true;
  }

  pulsar::RecoveryReport report;
  report.tool = tool_id();
  report.config = ordered_json{{"benign", a.benign},
                               {"points", a.recovered_points.empty()
                                              ? ordered_json(nullptr)
                                              : ordered_json(a.recovered_points)},
                               {"defended", a.defended_waveform.empty()
                                                ? ordered_json(nullptr)
                                                : ordered_json(a.defended_waveform)},
                               {"gt_mask", a.gt_mask.empty() ? ordered_json(nullptr)
                                                             : ordered_json(a.gt_mask)},
                               {"pred_mask", a.pred_mask.empty()
                                                 ? ordered_json(nullptr)
                                                 : ordered_json(a.pred_mask)},
                               {"sector_deg", {sector.lo, sector.hi}},
                               {"threshold_m", a.threshold_m},
                               {"sigma_ns", a.sigma_ns},
                               {"amplitude_scale", a.gamma},
                               {"peak_threshold", a.peak_threshold}};
  report.entries.push_back(entry);

  write_text(a.out, pulsar::report_json(report));
  std::string csv_path = a.out + ".csv";
  write_text(csv_path, pulsar::report_csv(report));
  write_manifest(a.out, "eval", report.config, ordered_json::object(),
                 {{"report", a.out}, {"csv", csv_path}});
  std::cerr << "eval: accuracy " << entry.accuracy << "% ("
            << entry.counts.recovered << "/" << entry.counts.evaluated
            << ") -> " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- bench ----

struct BenchArgs {
  std::string suite_ref = "standard";
  std::vector<int> phis{1, 4, 5, 10, 25};
  std::vector<std::string> methods{"oracle", "coherence", "avg_subtract", "none"};
  std::uint64_t seed = 0;
  std::string out;
  std::string json_out;
};

int cmd_bench(const BenchArgs& a) {
  pulsar::SuiteConfig suite = load_suite_arg(a.suite_ref);
  std::vector<pulsar::DefenseMethod> methods;
  for (const std::string& m : a.methods)
    methods.push_back(pulsar::DefenseMethod::parse(m));

  auto t0 = std::chrono::steady_clock::now();
  pulsar::BenchResult result = pulsar::run_bench(suite, a.phis, methods, a.seed);
  double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_text(a.out, pulsar::bench_csv(result));
  if (!a.json_out.empty())
    write_text(a.json_out, pulsar::bench_json(result).dump(2) + "\n");

  ordered_json options{{"suite", a.suite_ref},
                       {"suite_name", suite.name},
                       {"phis", a.phis},
                       {"methods", result.method_names},
                       {"seed", a.seed},
                       {"scenes", suite.scenes.size()}};
  ordered_json outputs{{"csv", a.out}};
  outputs["json"] = a.json_out.empty() ? ordered_json(nullptr)
                                       : ordered_json(a.json_out);
  write_manifest(a.out, "bench", options, ordered_json::object(), outputs);

  // Wall-clock timing is human-facing only; files stay byte-reproducible.
  std::cerr << "bench: " << suite.scenes.size() << " scenes x " << a.phis.size()
            << " group sizes in " << total << " s -> " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"full-waveform lidar spoofing simulator and defense toolkit"};
  app.set_version_flag("--version", tool_id());
  app.require_subcommand(1);

  SynthArgs sa;
  CLI::App* synth = app.add_subcommand("synth", "render a benign waveform cube from a scene");
  auto* opt_scene = synth->add_option("--scene", sa.scene_path, "scene spec JSON file");
  auto* opt_suite = synth->add_option("--suite", sa.suite_ref, "suite name ('standard') or JSON path");
  synth->add_option("--scene-index", sa.scene_index, "scene index within --suite")->needs(opt_suite);
  opt_scene->excludes(opt_suite);
  synth->add_option("--out", sa.out, "output waveform (.pwfm)")->required();
  synth->add_option("--phi", sa.phi, "emission group size")->check(CLI::PositiveNumber);
  synth->add_option("--scan-order", sa.scan_order, "timestamp order: row|col");
  synth->add_option("--channels", sa.channels, "vertical channels");
  synth->add_option("--azimuth-bins", sa.azimuth_bins, "azimuth bins");
  synth->add_option("--time-bins", sa.time_bins, "time bins per direction");
  synth->add_option("--bin-ns", sa.bin_ns, "time bin duration in ns");
  synth->add_option("--sigma-ns", sa.sigma_ns, "pulse width sigma in ns");
  synth->add_option("--gamma", sa.gamma, "intensity-to-amplitude scale");

  AttackArgs aa;
  CLI::App* attack = app.add_subcommand("attack", "inject a spoofing pulse train plus noise");
  attack->add_option("--in", aa.in, "benign waveform (.pwfm)")->required();
  attack->add_option("--out", aa.out, "attacked waveform (.pwfm)")->required();
  auto* opt_freq = attack->add_option("--freq-mhz", aa.freq_mhz, "emitter frequency (MHz)");
  attack->add_option("--interval-ns", aa.interval_ns, "emitter pulse interval (ns)")->excludes(opt_freq);
  attack->add_option("--amp-min", aa.amp_min, "min spoof amplitude");
  attack->add_option("--amp-max", aa.amp_max, "max spoof amplitude");
  attack->add_option("--jitter-ns", aa.jitter_ns, "timing jitter bound (ns)");
  attack->add_option("--sector-deg", aa.sector_deg, "attacked sector half-width about +x (deg)");
  attack->add_option("--noise-std", aa.noise_std, "additive noise sigma");
  attack->add_option("--seed", aa.seed, "attack and noise seed");
  attack->add_option("--phi", aa.phi, "rebuild the timing matrix with this group size")->check(CLI::PositiveNumber);
  attack->add_option("--scan-order", aa.scan_order, "timestamp order when rebuilding: row|col");
  attack->add_option("--gt-mask", aa.gt_mask, "also write ground-truth labels (.pmsk)");
  attack->add_option("--sigma-ns", aa.sigma_ns, "pulse width sigma in ns");
  attack->add_option("--gamma", aa.gamma, "intensity-to-amplitude scale");
  attack->add_option("--peak-threshold", aa.peak_threshold, "detection threshold for labeling");

  DefendArgs da;
  CLI::App* defend = app.add_subcommand("defend", "apply a defense and emit recovered points");
  defend->add_option("--in", da.in, "attacked waveform (.pwfm)")->required();
  defend->add_option("--method", da.method_text,
                     "none|oracle|avg_subtract|coherence|ror|sor|mask:<path>");
  defend->add_option("--mask", da.mask, "ground-truth mask for --method oracle (.pmsk)");
  defend->add_option("--out-points", da.out_points, "recovered point cloud (.bin)")->required();
  defend->add_option("--out-waveform", da.out_waveform, "defended waveform (.pwfm)");
  defend->add_option("--out-mask", da.out_mask, "predicted mask (.pmsk)");
  defend->add_option("--theta-min", da.theta_min, "coherence amplitude floor");
  defend->add_option("--guard-bins", da.guard_bins, "coherence dilation half-width (bins)");
  defend->add_option("--ror-radius", da.ror_radius, "radius filter radius (m)");
  defend->add_option("--ror-min-neighbors", da.ror_min_neighbors, "radius filter neighbor floor");
  defend->add_option("--sor-k", da.sor_k, "statistical filter neighbor count");
  defend->add_option("--sor-ratio", da.sor_ratio, "statistical filter std ratio");
  defend->add_option("--sigma-ns", da.sigma_ns, "pulse width sigma in ns");
  defend->add_option("--gamma", da.gamma, "intensity-to-amplitude scale");
  defend->add_option("--peak-threshold", da.peak_threshold, "detection threshold");

  EvalArgs ea;
  CLI::App* eval = app.add_subcommand("eval", "score a recovery against the benign reference");
  eval->add_option("--benign", ea.benign, "benign waveform (.pwfm)")->required();
  eval->add_option("--points", ea.recovered_points, "recovered point cloud (.bin)");
  eval->add_option("--defended", ea.defended_waveform, "defended waveform (.pwfm)");
  eval->add_option("--gt-mask", ea.gt_mask, "ground-truth labels (.pmsk)");
  eval->add_option("--pred-mask", ea.pred_mask, "predicted labels (.pmsk)");
  eval->add_option("--out", ea.out, "report JSON path (CSV written alongside)")->required();
  eval->add_option("--label", ea.method_label, "method label recorded in the report");
  eval->add_option("--sector-deg", ea.sector_deg, "evaluated sector half-width (deg)");
  eval->add_option("--threshold-m", ea.threshold_m, "recovery distance tolerance (m)");
  eval->add_option("--sigma-ns", ea.sigma_ns, "pulse width sigma in ns");
  eval->add_option("--gamma", ea.gamma, "intensity-to-amplitude scale");
  eval->add_option("--peak-threshold", ea.peak_threshold, "detection threshold");

  BenchArgs ba;
  CLI::App* bench = app.add_subcommand("bench", "sweep group sizes x defenses over a suite");
  bench->add_option("--suite", ba.suite_ref, "suite name ('standard') or JSON path");
  bench->add_option("--phis", ba.phis, "group sizes to sweep")->delimiter(',');
  bench->add_option("--methods", ba.methods, "defenses to compare")->delimiter(',');
  bench->add_option("--seed", ba.seed, "suite-level seed");
  bench->add_option("--out", ba.out, "summary CSV path")->required();
  bench->add_option("--json", ba.json_out, "full per-scene results JSON path");

  try {
    app.parse(argc, argv);
    if (*synth) {
      if (sa.scene_path.empty() && sa.suite_ref.empty())
        throw std::invalid_argument("synth needs --scene or --suite");
      return cmd_synth(sa);
    }
    if (*attack) return cmd_attack(aa);
    if (*defend) return cmd_defend(da);
    if (*eval) return cmd_eval(ea);
    if (*bench) return cmd_bench(ba);
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pulsar::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const pulsar::metric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
