#include "pulsar/suite.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "pulsar/rng.hpp"
#include "pulsar/version.hpp"
#include "pulsar/waveform.hpp"

namespace pulsar {

namespace {

using json = nlohmann::json;

void read_triplet(const json& j, float out[3], const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw std::invalid_argument(std::string("suite: ") + what +
                                " must be an array of 3 numbers");
  for (int a = 0; a < 3; ++a) out[a] = j[a].get<float>();
}

}  // namespace

SceneSpec parse_scene(const json& j) {
  SceneSpec s;
  s.seed = j.value("seed", std::uint64_t(0));
  if (j.contains("intensity_range")) {
    const json& r = j.at("intensity_range");
    s.intensity_min = r.at(0).get<float>();
    s.intensity_max = r.at(1).get<float>();
  }
  if (j.contains("background")) {
    std::string bg = j.at("background").get<std::string>();
    if (bg == "absent") s.background = Background::kAbsent;
    else if (bg == "max_range") s.background = Background::kMaxRange;
    else throw std::invalid_argument("suite: background must be 'absent' or 'max_range'");
  }
  s.background_intensity = j.value("background_intensity", s.background_intensity);
  if (j.contains("ground")) {
    s.has_ground = true;
    s.ground_height = j.at("ground").value("height", s.ground_height);
    s.ground_intensity = j.at("ground").value("intensity", s.ground_intensity);
  }
  for (const json& b : j.value("boxes", json::array())) {
    BoxSpec box;
    read_triplet(b.at("center"), box.center, "box center");
    read_triplet(b.at("size"), box.size, "box size");
    box.intensity = b.value("intensity", -1.0f);
    s.boxes.push_back(box);
  }
  for (const json& w : j.value("walls", json::array())) {
    WallSpec wall;
    const json& from = w.at("from");
    const json& to = w.at("to");
    wall.x1 = from.at(0).get<float>();
    wall.y1 = from.at(1).get<float>();
    wall.x2 = to.at(0).get<float>();
    wall.y2 = to.at(1).get<float>();
    wall.z_base = w.value("z_base", 0.0f);
    wall.height = w.value("height", 1.0f);
    wall.intensity = w.value("intensity", -1.0f);
    s.walls.push_back(wall);
  }
  s.validate();
  return s;
}

SuiteConfig parse_suite(const json& j) {
  SuiteConfig suite;
  suite.name = j.value("name", "unnamed");

  if (j.contains("sensor")) {
    const json& s = j.at("sensor");
    suite.sensor.channels = s.value("channels", suite.sensor.channels);
    suite.sensor.azimuth_bins = s.value("azimuth_bins", suite.sensor.azimuth_bins);
    suite.sensor.time_bins = s.value("time_bins", suite.sensor.time_bins);
    suite.sensor.bin_duration_ns = s.value("bin_duration_ns", suite.sensor.bin_duration_ns);
    if (s.contains("vertical_fov_deg")) {
      suite.sensor.vertical_fov_lo_deg = s.at("vertical_fov_deg").at(0).get<float>();
      suite.sensor.vertical_fov_hi_deg = s.at("vertical_fov_deg").at(1).get<float>();
    }
  }
  suite.sensor.validate();

  if (j.contains("pulse")) {
    const json& p = j.at("pulse");
    suite.pulse.sigma_ns = p.value("sigma_ns", suite.pulse.sigma_ns);
    suite.pulse.amplitude_scale = p.value("amplitude_scale", suite.pulse.amplitude_scale);
  }
  suite.pulse.validate();

  if (j.contains("attack")) {
    const json& a = j.at("attack");
    suite.attack.pulse_interval_ns =
        a.value("pulse_interval_ns", suite.attack.pulse_interval_ns);
    if (a.contains("amplitude")) {
      suite.attack.amplitude_min = a.at("amplitude").at(0).get<double>();
      suite.attack.amplitude_max = a.at("amplitude").at(1).get<double>();
    }
    suite.attack.jitter_bound_ns = a.value("jitter_bound_ns", suite.attack.jitter_bound_ns);
    if (a.contains("sector_deg")) {
      suite.attack.sector_lo_deg = a.at("sector_deg").at(0).get<double>();
      suite.attack.sector_hi_deg = a.at("sector_deg").at(1).get<double>();
    }
  }
  suite.attack.validate();

  suite.noise_std = j.value("noise_std", suite.noise_std);
  if (suite.noise_std < 0)
    throw std::invalid_argument("suite: noise_std must be >= 0");
  suite.peak_threshold = j.value("peak_threshold", suite.peak_threshold);
  suite.recovery_threshold_m = j.value("recovery_threshold_m", suite.recovery_threshold_m);

  if (!j.contains("scenes") || !j.at("scenes").is_array() || j.at("scenes").empty())
    throw std::invalid_argument("suite: needs a nonempty 'scenes' array");
  for (const json& s : j.at("scenes")) suite.scenes.push_back(parse_scene(s));
  return suite;
}

SuiteConfig load_suite_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw io_error(path + ": " + ex.what());
  }
  try {
    return parse_suite(j);
  } catch (const json::exception& ex) {
    throw io_error(path + ": malformed suite: " + ex.what());
  }
}

SuiteConfig standard_suite() {
  return parse_suite(json::parse(standard_suite_json()));
}

BenchResult run_bench(const SuiteConfig& suite, const std::vector<int>& phis,
                      const std::vector<DefenseMethod>& methods,
                      std::uint64_t seed) {
  if (phis.empty())
    throw std::invalid_argument("run_bench: need at least one group size");
  for (int phi : phis)
    if (phi <= 0) throw std::invalid_argument("run_bench: group sizes must be >= 1");
  if (methods.empty())
    throw std::invalid_argument("run_bench: need at least one defense");

  BenchResult result;
  result.suite = suite.name;
  result.phis = phis;
  for (const DefenseMethod& m : methods) result.method_names.push_back(m.name());

  SectorDeg sector{suite.attack.sector_lo_deg, suite.attack.sector_hi_deg};

  for (const SceneSpec& scene : suite.scenes) {
    BenchSceneResult sr;
    sr.seed = scene.seed;

    RangeImage ri = gen_synthetic_scene(scene, suite.sensor);
    WaveformTensor benign = synthesize_benign(ri, suite.pulse, suite.sensor);

    for (int phi : phis) {
      BenchPhiResult pr;
      pr.phi = phi;
      pr.per_method.resize(methods.size());

      ScanTimingMatrix tm = build_timing_matrix(suite.sensor, phi);
      AttackConfig ac = suite.attack;
      ac.seed = rng::key(seed, scene.seed);
      NoiseConfig nc{suite.noise_std, rng::key(seed, scene.seed, 1)};

      auto t0 = std::chrono::steady_clock::now();
      AttackTrain train = generate_attack_train(tm, ac, suite.pulse, suite.sensor);
      WaveformTensor attacked = inject(benign, train.waveform, nc);
      SegMask gt = label_ground_truth(ri, train, tm, suite.pulse, suite.sensor);
      pr.attack_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      train = AttackTrain{};  // the labels carry everything downstream needs

      pr.attack_success_rate = attack_success_rate(attacked, gt, sector);

      // Group size 1 leaves avg_subtract without a cross-member mean, which
      // the sweep reports as an undefined cell rather than a zero.
      std::vector<DefenseMethod> runnable;
      std::vector<std::size_t> slot;
      for (std::size_t m = 0; m < methods.size(); ++m) {
        if (methods[m].kind == DefenseMethod::Kind::kAvgSubtract && phi == 1) {
          pr.per_method[m].error = "undefined for group size 1";
          continue;
        }
        runnable.push_back(methods[m]);
        slot.push_back(m);
      }

      ReportInputs in;
      in.attacked = &attacked;
      in.timing = &tm;
      in.benign = &ri;
      in.ground_truth = &gt;
      in.pulse = suite.pulse;
      in.peak_threshold = suite.peak_threshold;
      in.sector = sector;
      in.threshold_m = suite.recovery_threshold_m;
      RecoveryReport rep = build_report(in, runnable);
      for (std::size_t r = 0; r < rep.entries.size(); ++r) {
        BenchCell& cell = pr.per_method[slot[r]];
        cell.defined = rep.entries[r].has_accuracy;
        cell.accuracy = rep.entries[r].accuracy;
        cell.error = rep.entries[r].error;
      }
      sr.per_phi.push_back(std::move(pr));
    }
    result.scenes.push_back(std::move(sr));
  }
  return result;
}

namespace {

// Mean over scenes; undefined when no scene produced a value.
BenchCell aggregate_cell(const BenchResult& r, std::size_t phi_idx,
                         std::size_t method_idx) {
  BenchCell out;
  double sum = 0.0;
  std::size_t n = 0;
  for (const BenchSceneResult& sr : r.scenes) {
    const BenchCell& c = sr.per_phi[phi_idx].per_method[method_idx];
    if (!c.defined) {
      if (out.error.empty()) out.error = c.error;
      continue;
    }
    sum += c.accuracy;
    ++n;
  }
  if (n > 0) {
    out.defined = true;
    out.accuracy = sum / double(n);
    out.error.clear();
  }
  return out;
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string bench_csv(const BenchResult& r) {
  std::string csv = "phi";
  for (const std::string& m : r.method_names) csv += "," + m;
  csv += ",attack_success_rate\n";
  for (std::size_t p = 0; p < r.phis.size(); ++p) {
    csv += std::to_string(r.phis[p]);
    for (std::size_t m = 0; m < r.method_names.size(); ++m) {
      BenchCell cell = aggregate_cell(r, p, m);
      csv += ',';
      csv += cell.defined ? fmt2(cell.accuracy) : "-";
    }
    double asr = 0.0;
    for (const BenchSceneResult& sr : r.scenes)
      asr += sr.per_phi[p].attack_success_rate;
    csv += ',' + fmt2(asr / double(r.scenes.size())) + '\n';
  }
  return csv;
}

nlohmann::ordered_json bench_json(const BenchResult& r) {
  nlohmann::ordered_json j;
  j["tool"] = std::string(kToolName) + " " + kToolVersion;
  j["suite"] = r.suite;
  j["phis"] = r.phis;
  j["methods"] = r.method_names;

  auto cell_value = [](const BenchCell& c) {
    return c.defined ? nlohmann::ordered_json(c.accuracy)
                     : nlohmann::ordered_json(nullptr);
  };

  j["mean"] = nlohmann::ordered_json::array();
  for (std::size_t p = 0; p < r.phis.size(); ++p) {
    nlohmann::ordered_json row;
    row["phi"] = r.phis[p];
    double asr = 0.0;
    for (const BenchSceneResult& sr : r.scenes)
      asr += sr.per_phi[p].attack_success_rate;
    row["attack_success_rate"] = asr / double(r.scenes.size());
    nlohmann::ordered_json cells = nlohmann::ordered_json::object();
    for (std::size_t m = 0; m < r.method_names.size(); ++m)
      cells[r.method_names[m]] = cell_value(aggregate_cell(r, p, m));
    row["accuracy"] = cells;
    j["mean"].push_back(row);
  }

  j["scenes"] = nlohmann::ordered_json::array();
  for (const BenchSceneResult& sr : r.scenes) {
    nlohmann::ordered_json sj;
    sj["seed"] = sr.seed;
    sj["rows"] = nlohmann::ordered_json::array();
    for (const BenchPhiResult& pr : sr.per_phi) {
      nlohmann::ordered_json row;
      row["phi"] = pr.phi;
      row["attack_success_rate"] = pr.attack_success_rate;
      nlohmann::ordered_json cells = nlohmann::ordered_json::object();
      for (std::size_t m = 0; m < r.method_names.size(); ++m)
        cells[r.method_names[m]] = cell_value(pr.per_method[m]);
      row["accuracy"] = cells;
      sj["rows"].push_back(row);
    }
    j["scenes"].push_back(sj);
  }
  return j;
}

}  // namespace pulsar
