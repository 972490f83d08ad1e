#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pulsar/attack.hpp"
#include "pulsar/metrics.hpp"
#include "pulsar/scene.hpp"
#include "pulsar/types.hpp"

namespace pulsar {

/// A named set of scenes plus the sensor, pulse and attack parameters they
/// are evaluated under.
struct SuiteConfig {
  std::string name;
  SensorConfig sensor;
  PulseModel pulse;
  AttackConfig attack;
  double noise_std = 0.05;
  float peak_threshold = 0.25f;
  double recovery_threshold_m = 0.5;
  std::vector<SceneSpec> scenes;
};

/// The versioned benchmark suite compiled into the binary (mirrors
/// configs/standard_suite.json in the source tree).
const char* standard_suite_json();

SuiteConfig parse_suite(const nlohmann::json& j);
SuiteConfig load_suite_file(const std::string& path);
SuiteConfig standard_suite();

/// Scene JSON also serves single-scene synthesis; exposed for the CLI.
SceneSpec parse_scene(const nlohmann::json& j);

struct BenchCell {
  double accuracy = 0.0;
  bool defined = false;
  std::string error;
};

struct BenchPhiResult {
  int phi = 0;
  double attack_success_rate = 0.0;  // undefended, percent
  double attack_seconds = 0.0;       // train + inject + labels wall time
  std::vector<BenchCell> per_method;
};

struct BenchSceneResult {
  std::uint64_t seed = 0;
  std::vector<BenchPhiResult> per_phi;
};

struct BenchResult {
  std::string suite;
  std::vector<int> phis;
  std::vector<std::string> method_names;
  std::vector<BenchSceneResult> scenes;
};

/// Runs the suite across group sizes and defenses. Per-scene attack and
/// noise streams derive from (seed, scene.seed), so results do not depend on
/// scene order, thread count or which phis are requested together. Failures
/// are recorded in their cell and the sweep continues.
BenchResult run_bench(const SuiteConfig& suite, const std::vector<int>& phis,
                      const std::vector<DefenseMethod>& methods,
                      std::uint64_t seed);

/// Mean accuracy over scenes, one row per phi, one column per method;
/// undefined cells print as "-".
std::string bench_csv(const BenchResult& r);

nlohmann::ordered_json bench_json(const BenchResult& r);

}  // namespace pulsar
