#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "latticelab/asymptotics.hpp"
#include "latticelab/montecarlo.hpp"

namespace latticelab {

const char* version();

struct StudyConfig {
  std::string name;
  std::string formula_id;
  ScheduleSpec schedule;
  TrendRule rule;
  double bound_slack = 0.5;
};

struct McStudyConfig {
  long x = 1, n = 64, trials = 100000;
  McFunctionals functionals;
  double z_max = 4;  // |mean - truth| <= z_max SE
};

// One JSON document:
// {
//   "name": "demo",
//   "law": {"atoms": [[-2, 0.3333333333333333], [1, 0.6666666666666666]]}
//          | {"family": {"name": "simple" | "light" | "heavy_tail", "beta": .., "cutoff": ..}}
//          | {"file": "law.json"},
//   "set": "0,3",
//   "context": {"range": 64, "M": 4},
//   "studies": [{"name": "s1", "formula": "generic",
//                "schedule": {"kind": "fixed" | "sqrt" | "opposite", "x": 5, "y": 2,
//                             "cx": 0.25, "cy": 0.25, "log2": [6, 12]},
//                "tol": 0.1, "band_points": 3, "slack": 0.1, "bound_slack": 0.5}],
//   "monte_carlo": {"x": 3, "n": 64, "trials": 100000, "endpoint": false, "sigma_time": true,
//                   "sigma_site": true, "escape": [16], "conditional": [[2, 1]], "z_max": 4},
//   "invariants": true,
//   "output": {"dir": "out", "format": "csv"},
//   "seed": 1
// }
struct ExperimentConfig {
  std::string name = "experiment";
  IncrementLaw law;
  std::string set_spec;
  KillingSet A = KillingSet::finite({0});
  ContextOptions context;
  std::vector<StudyConfig> studies;
  std::optional<McStudyConfig> monte_carlo;
  bool invariants = true;
  std::string out_dir = ".";
  std::string format = "csv";
  std::uint64_t seed = 1;

  std::string canonical;  // canonical dump of the input document
  std::uint64_t hash = 0;  // FNV-1a of `canonical`
};

// ConfigError (UnknownFormula for an undefined formula id). Relative "file"
// paths resolve against base_dir.
ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

// A bare "schedule" object, as in a study entry. ConfigError.
ScheduleSpec parse_schedule_spec(const std::string& json_text);

struct InvariantResult {
  std::string name;
  double residual = 0;
  double tol = 0;
  bool pass = false;
};

// Identity and harmonicity checks on a built context.
std::vector<InvariantResult> invariant_suite(const AsymptoticContext& ctx);

struct McRow {
  std::string key;
  double mean = 0, std_error = 0, truth = 0;
  long trials = 0;
  bool pass = false;
};

struct Report {
  std::string name;
  std::string version;
  std::string config_hash;  // 16 hex digits
  std::vector<StudyResult> studies;
  std::vector<std::string> study_names;
  std::vector<InvariantResult> invariants;
  std::vector<McRow> monte_carlo;
  bool pass = false;

  int exit_code() const { return pass ? 0 : 2; }
};

Report run_config(const ExperimentConfig& config);

// Study table body, header "n,x,y,exact,predicted,ratio,flags".
std::string study_csv(const StudyResult& study);
std::string report_json(const Report& report);
Report report_from_json(const std::string& text);

// Writes <dir>/<study>.csv, invariants.csv, monte_carlo.csv and stamp.json for
// "csv", or <dir>/report.json for "json". Returns the paths. IoFailure.
std::vector<std::string> emit_report(const Report& report, const std::string& dir, const std::string& format);

}  // namespace latticelab
