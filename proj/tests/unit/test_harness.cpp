#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "latticelab/error.hpp"
#include "latticelab/harness.hpp"
#include "latticelab/parallel.hpp"

using namespace latticelab;

namespace {

const char* kSimple = R"({
  "name": "simple",
  "law": {"family": "simple"},
  "set": "0",
  "context": {"range": 32},
  "studies": [{"name": "gen", "formula": "generic",
               "schedule": {"kind": "fixed", "x": 3, "y": 5, "log2": [6, 10]}}],
  "monte_carlo": {"x": 3, "n": 40, "trials": 4000, "sigma_site": true, "escape": [8]},
  "seed": 5
})";

const char* kLight = R"({
  "law": {"atoms": [[-2, 0.3333333333333333], [1, 0.6666666666666667]]},
  "set": "0,2",
  "studies": [{"formula": "halfline", "schedule": {"kind": "fixed", "x": 8, "y": 8, "log2": [8, 11]}, "tol": 0.1},
              {"formula": "generic", "schedule": {"kind": "fixed", "x": 5, "y": 4, "log2": [8, 11]}, "tol": 0.1}]
})";

std::string read(const std::string& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode code_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Disagreement;  // no error
}

}  // namespace

TEST_CASE("simple walk config: studies, invariants and Monte Carlo all pass") {
  auto cfg = parse_config(kSimple);
  CHECK(cfg.studies.size() == 1);
  CHECK(cfg.seed == 5);
  auto r = run_config(cfg);
  REQUIRE(r.studies.size() == 1);
  CHECK(r.studies[0].pass);
  CHECK_FALSE(r.invariants.empty());
  for (const auto& iv : r.invariants) {
    INFO(iv.name << " residual " << iv.residual);
    CHECK(iv.pass);
  }
  CHECK_FALSE(r.monte_carlo.empty());
  for (const auto& m : r.monte_carlo) CHECK(m.pass);
  CHECK(r.pass);
  CHECK(r.exit_code() == 0);
  CHECK(r.version == std::string(version()));
  CHECK(r.config_hash.size() == 16);
}

TEST_CASE("light law: invariant suite and two studies") {
  auto r = run_config(parse_config(kLight));
  for (const auto& iv : r.invariants) {
    INFO(iv.name << " residual " << iv.residual << " tol " << iv.tol);
    CHECK(iv.pass);
  }
  REQUIRE(r.studies.size() == 2);
  CHECK(r.study_names[0] == "halfline_0");
  CHECK(r.studies[0].pass);
  CHECK(r.studies[1].pass);
}

TEST_CASE("config validation") {
  CHECK(code_of("{") == ErrorCode::ConfigError);
  CHECK(code_of("[]") == ErrorCode::ConfigError);
  CHECK(code_of(R"({"set": "0"})") == ErrorCode::ConfigError);
  CHECK(code_of(R"({"law": {"family": "simple"}, "set": "halfline:0"})") == ErrorCode::ConfigError);
  CHECK(code_of(R"({"law": {"family": "nope"}, "set": "0"})") == ErrorCode::ConfigError);
  CHECK(code_of(R"({"law": {"atoms": [[1, 1.0]]}, "set": "0"})") == ErrorCode::ConfigError);
  CHECK(code_of(R"({"law": {"family": "simple"}, "set": "0", "studies": [{"formula": "no_such"}]})") ==
        ErrorCode::UnknownFormula);
  CHECK(code_of(R"({"law": {"family": "simple"}, "set": "0",
                    "studies": [{"formula": "generic", "schedule": {"log2": [8, 6]}}]})") == ErrorCode::ConfigError);
  CHECK(code_of(R"({"law": {"family": "simple"}, "set": "0", "output": {"format": "xml"}})") ==
        ErrorCode::ConfigError);
  CHECK(code_of(R"({"law": {"family": "simple"}, "set": "0", "monte_carlo": {"trials": 10}})") ==
        ErrorCode::ConfigError);
}

TEST_CASE("empty study list gives an invariant-only report") {
  auto r = run_config(parse_config(R"({"law": {"family": "simple"}, "set": "0,2", "context": {"range": 24}})"));
  CHECK(r.studies.empty());
  CHECK_FALSE(r.invariants.empty());
  CHECK(r.pass);
}

TEST_CASE("config hash follows the canonical document") {
  auto a = parse_config(R"({"law": {"family": "simple"}, "set": "0"})");
  auto b = parse_config(R"({ "set" : "0", "law" : {"family":"simple"} })");
  auto c = parse_config(R"({"law": {"family": "simple"}, "set": "0", "seed": 2})");
  CHECK(a.hash == b.hash);
  CHECK(a.hash != c.hash);
  CHECK(a.canonical == b.canonical);
}

TEST_CASE("csv header, json round trip and emitted files") {
  auto r = run_config(parse_config(kSimple));
  const auto csv = study_csv(r.studies[0]);
  CHECK(csv.substr(0, csv.find('\n')) == "n,x,y,exact,predicted,ratio,flags");
  const auto js = report_json(r);
  CHECK(js.find("\"schema\": \"1\"") != std::string::npos);
  auto back = report_from_json(js);
  CHECK(report_json(back) == js);
  CHECK(study_csv(back.studies[0]) == csv);

  const auto dir = std::filesystem::temp_directory_path() / "latticelab_harness_test";
  std::filesystem::remove_all(dir);
  auto files = emit_report(r, dir.string(), "csv");
  CHECK(files.size() == 4);
  CHECK(read((dir / "gen.csv").string()) == csv);
  CHECK(read((dir / "invariants.csv").string()).rfind("name,residual,tol,pass\n", 0) == 0);
  auto jf = emit_report(r, dir.string(), "json");
  REQUIRE(jf.size() == 1);
  CHECK(read(jf[0]) == js);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(emit_report(r, "/proc/latticelab_no_such_dir", "csv"), Error);
}

TEST_CASE("reports are byte-identical across worker counts") {
  auto cfg = parse_config(kSimple);
  std::vector<std::string> bodies;
  for (int w : {1, 2, 8}) {
    set_worker_count(w);
    bodies.push_back(report_json(run_config(cfg)));
  }
  set_worker_count(0);
  CHECK(bodies[0] == bodies[1]);
  CHECK(bodies[0] == bodies[2]);
}

TEST_CASE("study errors carry the study name") {
  auto cfg = parse_config(R"({"law": {"family": "simple"}, "set": "0", "context": {"range": 16},
    "studies": [{"name": "far", "formula": "generic", "schedule": {"kind": "fixed", "x": 200, "y": 2, "log2": [6, 8]}}]})");
  try {
    run_config(cfg);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RegimeViolation);
    CHECK(std::string(e.what()).find("far") != std::string::npos);
  }
}
