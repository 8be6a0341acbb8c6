#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "css/cli_io.hpp"

using namespace css;
namespace fs = std::filesystem;

namespace {

bool has_error(const ParseResult& r, const std::string& path, const std::string& message = "") {
  for (const auto& e : r.errors)
    if (e.path == path && (message.empty() || e.message == message)) return true;
  return false;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("css_lab_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, MinimalGroundStateFillsDefaults) {
  const ParseResult r = parse_config(R"({"mode": "ground-state"})");
  ASSERT_TRUE(r.config) << (r.errors.empty() ? "" : r.errors[0].message);
  EXPECT_EQ(r.config->mode, Mode::ground_state);
  EXPECT_EQ(r.config->grid.nx, 256);
  EXPECT_EQ(r.config->solver.max_iters, SolverConfig{}.max_iters);
  EXPECT_EQ(r.config->evolution.dt, 1e-3);
}

TEST(Config, PBelowTwoRejected) {
  const ParseResult r = parse_config(R"({"mode": "evolve", "model": {"p": 1.5}})");
  EXPECT_FALSE(r.config);
  EXPECT_TRUE(has_error(r, "model.p", "p must exceed 2"));
}

TEST(Config, AllErrorsCollectedWithPaths) {
  const ParseResult r = parse_config(
      R"({"mode": "evolve", "grid": {"nx": "big", "lx": -1}, "model": {"lambda": -2}, "evolution": {"dt": 0}})");
  EXPECT_FALSE(r.config);
  EXPECT_TRUE(has_error(r, "grid.nx"));
  EXPECT_TRUE(has_error(r, "grid.lx"));
  EXPECT_TRUE(has_error(r, "model.lambda"));
  EXPECT_TRUE(has_error(r, "evolution"));
  EXPECT_GE(r.errors.size(), 4u);
}

TEST(Config, UnknownKeysStrictVersusLenient) {
  const std::string text = R"({"mode": "validate", "grid": {"nx": 64, "colour": 3}})";
  const ParseResult strict = parse_config(text, true);
  EXPECT_FALSE(strict.config);
  EXPECT_TRUE(has_error(strict, "grid.colour", "unknown key"));
  const ParseResult lenient = parse_config(text, false);
  EXPECT_TRUE(lenient.config);
  ASSERT_EQ(lenient.warnings.size(), 1u);
}

TEST(Config, RegimeGate) {
  const ParseResult a =
      parse_config(R"({"mode": "ground-state", "model": {"p": 4}, "solver": {"regime": "supercritical"}})");
  EXPECT_FALSE(a.config);
  EXPECT_TRUE(has_error(a, "model.p"));
  const ParseResult b =
      parse_config(R"({"mode": "ground-state", "model": {"p": 3}, "solver": {"regime": "supercritical"}})");
  EXPECT_TRUE(has_error(b, "solver.regime"));
  EXPECT_TRUE(has_error(parse_config(R"({"mode": "stability", "model": {"p": 5}})"), "model.p"));
  EXPECT_TRUE(has_error(parse_config(R"({"mode": "blowup", "model": {"p": 3}})"), "model.p"));
  EXPECT_TRUE(has_error(parse_config(R"({"mode": "critical-mass", "model": {"p": 3}})"), "model.p"));
  EXPECT_TRUE(parse_config(R"({"mode": "critical-mass"})").config);
}

TEST(Config, BadJsonAndMissingMode) {
  EXPECT_FALSE(parse_config("{not json").config);
  EXPECT_TRUE(has_error(parse_config("{}"), "mode", "required"));
  EXPECT_TRUE(has_error(parse_config(R"({"mode": "dance"})"), "mode"));
}

TEST(Config, DefaultsRoundTrip) {
  for (Mode m : {Mode::ground_state, Mode::evolve, Mode::validate, Mode::fiber_scan}) {
    const ParseResult r = parse_config(default_config_json(m), true);
    EXPECT_TRUE(r.config) << to_string(m);
  }
}

TEST(Config, SeedPropagatesToSolver) {
  const ParseResult r = parse_config(R"({"mode": "ground-state", "model": {"p": 3}, "seed": 99})");
  ASSERT_TRUE(r.config);
  EXPECT_EQ(r.config->solver.seed, 99u);
}

TEST(Run, FiberScanArtifactsAndDeterminism) {
  const ParseResult r = parse_config(
      R"({"mode": "fiber-scan", "grid": {"nx": 32, "ny": 32, "lx": 12, "ly": 12}, "model": {"p": 6, "c": 2},
          "fiber": {"ts": [0.5, 1.0, 2.0]}})");
  ASSERT_TRUE(r.config);
  const fs::path a = scratch("fiber_a"), b = scratch("fiber_b");
  const RunReport ra = run(*r.config, a);
  const RunReport rb = run(*r.config, b);
  EXPECT_EQ(ra.exit_code, exit_pass);
  EXPECT_TRUE(fs::exists(a / "summary.json"));
  EXPECT_TRUE(fs::exists(a / "fiber.csv"));
  EXPECT_TRUE(fs::exists(a / "fiber.gp"));
  EXPECT_TRUE(fs::exists(a / "MANIFEST"));
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
  EXPECT_EQ(slurp(a / "fiber.csv"), slurp(b / "fiber.csv"));
  EXPECT_EQ(slurp(a / "fiber.csv").substr(0, 6), "t,E,Q\n");
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Run, EvolveWritesDiagnostics) {
  const ParseResult r = parse_config(
      R"({"mode": "evolve", "grid": {"nx": 32, "ny": 32, "lx": 12, "ly": 12}, "model": {"p": 3, "c": 1.5},
          "evolution": {"dt": 0.01, "t_max": 0.1, "monitor_stride": 2}, "output": {"formats": ["json", "csv"]}})");
  ASSERT_TRUE(r.config);
  const fs::path d = scratch("evolve");
  const RunReport rep = run(*r.config, d);
  EXPECT_EQ(rep.exit_code, exit_pass);
  const std::string csv = slurp(d / "diagnostics.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,mass,energy,q,kinetic_cov,i_virial,v_localized,max_amp");
  EXPECT_FALSE(fs::exists(d / "final.cssf"));  // dump format not requested
  EXPECT_TRUE(rep.summary["passed"].get<bool>());
  fs::remove_all(d);
}

TEST(Run, RuntimeErrorFlushesManifest) {
  const ParseResult r = parse_config(
      R"({"mode": "evolve", "grid": {"nx": 32, "ny": 32, "lx": 12, "ly": 12},
          "initial": {"kind": "dump", "path": "/nonexistent/field.cssf"}})");
  ASSERT_TRUE(r.config);
  const fs::path d = scratch("abort");
  const RunReport rep = run(*r.config, d);
  EXPECT_EQ(rep.exit_code, exit_runtime);
  EXPECT_FALSE(rep.complete);
  EXPECT_NE(slurp(d / "MANIFEST").find("complete: no"), std::string::npos);
  EXPECT_TRUE(rep.summary.contains("error"));
  fs::remove_all(d);
}
