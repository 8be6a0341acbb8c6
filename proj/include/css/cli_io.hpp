#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "css/critical_mass.hpp"
#include "css/dynamics.hpp"
#include "css/functionals.hpp"
#include "css/ground_state.hpp"

namespace css {

enum class Mode { ground_state, evolve, stability, blowup, critical_mass, validate, fiber_scan };
const char* to_string(Mode m);
std::optional<Mode> parse_mode(const std::string& s);

struct GridSpec {
  int nx = 256;
  int ny = 256;
  double lx = 40.0;
  double ly = 40.0;
  double dealias = 2.0 / 3.0;
};

/// Initial field for evolve and fiber-scan.
struct InitialSpec {
  std::string kind = "gaussian";  // gaussian | ground_state | liouville | dump
  double width = 1.0;
  double perturbation = 0.0;
  double mu = 2.0;
  double velocity = 0.0;  // phase gradient along x1
  std::string path;       // dump
};

struct OutputSpec {
  std::string directory = "out";
  int stride = 1;  // keep every stride-th diagnostics row
  std::vector<std::string> formats{"json", "csv", "dump", "gnuplot"};
};

struct RunConfig {
  Mode mode = Mode::ground_state;
  GridSpec grid;
  ModelParams model;
  SolverConfig solver;
  std::string solver_regime = "auto";  // auto | subcritical | supercritical
  EvolutionConfig evolution;
  InitialSpec initial;
  double stability_delta = 1e-2;
  double blowup_tau = 1.1;
  bool blowup_control = true;  // also run tau = 1
  std::vector<double> critical_lambdas{0.5, 1.0, 1.5};
  std::vector<double> cstar_lambdas{1.01, 1.5, 2.0};
  CstarConfig cstar;
  std::vector<double> fiber_ts;
  std::uint64_t seed = 1;
  int threads = 1;  // independent sweep points run concurrently; not echoed
  OutputSpec output;
};

struct ConfigError {
  std::string path;
  std::string message;
};

struct ParseResult {
  std::optional<RunConfig> config;
  std::vector<ConfigError> errors;
  std::vector<std::string> warnings;  // unknown keys when not strict
};

/// Parses the JSON config. Every problem is collected with its JSON path
/// before giving up; unknown keys are errors when strict, warnings otherwise.
ParseResult parse_config(const std::string& text, bool strict = true);
ParseResult parse_config(const nlohmann::json& j, bool strict = true);
inline ParseResult parse_config(const char* text, bool strict = true) { return parse_config(std::string(text), strict); }

/// The documented defaults as a JSON document (the schema by example).
nlohmann::json default_config_json(Mode mode);

enum ExitCode : int { exit_pass = 0, exit_invariant = 1, exit_config = 2, exit_runtime = 3 };

struct RunReport {
  int exit_code = exit_pass;
  nlohmann::json summary;
  std::vector<std::string> artifacts;  // relative to the output directory
  bool complete = true;
};

/// Runs the configured mode and writes summary.json, CSV series, field
/// dumps, gnuplot scripts and a MANIFEST into out_dir. Outputs carry no
/// timestamps or timings, so identical configs give identical files.
RunReport run(const RunConfig& config, const std::filesystem::path& out_dir);

}  // namespace css
