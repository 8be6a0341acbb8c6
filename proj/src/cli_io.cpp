#include "css/cli_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "css/critical_mass.hpp"
#include "css/gauge.hpp"
#include "css/scaling.hpp"
#include "css/spectral.hpp"
#include "css/virial.hpp"

namespace css {

using nlohmann::json;

namespace {

constexpr std::pair<Mode, const char*> mode_names[] = {
    {Mode::ground_state, "ground-state"}, {Mode::evolve, "evolve"},
    {Mode::stability, "stability"},       {Mode::blowup, "blowup"},
    {Mode::critical_mass, "critical-mass"}, {Mode::validate, "validate"},
    {Mode::fiber_scan, "fiber-scan"}};

}  // namespace

const char* to_string(Mode m) {
  for (const auto& [mode, name] : mode_names)
    if (mode == m) return name;
  return "?";
}

std::optional<Mode> parse_mode(const std::string& s) {
  for (const auto& [mode, name] : mode_names)
    if (s == name) return mode;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Reader {
 public:
  Reader(ParseResult& out, bool strict) : out_(out), strict_(strict) {}

  void error(const std::string& path, const std::string& msg) { out_.errors.push_back({path, msg}); }

  // Returns the object at key, or nullptr when absent or not an object.
  const json* object(const json& parent, const std::string& path, const char* key) {
    if (!parent.contains(key)) return nullptr;
    const json& v = parent.at(key);
    if (!v.is_object()) {
      error(path + "." + key, "expected an object");
      return nullptr;
    }
    return &v;
  }

  void keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& [k, v] : obj.items()) {
      if (allowed.count(k)) continue;
      const std::string p = path.empty() ? k : path + "." + k;
      if (strict_)
        error(p, "unknown key");
      else
        out_.warnings.push_back(p + ": unknown key ignored");
    }
  }

  void get(const json& obj, const std::string& path, const char* key, double& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (v.is_number())
      out = v.get<double>();
    else
      error(join(path, key), "expected a number");
  }
  void get(const json& obj, const std::string& path, const char* key, int& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (v.is_number_integer())
      out = v.get<int>();
    else
      error(join(path, key), "expected an integer");
  }
  void get(const json& obj, const std::string& path, const char* key, std::uint64_t& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0))
      out = v.get<std::uint64_t>();
    else
      error(join(path, key), "expected a non-negative integer");
  }
  void get(const json& obj, const std::string& path, const char* key, bool& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (v.is_boolean())
      out = v.get<bool>();
    else
      error(join(path, key), "expected true or false");
  }
  void get(const json& obj, const std::string& path, const char* key, std::string& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (v.is_string())
      out = v.get<std::string>();
    else
      error(join(path, key), "expected a string");
  }
  void get(const json& obj, const std::string& path, const char* key, std::vector<double>& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    bool ok = v.is_array();
    if (ok)
      for (const auto& e : v) ok = ok && e.is_number();
    if (ok)
      out = v.get<std::vector<double>>();
    else
      error(join(path, key), "expected an array of numbers");
  }
  void get(const json& obj, const std::string& path, const char* key, std::vector<std::string>& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    bool ok = v.is_array();
    if (ok)
      for (const auto& e : v) ok = ok && e.is_string();
    if (ok)
      out = v.get<std::vector<std::string>>();
    else
      error(join(path, key), "expected an array of strings");
  }

  static std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

 private:
  ParseResult& out_;
  bool strict_;
};

// Exponent used when the config leaves model.p out.
double default_p(Mode m) {
  switch (m) {
    case Mode::blowup: return 6.0;
    case Mode::critical_mass: return 4.0;
    default: return 3.0;
  }
}

void read_blocks(const json& j, RunConfig& c, Reader& r) {
  r.keys(j, "",
         {"mode", "grid", "model", "solver", "evolution", "initial", "stability", "blowup", "critical", "fiber", "seed",
          "output"});
  if (!j.contains("mode")) {
    r.error("mode", "required");
  } else if (!j.at("mode").is_string()) {
    r.error("mode", "expected a string");
  } else if (auto m = parse_mode(j.at("mode").get<std::string>())) {
    c.mode = *m;
    c.model.p = default_p(*m);
  } else {
    r.error("mode", "unknown mode '" + j.at("mode").get<std::string>() + "'");
  }
  r.get(j, "", "seed", c.seed);

  if (const json* g = r.object(j, "", "grid")) {
    r.keys(*g, "grid", {"nx", "ny", "lx", "ly", "dealias"});
    r.get(*g, "grid", "nx", c.grid.nx);
    r.get(*g, "grid", "ny", c.grid.ny);
    r.get(*g, "grid", "lx", c.grid.lx);
    r.get(*g, "grid", "ly", c.grid.ly);
    r.get(*g, "grid", "dealias", c.grid.dealias);
  }
  if (const json* m = r.object(j, "", "model")) {
    r.keys(*m, "model", {"lambda", "p", "c", "gauge", "boundary"});
    r.get(*m, "model", "lambda", c.model.lambda);
    r.get(*m, "model", "p", c.model.p);
    r.get(*m, "model", "c", c.model.c);
    r.get(*m, "model", "gauge", c.model.gauge);
    std::string b = c.model.boundary == GaugeBoundary::free_space ? "free_space" : "periodic";
    r.get(*m, "model", "boundary", b);
    if (b == "free_space")
      c.model.boundary = GaugeBoundary::free_space;
    else if (b == "periodic")
      c.model.boundary = GaugeBoundary::periodic;
    else
      r.error("model.boundary", "expected free_space or periodic");
  }
  if (const json* s = r.object(j, "", "solver")) {
    r.keys(*s, "solver",
           {"regime", "max_iters", "step_initial", "step_max", "step_backtrack", "step_min", "armijo_c1", "grad_tol",
            "q_tol", "radial", "radial_every", "conjugate", "perturbation", "initial_width"});
    r.get(*s, "solver", "regime", c.solver_regime);
    r.get(*s, "solver", "max_iters", c.solver.max_iters);
    r.get(*s, "solver", "step_initial", c.solver.step_initial);
    r.get(*s, "solver", "step_max", c.solver.step_max);
    r.get(*s, "solver", "step_backtrack", c.solver.step_backtrack);
    r.get(*s, "solver", "step_min", c.solver.step_min);
    r.get(*s, "solver", "armijo_c1", c.solver.armijo_c1);
    r.get(*s, "solver", "grad_tol", c.solver.grad_tol);
    r.get(*s, "solver", "q_tol", c.solver.q_tol);
    r.get(*s, "solver", "radial", c.solver.radial);
    r.get(*s, "solver", "radial_every", c.solver.radial_every);
    r.get(*s, "solver", "conjugate", c.solver.conjugate);
    r.get(*s, "solver", "perturbation", c.solver.perturbation);
    r.get(*s, "solver", "initial_width", c.solver.initial_width);
  }
  if (const json* e = r.object(j, "", "evolution")) {
    r.keys(*e, "evolution",
           {"dt", "t_max", "gauge_refresh", "scheme", "monitor_stride", "blowup_threshold", "checkpoint_stride",
            "virial", "chi_radius", "dealias", "implicit_tol", "implicit_max_iters"});
    auto& ev = c.evolution;
    r.get(*e, "evolution", "dt", ev.dt);
    r.get(*e, "evolution", "t_max", ev.t_max);
    std::string refresh = to_string(ev.gauge_refresh);
    r.get(*e, "evolution", "gauge_refresh", refresh);
    if (refresh == "every_substep")
      ev.gauge_refresh = GaugeRefresh::every_substep;
    else if (refresh == "every_step")
      ev.gauge_refresh = GaugeRefresh::every_step;
    else
      r.error("evolution.gauge_refresh", "expected every_substep or every_step");
    std::string scheme = to_string(ev.scheme);
    r.get(*e, "evolution", "scheme", scheme);
    if (scheme == "strang_split")
      ev.scheme = Scheme::strang_split;
    else if (scheme == "rk4_spectral")
      ev.scheme = Scheme::rk4_spectral;
    else
      r.error("evolution.scheme", "expected strang_split or rk4_spectral");
    r.get(*e, "evolution", "monitor_stride", ev.monitor_stride);
    r.get(*e, "evolution", "blowup_threshold", ev.blowup_threshold);
    r.get(*e, "evolution", "checkpoint_stride", ev.checkpoint_stride);
    r.get(*e, "evolution", "virial", ev.virial);
    r.get(*e, "evolution", "chi_radius", ev.chi_radius);
    r.get(*e, "evolution", "dealias", ev.dealias);
    r.get(*e, "evolution", "implicit_tol", ev.implicit_tol);
    r.get(*e, "evolution", "implicit_max_iters", ev.implicit_max_iters);
  }
  if (const json* i = r.object(j, "", "initial")) {
    r.keys(*i, "initial", {"kind", "width", "perturbation", "mu", "velocity", "path"});
    r.get(*i, "initial", "kind", c.initial.kind);
    r.get(*i, "initial", "width", c.initial.width);
    r.get(*i, "initial", "perturbation", c.initial.perturbation);
    r.get(*i, "initial", "mu", c.initial.mu);
    r.get(*i, "initial", "velocity", c.initial.velocity);
    r.get(*i, "initial", "path", c.initial.path);
  }
  if (const json* s = r.object(j, "", "stability")) {
    r.keys(*s, "stability", {"delta"});
    r.get(*s, "stability", "delta", c.stability_delta);
  }
  if (const json* b = r.object(j, "", "blowup")) {
    r.keys(*b, "blowup", {"tau", "control"});
    r.get(*b, "blowup", "tau", c.blowup_tau);
    r.get(*b, "blowup", "control", c.blowup_control);
  }
  if (const json* k = r.object(j, "", "critical")) {
    r.keys(*k, "critical",
           {"classify_lambdas", "cstar_lambdas", "n", "box", "mu", "basis_radius", "modes", "max_evals",
            "simplex_step", "size_tol", "energy_tol"});
    r.get(*k, "critical", "classify_lambdas", c.critical_lambdas);
    r.get(*k, "critical", "cstar_lambdas", c.cstar_lambdas);
    r.get(*k, "critical", "n", c.cstar.n);
    r.get(*k, "critical", "box", c.cstar.box);
    r.get(*k, "critical", "mu", c.cstar.mu);
    r.get(*k, "critical", "basis_radius", c.cstar.basis_radius);
    r.get(*k, "critical", "modes", c.cstar.modes);
    r.get(*k, "critical", "max_evals", c.cstar.max_evals);
    r.get(*k, "critical", "simplex_step", c.cstar.simplex_step);
    r.get(*k, "critical", "size_tol", c.cstar.size_tol);
    r.get(*k, "critical", "energy_tol", c.cstar.energy_tol);
  }
  if (const json* f = r.object(j, "", "fiber")) {
    r.keys(*f, "fiber", {"ts"});
    r.get(*f, "fiber", "ts", c.fiber_ts);
  }
  if (const json* o = r.object(j, "", "output")) {
    r.keys(*o, "output", {"directory", "stride", "formats"});
    r.get(*o, "output", "directory", c.output.directory);
    r.get(*o, "output", "stride", c.output.stride);
    r.get(*o, "output", "formats", c.output.formats);
  }
}

template <class F>
void capture(Reader& r, const std::string& path, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    r.error(path, e.what());
  }
}

void check_ranges(const json& j, RunConfig& c, Reader& r) {
  const auto& g = c.grid;
  if (g.nx < 16 || g.nx % 2 != 0) r.error("grid.nx", "must be even and >= 16");
  if (g.ny < 16 || g.ny % 2 != 0) r.error("grid.ny", "must be even and >= 16");
  if (!(g.lx > 0.0)) r.error("grid.lx", "must be positive");
  if (!(g.ly > 0.0)) r.error("grid.ly", "must be positive");
  if (!(g.dealias > 0.0 && g.dealias <= 1.0)) r.error("grid.dealias", "must lie in (0, 1]");

  if (!(c.model.p > 2.0)) r.error("model.p", "p must exceed 2");
  if (!(c.model.lambda > 0.0)) r.error("model.lambda", "lambda must be positive");
  if (!(c.model.c > 0.0)) r.error("model.c", "c must be positive");

  capture(r, "solver", [&] { validate(c.solver); });
  capture(r, "evolution", [&] { validate(c.evolution); });
  if (c.output.stride < 1) r.error("output.stride", "must be >= 1");
  for (const auto& f : c.output.formats)
    if (f != "json" && f != "csv" && f != "dump" && f != "gnuplot")
      r.error("output.formats", "unknown format '" + f + "'");

  const std::set<std::string> kinds{"gaussian", "ground_state", "liouville", "dump"};
  if (!kinds.count(c.initial.kind)) r.error("initial.kind", "expected gaussian, ground_state, liouville or dump");
  if (c.initial.kind == "dump" && c.initial.path.empty()) r.error("initial.path", "required for kind dump");
  if (!(c.initial.width > 0.0)) r.error("initial.width", "must be positive");
  if (!(c.initial.mu > 0.0)) r.error("initial.mu", "must be positive");
  if (c.initial.perturbation < 0.0) r.error("initial.perturbation", "must be >= 0");

  const double p = c.model.p;
  const bool p_ok = p > 2.0;
  const std::string& reg = c.solver_regime;
  if (reg != "auto" && reg != "subcritical" && reg != "supercritical")
    r.error("solver.regime", "expected auto, subcritical or supercritical");

  // Regime gate for every mode that computes a ground state.
  const bool needs_ground_state = c.mode == Mode::ground_state || c.mode == Mode::stability ||
                                  c.mode == Mode::blowup ||
                                  ((c.mode == Mode::evolve || c.mode == Mode::fiber_scan) &&
                                   c.initial.kind == "ground_state");
  if (needs_ground_state && p_ok) {
    if (p == 4.0)
      r.error("model.p", "p = 4 is the mass-critical regime: no normalized ground state is computed (use mode "
                         "critical-mass)");
    else if (reg == "supercritical" && p < 4.0)
      r.error("solver.regime", "supercritical solver requires p > 4; p < 4 is mass-subcritical");
    else if (reg == "subcritical" && p > 4.0)
      r.error("solver.regime", "subcritical solver requires 2 < p < 4; p > 4 is mass-supercritical");
  }
  if (c.mode == Mode::stability) {
    if (p_ok && !(p < 4.0)) r.error("model.p", "stability probe requires 2 < p < 4 (orbital stability regime)");
    if (!(c.stability_delta >= 0.0)) r.error("stability.delta", "must be >= 0");
  }
  if (c.mode == Mode::blowup) {
    if (p_ok && !(p > 4.0)) r.error("model.p", "blow-up experiment requires p > 4 (mass-supercritical)");
    if (!(c.blowup_tau > 0.0)) r.error("blowup.tau", "must be positive");
  }
  if (c.mode == Mode::critical_mass) {
    const bool given = j.contains("model") && j.at("model").is_object() && j.at("model").contains("p");
    if (given && p != 4.0) r.error("model.p", "critical-mass mode works at p = 4");
    c.model.p = 4.0;
    for (double l : c.critical_lambdas)
      if (!(l > 0.0)) r.error("critical.classify_lambdas", "entries must be positive");
    for (double l : c.cstar_lambdas)
      if (!(l > 1.0)) r.error("critical.cstar_lambdas", "entries must exceed 1");
    capture(r, "critical", [&] { validate(c.cstar); });
  }
  if (c.mode == Mode::fiber_scan) {
    for (double t : c.fiber_ts)
      if (!(t > 0.0)) r.error("fiber.ts", "entries must be positive");
  }
}

}  // namespace

ParseResult parse_config(const json& j, bool strict) {
  ParseResult out;
  Reader r(out, strict);
  if (!j.is_object()) {
    r.error("", "config must be a JSON object");
    return out;
  }
  RunConfig c;
  read_blocks(j, c, r);
  check_ranges(j, c, r);
  c.solver.seed = c.seed;
  if (out.errors.empty()) out.config = c;
  return out;
}

ParseResult parse_config(const std::string& text, bool strict) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    ParseResult out;
    out.errors.push_back({"", std::string("invalid JSON: ") + e.what()});
    return out;
  }
  return parse_config(j, strict);
}

namespace {

json config_json(const RunConfig& c) {
  const auto& s = c.solver;
  const auto& e = c.evolution;
  return {
      {"mode", to_string(c.mode)},
      {"seed", c.seed},
      {"grid", {{"nx", c.grid.nx}, {"ny", c.grid.ny}, {"lx", c.grid.lx}, {"ly", c.grid.ly}, {"dealias", c.grid.dealias}}},
      {"model",
       {{"lambda", c.model.lambda},
        {"p", c.model.p},
        {"c", c.model.c},
        {"gauge", c.model.gauge},
        {"boundary", c.model.boundary == GaugeBoundary::free_space ? "free_space" : "periodic"}}},
      {"solver",
       {{"regime", c.solver_regime},
        {"max_iters", s.max_iters},
        {"step_initial", s.step_initial},
        {"step_max", s.step_max},
        {"step_backtrack", s.step_backtrack},
        {"step_min", s.step_min},
        {"armijo_c1", s.armijo_c1},
        {"grad_tol", s.grad_tol},
        {"q_tol", s.q_tol},
        {"radial", s.radial},
        {"radial_every", s.radial_every},
        {"conjugate", s.conjugate},
        {"perturbation", s.perturbation},
        {"initial_width", s.initial_width}}},
      {"evolution",
       {{"dt", e.dt},
        {"t_max", e.t_max},
        {"gauge_refresh", to_string(e.gauge_refresh)},
        {"scheme", to_string(e.scheme)},
        {"monitor_stride", e.monitor_stride},
        {"blowup_threshold", e.blowup_threshold},
        {"checkpoint_stride", e.checkpoint_stride},
        {"virial", e.virial},
        {"chi_radius", e.chi_radius},
        {"dealias", e.dealias},
        {"implicit_tol", e.implicit_tol},
        {"implicit_max_iters", e.implicit_max_iters}}},
      {"initial",
       {{"kind", c.initial.kind},
        {"width", c.initial.width},
        {"perturbation", c.initial.perturbation},
        {"mu", c.initial.mu},
        {"velocity", c.initial.velocity},
        {"path", c.initial.path}}},
      {"stability", {{"delta", c.stability_delta}}},
      {"blowup", {{"tau", c.blowup_tau}, {"control", c.blowup_control}}},
      {"critical",
       {{"classify_lambdas", c.critical_lambdas},
        {"cstar_lambdas", c.cstar_lambdas},
        {"n", c.cstar.n},
        {"box", c.cstar.box},
        {"mu", c.cstar.mu},
        {"basis_radius", c.cstar.basis_radius},
        {"modes", c.cstar.modes},
        {"max_evals", c.cstar.max_evals},
        {"simplex_step", c.cstar.simplex_step},
        {"size_tol", c.cstar.size_tol},
        {"energy_tol", c.cstar.energy_tol}}},
      {"fiber", {{"ts", c.fiber_ts}}},
      {"output", {{"directory", c.output.directory}, {"stride", c.output.stride}, {"formats", c.output.formats}}}};
}

}  // namespace

json default_config_json(Mode mode) {
  RunConfig c;
  c.mode = mode;
  c.model.p = default_p(mode);
  return config_json(c);
}

// ---------------------------------------------------------------------------
// Running

namespace {

struct Check {
  std::string name;
  double value;
  double bound;
  bool pass;
};

json to_json_check(const Check& c) { return {{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"pass", c.pass}}; }

class Output {
 public:
  Output(std::filesystem::path dir, const OutputSpec& spec) : dir_(std::move(dir)), spec_(spec) {
    std::filesystem::create_directories(dir_);
  }

  bool wants(const char* format) const {
    for (const auto& f : spec_.formats)
      if (f == format) return true;
    return false;
  }

  std::ofstream open(const std::string& name) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
    return os;
  }

  void dump(const std::string& name, const ComplexField& u) {
    if (!wants("dump")) return;
    auto os = open(name);
    write_field_dump(os, u);
  }

  void diagnostics(const std::string& name, const std::vector<DiagnosticsRecord>& records) {
    if (!wants("csv")) return;
    std::vector<DiagnosticsRecord> kept;
    for (std::size_t k = 0; k < records.size(); ++k)
      if (k % static_cast<std::size_t>(spec_.stride) == 0 || k + 1 == records.size()) kept.push_back(records[k]);
    auto os = open(name);
    write_diagnostics_csv(os, kept);
  }

  void script(const std::string& name, const std::string& body) {
    if (!wants("gnuplot")) return;
    auto os = open(name);
    os << body;
  }

  const std::vector<std::string>& files() const { return files_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  OutputSpec spec_;
  std::vector<std::string> files_;
};

std::string evolution_script(const std::string& csv, const std::string& png) {
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set terminal pngcairo size 1200,400\n"
     << "set output '" << png << "'\n"
     << "set multiplot layout 1,3\n"
     << "stats '" << csv << "' every ::1::1 using 2:3 nooutput\n"
     << "m0 = STATS_min_x; e0 = STATS_min_y\n"
     << "set xlabel 't'\n"
     << "set title 'relative mass drift'\n"
     << "plot '" << csv << "' skip 1 using 1:(($2 - m0) / m0) with lines notitle\n"
     << "set title 'relative energy drift'\n"
     << "plot '" << csv << "' skip 1 using 1:(($3 - e0) / abs(e0)) with lines notitle\n"
     << "set title 'kinetic_cov'\n"
     << "set logscale y\n"
     << "plot '" << csv << "' skip 1 using 1:5 with lines notitle\n"
     << "unset multiplot\n";
  return os.str();
}

std::string xy_script(const std::string& csv, const std::string& png, const std::string& title, int xcol, int ycol,
                      bool logy) {
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set terminal pngcairo size 800,500\n"
     << "set output '" << png << "'\n"
     << "set title '" << title << "'\n";
  if (logy) os << "set logscale y\n";
  os << "plot '" << csv << "' skip 1 using " << xcol << ":" << ycol << " with linespoints notitle\n";
  return os.str();
}

GridPtr grid_of(const RunConfig& c) { return make_grid(c.grid.nx, c.grid.ny, c.grid.lx, c.grid.ly, c.grid.dealias); }

Regime pick_regime(const RunConfig& c) {
  if (c.solver_regime == "subcritical") return Regime::subcritical;
  if (c.solver_regime == "supercritical") return Regime::supercritical;
  return regime_of(c.model.p);
}

GroundStateResult solve_ground_state(const RunConfig& c) {
  const GridPtr grid = grid_of(c);
  return pick_regime(c) == Regime::supercritical ? minimize_supercritical(grid, c.model, c.solver)
                                                  : minimize_subcritical(grid, c.model, c.solver);
}

json ground_state_json(const GroundStateResult& r) {
  json t;
  to_json(t, r.terms);
  return {{"energy", r.energy},          {"q_residual", r.q_residual}, {"multiplier", r.multiplier},
          {"grad_norm", r.grad_norm},    {"iterations", r.iterations}, {"converged", r.converged},
          {"regime", to_string(r.regime)}, {"mass", mass(r.u)},          {"terms", t},
          {"grid", r.u.grid().describe()}};
}

void write_history(Output& out, const GroundStateResult& r) {
  if (!out.wants("csv")) return;
  auto os = out.open("history.csv");
  os << "iteration,objective\n";
  os.precision(17);
  for (std::size_t k = 0; k < r.history.size(); ++k) os << k << ',' << r.history[k] << '\n';
}

ComplexField initial_field(const RunConfig& c, json& info) {
  const GridPtr grid = grid_of(c);
  const auto& in = c.initial;
  ComplexField u;
  if (in.kind == "gaussian") {
    u = gaussian_initial(grid, c.model.c, in.width, in.perturbation, c.seed);
  } else if (in.kind == "liouville") {
    u = liouville_profile(in.mu, grid);
  } else if (in.kind == "dump") {
    u = load_field_dump(in.path);
  } else {
    const GroundStateResult gs = solve_ground_state(c);
    info["ground_state"] = ground_state_json(gs);
    u = gs.u;
  }
  if (in.velocity != 0.0) {
    const auto& g = u.grid();
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 0; j < g.ny(); ++j) u(i, j) *= std::polar(1.0, in.velocity * g.x(i));
  }
  return u;
}

double mass_bound(const EvolutionConfig& e) { return e.scheme == Scheme::strang_split ? 1e-8 : 1e-6; }

json evolution_json(const EvolutionResult& r) {
  json v;
  to_json(v, r.verdict);
  return {{"verdict", v},
          {"t_final", r.t_final},
          {"max_mass_drift", r.max_mass_drift},
          {"max_energy_drift", r.max_energy_drift},
          {"checkpoint_time", r.checkpoint_time},
          {"samples", r.records.size()},
          {"warnings", r.warnings}};
}

// Each run_* fills results and checks; the caller writes summary and manifest.
struct ModeOutcome {
  json results = json::object();
  std::vector<Check> checks;
  bool aborted = false;
};

ModeOutcome run_ground_state(const RunConfig& c, Output& out) {
  ModeOutcome o;
  const GroundStateResult r = solve_ground_state(c);
  o.results = ground_state_json(r);
  const CertifyReport cert = certify(r.u, c.model, c.solver);
  json cj;
  to_json(cj, cert);
  o.results["certify"] = cj;
  o.results["alpha"] = r.multiplier;
  if (r.regime == Regime::supercritical) o.results["gamma"] = r.energy;
  o.checks.push_back({"converged", r.grad_norm, c.solver.grad_tol, r.converged});
  o.checks.push_back({"pohozaev", std::abs(r.q_residual), 1e-6, std::abs(r.q_residual) <= 1e-6});
  if (r.regime == Regime::subcritical) o.checks.push_back({"energy_negative", r.energy, 0.0, r.energy < 0.0});
  else {
    o.checks.push_back({"gamma_positive", r.energy, 0.0, r.energy > 0.0});
    o.checks.push_back({"alpha_positive", r.multiplier, 0.0, r.multiplier > 0.0});
  }
  out.dump("ground_state.cssf", r.u);
  write_history(out, r);
  out.script("history.gp", xy_script("history.csv", "history.png", "objective", 1, 2, false));
  return o;
}

ModeOutcome run_evolve(const RunConfig& c, Output& out) {
  ModeOutcome o;
  json info;
  const ComplexField u0 = initial_field(c, info);
  if (!info.is_null()) o.results["initial"] = info;
  auto sink = [&](double, const ComplexField& phi) { out.dump("checkpoint.cssf", phi); };
  const EvolutionResult r = evolve(u0, c.model, c.evolution, sink);
  o.results["evolution"] = evolution_json(r);
  out.diagnostics("diagnostics.csv", r.records);
  out.dump("final.cssf", r.final_field);
  if (r.verdict.kind == VerdictKind::aborted) out.dump("checkpoint.cssf", r.checkpoint);
  out.script("diagnostics.gp", evolution_script("diagnostics.csv", "diagnostics.png"));
  const double mb = mass_bound(c.evolution);
  o.checks.push_back({"mass_drift", r.max_mass_drift, mb, r.max_mass_drift <= mb});
  o.aborted = r.verdict.kind == VerdictKind::aborted;
  return o;
}

ModeOutcome run_stability(const RunConfig& c, Output& out) {
  ModeOutcome o;
  const GroundStateResult gs = solve_ground_state(c);
  o.results["ground_state"] = ground_state_json(gs);
  const double d0 = stability_probe(gs.u, c.model, 0.0, c.evolution, c.seed);
  const double d = stability_probe(gs.u, c.model, c.stability_delta, c.evolution, c.seed);
  o.results["delta"] = c.stability_delta;
  o.results["orbit_distance_unperturbed"] = d0;
  o.results["orbit_distance"] = d;
  o.checks.push_back({"ground_state_converged", gs.grad_norm, c.solver.grad_tol, gs.converged});
  o.checks.push_back({"unperturbed_orbit", d0, 1e-6, d0 <= 1e-6});
  o.checks.push_back({"perturbed_orbit", d, 10.0 * c.stability_delta, d <= 10.0 * c.stability_delta});
  out.dump("ground_state.cssf", gs.u);
  return o;
}

ModeOutcome run_blowup(const RunConfig& c, Output& out) {
  ModeOutcome o;
  const GroundStateResult gs = solve_ground_state(c);
  o.results["ground_state"] = ground_state_json(gs);
  out.dump("ground_state.cssf", gs.u);
  const ComplexField phi0 = dilate(gs.u, c.blowup_tau);
  const EvolutionResult r = evolve(phi0, c.model, c.evolution);
  o.results["tau"] = c.blowup_tau;
  o.results["evolution"] = evolution_json(r);
  out.diagnostics("diagnostics.csv", r.records);
  out.script("kinetic.gp", xy_script("diagnostics.csv", "kinetic.png", "kinetic_cov", 1, 5, true));
  o.checks.push_back({"ground_state_converged", gs.grad_norm, c.solver.grad_tol, gs.converged});
  o.checks.push_back({"blowup_suspected", r.verdict.t_star, c.evolution.t_max,
                      r.verdict.kind == VerdictKind::blowup_suspected});
  if (c.blowup_control) {
    const EvolutionResult ctl = evolve(gs.u, c.model, c.evolution);
    o.results["control"] = evolution_json(ctl);
    out.diagnostics("control_diagnostics.csv", ctl.records);
    o.checks.push_back({"control_completed", ctl.t_final, c.evolution.t_max,
                        ctl.verdict.kind == VerdictKind::completed});
  }
  return o;
}

// Results keep input order; the first exception is rethrown.
template <class F>
auto parallel_map(const std::vector<double>& xs, int threads, F&& f) {
  using R = decltype(f(0.0));
  std::vector<std::optional<R>> out(xs.size());
  std::vector<std::exception_ptr> errs(xs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < xs.size();) {
      try {
        out[k] = f(xs[k]);
      } catch (...) {
        errs[k] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(xs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::vector<R> res;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (errs[k]) std::rethrow_exception(errs[k]);
    res.push_back(std::move(*out[k]));
  }
  return res;
}

ModeOutcome run_critical(const RunConfig& c, Output& out) {
  ModeOutcome o;
  const GridPtr grid = grid_of(c);
  const ComplexField u = liouville_profile(c.initial.mu, grid);
  const double m = mass(u);
  o.results["liouville_mass"] = m;
  o.results["liouville_mass_over_8pi"] = m / (8.0 * std::numbers::pi);
  json reports = json::array();
  for (double l : c.critical_lambdas) {
    ModelParams p = c.model;
    p.lambda = l;
    const CriticalReport r = classify_critical(u, p);
    json rj;
    to_json(rj, r);
    reports.push_back(rj);
    o.checks.push_back({"classify_lambda_" + std::to_string(l), r.energy, 0.0, r.sign_ok});
  }
  o.results["classify"] = reports;
  CstarConfig cc = c.cstar;
  cc.seed = c.seed;
  const std::vector<CstarEstimate> sweep = parallel_map(c.cstar_lambdas, c.threads, [&](double l) {
    ModelParams p = c.model;
    p.lambda = l;
    return estimate_cstar(p, cc);
  });
  json ests = json::array();
  for (const auto& est : sweep) {
    json ej;
    to_json(ej, est);
    ests.push_back(ej);
    o.checks.push_back(
        {"cstar_certified_lambda_" + std::to_string(est.lambda), est.energy_residual, cc.energy_tol, est.certified});
  }
  o.results["cstar"] = ests;
  if (out.wants("csv")) {
    auto os = out.open("cstar.csv");
    write_cstar_csv(os, sweep);
  }
  out.script("cstar.gp", xy_script("cstar.csv", "cstar.png", "c* estimate", 1, 2, false));
  return o;
}

ModeOutcome run_fiber(const RunConfig& c, Output& out) {
  ModeOutcome o;
  json info;
  const ComplexField u = initial_field(c, info);
  if (!info.is_null()) o.results["initial"] = info;
  std::vector<double> ts = c.fiber_ts;
  if (ts.empty())
    for (int k = 0; k <= 40; ++k) ts.push_back(std::pow(2.0, -2.0 + 4.0 * k / 40.0));
  const auto scan = fiber_scan(u, c.model, ts);
  if (c.model.p != 4.0) {
    const double ts_star = t_star(u, c.model);
    o.results["t_star"] = ts_star;
    const double q = pohozaev_q(dilate(u, ts_star), c.model);
    o.results["q_at_t_star"] = q;
  }
  if (out.wants("csv")) {
    auto os = out.open("fiber.csv");
    write_fiber_csv(os, scan);
  }
  out.script("fiber.gp", xy_script("fiber.csv", "fiber.png", "E(u_t)", 1, 2, false));
  return o;
}

// ---- validate: fixed canonical setups, independent of the config grid.

ModeOutcome run_validate(const RunConfig& c, Output&) {
  ModeOutcome o;
  const double pi = std::numbers::pi;

  {
    const GridPtr g = make_grid(512, 512, 80.0, 80.0);
    const ComplexField u = liouville_profile(2.0, g);
    const double rel = std::abs(mass(u) / (8.0 * pi) - 1.0);
    o.checks.push_back({"liouville_mass", rel, 1e-2, rel <= 1e-2});
    ModelParams p;
    p.p = 4.0;
    p.lambda = 1.0;
    const GaugeFields gf = gauge_for(u, p);
    const SelfDualSplit s = self_dual_split(u, gf);
    const EnergyBreakdown e = energy_terms(u, gf, 4.0);
    const double res = std::sqrt(s.dual_norm2 / e.grad);
    o.checks.push_back({"self_dual_residual", res, 1e-3, res <= 1e-3});
    const double en = std::abs(0.5 * e.kinetic_cov - 0.25 * e.potential) / e.grad;
    o.checks.push_back({"self_dual_energy", en, 1e-3, en <= 1e-3});
  }
  {
    const GridPtr g = make_grid(256, 256, 24.0, 24.0);
    const ComplexField u = sample<cplx>(g, [](double x, double y) { return std::exp(-(x * x + y * y) / 2.0); });
    const auto [a1, a2] = compute_a1_a2(u);
    std::vector<double> radii;
    for (int k = 0; k <= 4000; ++k) radii.push_back(6.0 * 1.5 * k / 4000.0);
    const RadialProfile h = radial_gauge_oracle([](double r) { return std::exp(-r * r); }, radii);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < g->nx(); ++i)
      for (int j = 0; j < g->ny(); ++j) {
        const double x = g->x(i), y = g->y(j), r = std::hypot(x, y);
        if (r > g->lx() / 4.0 || r == 0.0) continue;
        const double pos = r / radii.back() * 4000.0;
        const int k = std::min(3999, static_cast<int>(pos));
        const double w = pos - k;
        const double hr = (1.0 - w) * h.values[k] + w * h.values[k + 1];
        const double e1 = y * hr / (r * r), e2 = -x * hr / (r * r);
        num += (a1(i, j) - e1) * (a1(i, j) - e1) + (a2(i, j) - e2) * (a2(i, j) - e2);
        den += e1 * e1 + e2 * e2;
      }
    const double rel = std::sqrt(num / den);
    o.checks.push_back({"gauge_oracle", rel, 1e-5, rel <= 1e-5});
    const GaugeFields gp = compute_gauge(u, GaugeBoundary::periodic);
    const auto [coul, curl] = gauge_constraint_residuals(u, gp);
    o.checks.push_back({"coulomb_residual", coul, 1e-10, coul <= 1e-10});
    o.checks.push_back({"curl_residual", curl, 1e-10, curl <= 1e-10});
  }
  {
    const GridPtr g = make_grid(128, 128, 16.0, 16.0);
    double worst_idd = 0.0, worst_aid = 0.0, worst_split = 0.0;
    double worst_dia = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 20; ++k) {
      ComplexField u = gaussian_initial(g, 1.0 + 0.25 * k, 1.0 + 0.05 * k, 0.3, c.seed + static_cast<std::uint64_t>(k));
      for (int i = 0; i < g->nx(); ++i)
        for (int j = 0; j < g->ny(); ++j) u(i, j) *= std::polar(1.0, 0.3 * (k % 5) * g->x(i) - 0.1 * (k % 3) * g->y(j));
      ModelParams p;
      p.p = 4.0;
      p.lambda = 1.0 + 0.1 * (k % 4);
      const GaugeFields gf = gauge_for(u, p);
      const EnergyBreakdown e = energy_terms(u, gf, 4.0);
      const auto [idd, aid] = identity_residuals(e);
      worst_idd = std::max(worst_idd, idd);
      worst_aid = std::max(worst_aid, aid);
      const double en = 0.5 * e.kinetic_cov - 0.25 * p.lambda * e.potential;
      const double split = self_dual_split(u, gf).energy(p.lambda);
      worst_split = std::max(worst_split, std::abs(en - split) / e.kinetic_cov);
      worst_dia = std::min(worst_dia, diamagnetic_margin(u, gf));
    }
    o.checks.push_back({"identity_idd", worst_idd, 1e-6, worst_idd <= 1e-6});
    o.checks.push_back({"identity_aid", worst_aid, 1e-6, worst_aid <= 1e-6});
    o.checks.push_back({"decomposition_xx", worst_split, 1e-6, worst_split <= 1e-6});
    o.checks.push_back({"diamagnetic_margin", worst_dia, -1e-10, worst_dia >= -1e-10});
  }
  {
    const GridPtr g = make_grid(128, 128, 16.0, 16.0);
    ComplexField u = gaussian_initial(g, 2.0, 1.0, 0.3, c.seed);
    for (int i = 0; i < g->nx(); ++i)
      for (int j = 0; j < g->ny(); ++j) u(i, j) *= std::polar(1.0, 0.4 * g->x(i));
    ModelParams p;
    p.p = 3.0;
    const GaugeFields gf = gauge_for(u, p);
    const double rhs = virial_rhs(u, gf, p, quadratic_weight(g, 2.0));
    const double q8 = 8.0 * pohozaev_q(energy_terms(u, gf, p.p), p);
    const double rel = std::abs(rhs - q8) / std::abs(q8);
    o.checks.push_back({"virial_8q", rel, 1e-10, rel <= 1e-10});
  }
  return o;
}

void write_manifest(Output& out, bool complete) {
  std::ofstream os(out.dir() / "MANIFEST");
  os << "complete: " << (complete ? "yes" : "no") << '\n';
  for (const auto& f : out.files()) os << f << '\n';
}

}  // namespace

RunReport run(const RunConfig& config, const std::filesystem::path& out_dir) {
  RunReport report;
  Output out(out_dir, config.output);
  json summary = {{"mode", to_string(config.mode)}, {"config", config_json(config)}};
  ModeOutcome o;
  try {
    switch (config.mode) {
      case Mode::ground_state: o = run_ground_state(config, out); break;
      case Mode::evolve: o = run_evolve(config, out); break;
      case Mode::stability: o = run_stability(config, out); break;
      case Mode::blowup: o = run_blowup(config, out); break;
      case Mode::critical_mass: o = run_critical(config, out); break;
      case Mode::validate: o = run_validate(config, out); break;
      case Mode::fiber_scan: o = run_fiber(config, out); break;
    }
  } catch (const std::exception& e) {
    summary["error"] = std::string(to_string(config.mode)) + ": " + e.what();
    summary["passed"] = false;
    report.complete = false;
    report.exit_code = exit_runtime;
  }
  if (report.complete) {
    json checks = json::array();
    bool pass = true;
    for (const auto& ch : o.checks) {
      checks.push_back(to_json_check(ch));
      pass = pass && ch.pass;
    }
    summary["results"] = o.results;
    summary["checks"] = checks;
    summary["passed"] = pass && !o.aborted;
    report.exit_code = o.aborted ? exit_runtime : (pass ? exit_pass : exit_invariant);
  }
  if (out.wants("json") || !report.complete) {
    auto os = out.open("summary.json");
    os << summary.dump(2) << '\n';
  }
  write_manifest(out, report.complete);
  report.summary = std::move(summary);
  report.artifacts = out.files();
  report.artifacts.push_back("MANIFEST");
  return report;
}

}  // namespace css
