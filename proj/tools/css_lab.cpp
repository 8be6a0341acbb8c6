// css_lab: batch front end. One subcommand per mode.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "css/cli_io.hpp"

namespace {

int execute(css::Mode mode, const std::string& config_path, std::string out_dir, std::optional<std::uint64_t> seed,
            int threads, bool strict, bool print_defaults) {
  if (print_defaults) {
    std::cout << css::default_config_json(mode).dump(2) << '\n';
    return css::exit_pass;
  }
  nlohmann::json j = nlohmann::json::object();
  if (!config_path.empty()) {
    std::ifstream is(config_path);
    if (!is) {
      std::cerr << "error: cannot read " << config_path << '\n';
      return css::exit_config;
    }
    std::stringstream ss;
    ss << is.rdbuf();
    try {
      j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
      std::cerr << "error: " << config_path << ": " << e.what() << '\n';
      return css::exit_config;
    }
  }
  if (!j.is_object()) {
    std::cerr << "error: config must be a JSON object\n";
    return css::exit_config;
  }
  if (j.contains("mode") && j["mode"] != css::to_string(mode)) {
    std::cerr << "error: mode: config says " << j["mode"].dump() << " but the subcommand is " << css::to_string(mode)
              << '\n';
    return css::exit_config;
  }
  j["mode"] = css::to_string(mode);
  if (seed) j["seed"] = *seed;

  const css::ParseResult parsed = css::parse_config(j, strict);
  for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << '\n';
  if (!parsed.config) {
    for (const auto& e : parsed.errors) std::cerr << "error: " << (e.path.empty() ? "<root>" : e.path) << ": " << e.message << '\n';
    return css::exit_config;
  }
  css::RunConfig config = *parsed.config;
  config.threads = threads;
  // The output directory is the one setting the environment may override.
  if (out_dir.empty())
    if (const char* env = std::getenv("CSS_LAB_OUT")) out_dir = env;
  if (out_dir.empty()) out_dir = config.output.directory;

  css::RunReport report;
  try {
    report = css::run(config, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return css::exit_runtime;
  }
  if (report.summary.contains("error")) std::cerr << "error: " << report.summary["error"].get<std::string>() << '\n';
  if (report.summary.contains("checks"))
    for (const auto& c : report.summary["checks"])
      std::cout << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>() << "  value "
                << c["value"].dump() << "  bound " << c["bound"].dump() << '\n';
  std::cout << "output: " << out_dir << " (" << report.artifacts.size() << " files), exit " << report.exit_code
            << '\n';
  return report.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chern-Simons-Schroedinger numerics lab"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed_value = 0;
  int threads = 1;
  bool strict = false, print_defaults = false;
  css::Mode chosen = css::Mode::validate;
  CLI::Option* seed_opt = nullptr;

  const std::pair<css::Mode, const char*> modes[] = {
      {css::Mode::ground_state, "minimize the energy at fixed mass (p < 4) or on the Pohozaev set (p > 4)"},
      {css::Mode::evolve, "time evolution with conservation diagnostics"},
      {css::Mode::stability, "orbit distance of a perturbed ground state (p < 4)"},
      {css::Mode::blowup, "dilated ground state run plus control (p > 4)"},
      {css::Mode::critical_mass, "Liouville checks, sign classification and c* sweep (p = 4)"},
      {css::Mode::validate, "fixed self-check suite"},
      {css::Mode::fiber_scan, "energy and Pohozaev functional along the dilation fiber"}};
  app.require_subcommand(1);
  for (const auto& [m, help] : modes) {
    CLI::App* sub = app.add_subcommand(css::to_string(m), help);
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides output.directory)");
    auto* so = sub->add_option("--seed", seed_value, "RNG seed (overrides seed)");
    sub->add_option("--threads", threads, "concurrent sweep points")->check(CLI::PositiveNumber);
    sub->add_flag("--strict", strict, "reject unknown config keys");
    sub->add_flag("--print-defaults", print_defaults, "print the default config for this mode and exit");
    sub->callback([&chosen, &seed_opt, m, so] {
      chosen = m;
      seed_opt = so;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : css::exit_config;
  }
  std::optional<std::uint64_t> seed;
  if (seed_opt && seed_opt->count() > 0) seed = seed_value;
  return execute(chosen, config_path, out_dir, seed, threads, strict, print_defaults);
}
