// Command-line front end: spectrum, tune, run, sweep, analyze.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cqft/config.hpp"
#include "cqft/errors.hpp"
#include "cqft/pipeline.hpp"
#include "cqft/spectrum.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kInvariantError = 3;
constexpr int kConvergenceError = 4;

struct Common {
  std::string config;
  std::string preset;
  std::optional<std::size_t> workers;
  std::string out;
  std::optional<double> cutoff;
  std::optional<double> dt;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON configuration file")->envname("CQFT_CONFIG");
  cmd->add_option("--preset", c.preset, "named preset (see `cqft presets`)")->envname("CQFT_PRESET");
  cmd->add_option("--workers", c.workers, "worker threads")->envname("CQFT_WORKERS")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "output directory")->envname("CQFT_OUT");
  cmd->add_option("--cutoff", c.cutoff, "momentum cutoff p_max of the evolved set")->envname("CQFT_CUTOFF");
  cmd->add_option("--dt", c.dt, "time step")->envname("CQFT_DT");
}

cqft::RunConfig load(const Common& c) {
  if (!c.config.empty() && !c.preset.empty()) throw cqft::ConfigError("give either --config or --preset, not both");
  cqft::RunConfig cfg;
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw cqft::ConfigError("cannot read config file " + c.config);
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = cqft::parse_config(ss.str());
  } else if (!c.preset.empty()) {
    cfg = cqft::load_preset(c.preset);
  } else {
    throw cqft::ConfigError("no configuration: pass --config <path> or --preset <name>");
  }
  if (c.workers) cfg.workers = *c.workers;
  if (!c.out.empty()) cfg.output = c.out;
  if (c.cutoff) cfg.cutoff = *c.cutoff;
  if (c.dt) cfg.dt = *c.dt;
  cqft::revalidate(cfg);
  return cfg;
}

void progress(const std::string& msg) { std::fprintf(stderr, "%s\n", msg.c_str()); }

int print_checks(const cqft::RunReport& r) {
  for (const auto& c : r.checks)
    fmt::print("check {:<22} {:>11.3e}  (tol {:.0e})  {}\n", c.name, c.value, c.tolerance, c.passed ? "ok" : "FAILED");
  for (const auto& w : r.warnings) fmt::print(stderr, "warning: {}\n", w);
  return r.ok() ? kOk : kInvariantError;
}

int cmd_spectrum(const Common& c) {
  const auto cfg = load(c);
  const auto r = cqft::run_spectrum(cfg);
  cqft::write_report(r, cfg.output);
  fmt::print("spectrum grid L = {:.4f}, N = {}\n", r.spec_grid.length(), r.spec_grid.size());
  for (std::size_t i = 0; i < r.gap_energies.size(); ++i)
    fmt::print("gap state {}: E = {:.6f}  width W_b = {:.4f}\n", i, r.gap_energies[i], r.gap_widths[i]);
  if (r.gap_energies.empty()) fmt::print("no gap states\n");
  if (r.quasibound)
    fmt::print("quasibound: E = {:.6f}  localization = {:.3f}\n", r.quasibound->energy, r.quasibound->localization);
  return kOk;
}

struct TuneArgs {
  double D = 0.0;
  double W = 0.3;
  std::optional<double> target;
  std::optional<double> spacing;
  double L = 80.0;
  std::size_t N = 512;
};

int cmd_tune(const TuneArgs& a) {
  const cqft::Grid grid = cqft::make_grid(a.L, a.N);
  if (a.target && a.spacing) throw cqft::ConfigError("give either --target or --spacing");
  cqft::TuneResult tr;
  if (a.spacing) {
    tr = cqft::tune_level_spacing(a.D, a.W, *a.spacing, grid);
    fmt::print("V0 = {:.6f}  (E1 - E0 = {:.6f}, {} diagonalizations)\n", tr.V0, tr.value, tr.evaluations);
  } else {
    tr = cqft::tune_well_depth(a.D, a.W, a.target.value_or(-0.4), grid);
    fmt::print("V0 = {:.6f}  (E_g = {:.6f}, {} diagonalizations)\n", tr.V0, tr.value, tr.evaluations);
  }
  return kOk;
}

int cmd_run(const Common& c) {
  const auto cfg = load(c);
  const auto r = cqft::run(cfg, progress);
  cqft::write_report(r, cfg.output);
  fmt::print("{}\n", r.summary().dump(2));
  return print_checks(r);
}

int cmd_sweep(const Common& c) {
  const auto cfg = load(c);
  const auto rep = cqft::run_sweep(cfg, progress);
  cqft::write_sweep(rep, cfg.output);
  fmt::print("{}\n", rep.summary().dump(2));
  return rep.fit ? kOk : kConvergenceError;
}

struct AnalyzeArgs {
  std::string dir;
  cqft::FitWindow window;
  std::optional<double> saturation;
};

int cmd_analyze(const AnalyzeArgs& a) {
  fmt::print("{}\n", cqft::analyze_directory(a.dir, a.window, a.saturation).dump(2));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vacuum pair creation in a Sauter well with and without a laser"};
  app.require_subcommand(1);

  Common common;
  auto* spectrum = app.add_subcommand("spectrum", "static spectrum and gap states of a configuration");
  add_common(spectrum, common);
  auto* run = app.add_subcommand("run", "full time evolution, observables and analysis");
  add_common(run, common);
  auto* sweep = app.add_subcommand("sweep", "decay rate versus bound-state width over tuned wells");
  add_common(sweep, common);

  TuneArgs tune_args;
  auto* tune = app.add_subcommand("tune", "well depth for a target ground energy or level spacing");
  tune->add_option("--D", tune_args.D, "well width D")->required();
  tune->add_option("--W", tune_args.W, "edge extent W");
  tune->add_option("--target", tune_args.target, "ground-state energy (default -0.4)");
  tune->add_option("--spacing", tune_args.spacing, "E1 - E0 of the two lowest gap levels");
  tune->add_option("--L", tune_args.L, "box length");
  tune->add_option("--N", tune_args.N, "grid points");

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand("analyze", "re-run the decay fit on a stored run directory");
  analyze->add_option("dir", analyze_args.dir, "run output directory")->required();
  analyze->add_option("--fit-d-min", analyze_args.window.d_min, "lower d bound of the fit window");
  analyze->add_option("--fit-d-max", analyze_args.window.d_max, "upper d bound of the fit window");
  analyze->add_option("--fit-min-samples", analyze_args.window.min_samples, "minimum samples in the window");
  analyze->add_option("--saturation", analyze_args.saturation, "1 or 2 (default: from the stored config)");

  auto* presets = app.add_subcommand("presets", "list preset names, or print one");
  std::string preset_name;
  presets->add_option("name", preset_name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*spectrum) return cmd_spectrum(common);
    if (*tune) return cmd_tune(tune_args);
    if (*run) return cmd_run(common);
    if (*sweep) return cmd_sweep(common);
    if (*analyze) return cmd_analyze(analyze_args);
    if (*presets) {
      if (preset_name.empty()) {
        for (const auto& n : cqft::preset_names()) fmt::print("{}\n", n);
      } else {
        fmt::print("{}\n", cqft::preset_text(preset_name));
      }
      return kOk;
    }
  } catch (const cqft::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfigError;
  } catch (const cqft::InvariantError& e) {
    fmt::print(stderr, "invariant failure: {}\n", e.what());
    return kInvariantError;
  } catch (const cqft::ConvergenceError& e) {
    fmt::print(stderr, "not converged: {}\n", e.what());
    return kConvergenceError;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return kOk;
}
