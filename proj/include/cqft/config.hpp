#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cqft/analysis.hpp"
#include "cqft/fields.hpp"
#include "cqft/observables.hpp"

namespace cqft {

enum class Scenario { perturbative, two_state, supercritical, sweep };

std::string_view scenario_name(Scenario s);

/// Everything a run needs. Built only through parse_config / load_preset so
/// that defaults are filled and recorded in `resolved`.
///
/// Document schema (JSON; unknown keys are errors):
///   scenario               required: perturbative | two-state | supercritical | sweep
///   grid.L, grid.N         box length and points (80, 512)
///   well.V0, well.D        required (V0 optional for sweep); well.W (0.3)
///   laser.enabled          (false); laser.omega (0.45), laser.E0 (0.3) in E_cr
///   envelope.T             required plateau; envelope.dT (laser: 10 periods, else 20)
///   evolution.dt (0.05), evolution.calibrate_dt (false), evolution.cutoff (4.0),
///   evolution.observations (40), evolution.probe_ramp (laser: 2 periods, else dT),
///   evolution.positive_set (true), evolution.checkpoint (false)
///   decay.box_factor (laser: 32, else 0 = off), decay.observations (20)
///   analysis.fit_d_min (0.05), analysis.fit_d_max (0.8), analysis.fit_min_samples (10),
///   analysis.e_min (1), analysis.e_max (3), analysis.bins (200),
///   analysis.saturation (1, or 2 for two-state)
///   sweep.D (list), sweep.E_target (-0.4), sweep.window ([2.062, 2.197])
///   tune.v_min (0), tune.v_max (4), tune.scan_step (0.25)
///   workers (1), output ("out"), seed (0)
struct RunConfig {
  Scenario scenario = Scenario::perturbative;
  std::string name;  ///< preset name or "custom"

  double L = 80.0;
  std::size_t N = 512;
  FieldConfig field;
  double E0 = 0.0;

  double dt = 0.05;
  bool calibrate_dt = false;
  double cutoff = 4.0;
  std::size_t observations = 40;
  double probe_ramp = 0.0;
  bool positive_set = true;
  bool checkpoint = false;

  std::size_t decay_box = 0;
  std::size_t decay_observations = 20;

  FitWindow fit;
  EnergyBinning binning;
  double saturation = 1.0;

  std::vector<double> sweep_D;
  double E_target = -0.4;
  ResonanceWindow window;
  double tune_v_min = 0.0, tune_v_max = 4.0, tune_scan_step = 0.25;

  std::size_t workers = 1;
  std::string output = "out";
  std::uint64_t seed = 0;

  std::string source;        ///< document as given
  nlohmann::json resolved;   ///< document with every default filled in
};

/// Parses and validates a JSON document. Throws ConfigError listing missing
/// required keys, unknown keys, out-of-range values or an inconsistent
/// scenario (e.g. a perturbative well with V0 >= 2).
RunConfig parse_config(std::string_view text);

/// Re-checks invariants after command-line overrides and refreshes `resolved`.
void revalidate(RunConfig& cfg);

std::vector<std::string> preset_names();

/// JSON text of a named preset. Throws ConfigError for an unknown name.
std::string preset_text(std::string_view name);

RunConfig load_preset(std::string_view name);

}  // namespace cqft
