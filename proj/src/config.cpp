#include "cqft/config.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include <fmt/format.h>

#include "cqft/errors.hpp"
#include "cqft/grid.hpp"

namespace cqft {

using nlohmann::json;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"grid", {"L", "N"}},
      {"well", {"V0", "D", "W"}},
      {"laser", {"enabled", "omega", "E0"}},
      {"envelope", {"T", "dT"}},
      {"evolution",
       {"dt", "calibrate_dt", "cutoff", "observations", "probe_ramp", "positive_set", "checkpoint"}},
      {"analysis", {"fit_d_min", "fit_d_max", "fit_min_samples", "e_min", "e_max", "bins", "saturation"}},
      {"decay", {"box_factor", "observations"}},
      {"sweep", {"D", "E_target", "window"}},
      {"tune", {"v_min", "v_max", "scan_step"}},
  };
  return s;
}

const std::set<std::string> kScalars = {"scenario", "name", "workers", "output", "seed"};

void check_keys(const json& doc) {
  std::vector<std::string> unknown;
  for (const auto& [key, value] : doc.items()) {
    if (kScalars.count(key)) continue;
    const auto it = schema().find(key);
    if (it == schema().end()) {
      unknown.push_back(key);
      continue;
    }
    if (!value.is_object()) throw ConfigError(fmt::format("'{}' must be an object", key));
    for (const auto& [sub, _] : value.items()) {
      if (!it->second.count(sub)) unknown.push_back(key + "." + sub);
    }
  }
  if (!unknown.empty()) throw ConfigError(fmt::format("unknown keys: {}", fmt::join(unknown, ", ")));
}

template <class T>
T get(const json& doc, const char* section, const char* key, T fallback) {
  const json* node = &doc;
  if (section) {
    if (!doc.contains(section)) return fallback;
    node = &doc.at(section);
  }
  if (!node->contains(key)) return fallback;
  try {
    return node->at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("'{}{}{}' has the wrong type", section ? section : "",
                                  section ? "." : "", key));
  }
}

bool has(const json& doc, const char* section, const char* key) {
  return doc.contains(section) && doc.at(section).contains(key);
}

Scenario parse_scenario(const std::string& s) {
  if (s == "perturbative") return Scenario::perturbative;
  if (s == "two-state") return Scenario::two_state;
  if (s == "supercritical") return Scenario::supercritical;
  if (s == "sweep") return Scenario::sweep;
  throw ConfigError(fmt::format("unknown scenario '{}'", s));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

json resolve(const RunConfig& c) {
  json j;
  j["scenario"] = scenario_name(c.scenario);
  j["name"] = c.name;
  j["grid"] = {{"L", c.L}, {"N", c.N}};
  j["well"] = {{"V0", c.field.V0}, {"D", c.field.D}, {"W", c.field.W}};
  j["laser"] = {{"enabled", c.field.laser_on}, {"omega", c.field.omega}, {"E0", c.E0}};
  j["envelope"] = {{"T", c.field.T}, {"dT", c.field.dT}};
  j["evolution"] = {{"dt", c.dt},
                    {"calibrate_dt", c.calibrate_dt},
                    {"cutoff", c.cutoff},
                    {"observations", c.observations},
                    {"probe_ramp", c.probe_ramp},
                    {"positive_set", c.positive_set},
                    {"checkpoint", c.checkpoint}};
  j["decay"] = {{"box_factor", c.decay_box}, {"observations", c.decay_observations}};
  j["analysis"] = {{"fit_d_min", c.fit.d_min},   {"fit_d_max", c.fit.d_max},
                   {"fit_min_samples", c.fit.min_samples}, {"e_min", c.binning.e_min},
                   {"e_max", c.binning.e_max},   {"bins", c.binning.bins},
                   {"saturation", c.saturation}};
  j["sweep"] = {{"D", c.sweep_D}, {"E_target", c.E_target}, {"window", {c.window.lo, c.window.hi}}};
  j["tune"] = {{"v_min", c.tune_v_min}, {"v_max", c.tune_v_max}, {"scan_step", c.tune_scan_step}};
  j["workers"] = c.workers;
  j["output"] = c.output;
  j["seed"] = c.seed;
  return j;
}

}  // namespace

std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::perturbative: return "perturbative";
    case Scenario::two_state: return "two-state";
    case Scenario::supercritical: return "supercritical";
    case Scenario::sweep: return "sweep";
  }
  return "?";
}

void revalidate(RunConfig& c) {
  make_grid(c.L, c.N);
  c.field.validate();
  require(c.dt > 0.0 && c.dt <= 1.0, "evolution.dt must lie in (0, 1]");
  require(c.cutoff > 0.0, "evolution.cutoff must be positive");
  require(c.observations >= 1, "evolution.observations must be at least 1");
  require(c.probe_ramp >= 0.0, "evolution.probe_ramp must be non-negative");
  require(c.decay_box <= 64, "decay.box_factor must be at most 64");
  require(c.decay_observations >= 2, "decay.observations must be at least 2");
  require(c.fit.d_min > 0.0 && c.fit.d_max > c.fit.d_min, "analysis fit window must satisfy 0 < d_min < d_max");
  require(c.fit.min_samples >= 2, "analysis.fit_min_samples must be at least 2");
  require(c.binning.e_min >= 1.0 && c.binning.e_max > c.binning.e_min && c.binning.bins >= 1,
          "analysis energy binning must satisfy 1 <= e_min < e_max and bins >= 1");
  require(c.saturation == 1.0 || c.saturation == 2.0, "analysis.saturation must be 1 or 2");
  require(c.workers >= 1 && c.workers <= 1024, "workers must lie in [1, 1024]");
  require(c.tune_v_max > c.tune_v_min && c.tune_scan_step > 0.0, "tune bracket must be non-empty");

  const double v0 = c.field.V0;
  switch (c.scenario) {
    case Scenario::perturbative:
    case Scenario::two_state:
      require(v0 < 2.0, fmt::format("scenario {} needs a subcritical well (V0 < 2), got V0 = {}",
                                    scenario_name(c.scenario), v0));
      if (c.scenario == Scenario::two_state) require(c.field.laser_on, "scenario two-state needs the laser");
      break;
    case Scenario::supercritical:
      require(v0 > 2.0, fmt::format("scenario supercritical needs V0 > 2, got V0 = {}", v0));
      break;
    case Scenario::sweep:
      require(!c.sweep_D.empty(), "scenario sweep needs a non-empty sweep.D list");
      require(c.field.laser_on, "scenario sweep needs the laser");
      require(c.E_target > -1.0 && c.E_target < 1.0, "sweep.E_target must lie in the gap (-1, 1)");
      for (double d : c.sweep_D) require(d > 0.0, "sweep.D entries must be positive");
      require(c.window.hi > c.window.lo, "sweep.window must be [lo, hi] with lo < hi");
      break;
  }
  c.resolved = resolve(c);
}

RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(doc);

  std::vector<std::string> missing;
  if (!doc.contains("scenario")) missing.emplace_back("scenario");
  const bool sweep = doc.value("scenario", std::string{}) == "sweep";
  if (!sweep && !has(doc, "well", "V0")) missing.emplace_back("well.V0");
  if (!sweep && !has(doc, "well", "D")) missing.emplace_back("well.D");
  if (!has(doc, "envelope", "T")) missing.emplace_back("envelope.T");
  if (!missing.empty())
    throw ConfigError(fmt::format("missing required keys: {}", fmt::join(missing, ", ")));

  RunConfig c;
  c.source = std::string(text);
  c.scenario = parse_scenario(get<std::string>(doc, nullptr, "scenario", ""));
  c.name = get<std::string>(doc, nullptr, "name", "custom");
  c.L = get<double>(doc, "grid", "L", 80.0);
  c.N = get<std::size_t>(doc, "grid", "N", 512);

  FieldConfig& f = c.field;
  f.V0 = get<double>(doc, "well", "V0", 0.0);
  f.D = get<double>(doc, "well", "D", 1.0);
  f.W = get<double>(doc, "well", "W", 0.3);
  f.laser_on = get<bool>(doc, "laser", "enabled", false);
  f.omega = get<double>(doc, "laser", "omega", 0.45);
  c.E0 = get<double>(doc, "laser", "E0", 0.3);
  if (f.laser_on) {
    require(f.omega > 0.0, "laser.omega must be positive");
    f.A0 = laser_amplitude_for_field(c.E0, f.omega);
  } else {
    f.A0 = 0.0;
  }
  const double period = f.laser_on ? 2.0 * std::numbers::pi / f.omega : 0.0;
  f.T = get<double>(doc, "envelope", "T", 0.0);
  f.dT = get<double>(doc, "envelope", "dT", f.laser_on ? 10.0 * period : 20.0);

  c.dt = get<double>(doc, "evolution", "dt", 0.05);
  c.calibrate_dt = get<bool>(doc, "evolution", "calibrate_dt", false);
  c.cutoff = get<double>(doc, "evolution", "cutoff", 4.0);
  c.observations = get<std::size_t>(doc, "evolution", "observations", 40);
  c.probe_ramp = get<double>(doc, "evolution", "probe_ramp", f.laser_on ? 2.0 * period : f.dT);
  c.positive_set = get<bool>(doc, "evolution", "positive_set", true);
  c.checkpoint = get<bool>(doc, "evolution", "checkpoint", false);

  c.decay_box = get<std::size_t>(doc, "decay", "box_factor", f.laser_on ? 32 : 0);
  c.decay_observations = get<std::size_t>(doc, "decay", "observations", 20);

  c.fit.d_min = get<double>(doc, "analysis", "fit_d_min", 0.05);
  c.fit.d_max = get<double>(doc, "analysis", "fit_d_max", 0.8);
  c.fit.min_samples = get<std::size_t>(doc, "analysis", "fit_min_samples", 10);
  c.binning.e_min = get<double>(doc, "analysis", "e_min", 1.0);
  c.binning.e_max = get<double>(doc, "analysis", "e_max", 3.0);
  c.binning.bins = get<std::size_t>(doc, "analysis", "bins", 200);
  c.saturation = get<double>(doc, "analysis", "saturation", c.scenario == Scenario::two_state ? 2.0 : 1.0);

  c.sweep_D = get<std::vector<double>>(doc, "sweep", "D", {});
  c.E_target = get<double>(doc, "sweep", "E_target", -0.4);
  const auto win = get<std::vector<double>>(doc, "sweep", "window", {2.062, 2.197});
  require(win.size() == 2, "sweep.window must hold two numbers");
  c.window = {win[0], win[1]};
  c.tune_v_min = get<double>(doc, "tune", "v_min", 0.0);
  c.tune_v_max = get<double>(doc, "tune", "v_max", 4.0);
  c.tune_scan_step = get<double>(doc, "tune", "scan_step", 0.25);

  c.workers = get<std::size_t>(doc, nullptr, "workers", 1);
  c.output = get<std::string>(doc, nullptr, "output", "out");
  c.seed = get<std::uint64_t>(doc, nullptr, "seed", 0);

  revalidate(c);
  return c;
}

namespace {

// Laser boxes hold an integer number of wavelengths (6 x 2 pi / 0.45) so the
// traveling wave is periodic on the grid.
constexpr const char* kLaserBox = "83.77580409572781";

const std::map<std::string, std::string, std::less<>>& presets() {
  static const std::map<std::string, std::string, std::less<>> p = {
      {"paper-perturbative-A", fmt::format(R"({{
  "scenario": "perturbative", "name": "paper-perturbative-A",
  "grid": {{"L": {0}, "N": 512}},
  "well": {{"V0": 1.726, "D": 3.2, "W": 0.3}},
  "laser": {{"enabled": true, "omega": 0.45, "E0": 0.3}},
  "envelope": {{"T": 2792.526803190927}},
  "evolution": {{"observations": 40}}
}})", kLaserBox)},
      {"paper-perturbative-B", fmt::format(R"({{
  "scenario": "perturbative", "name": "paper-perturbative-B",
  "grid": {{"L": {0}, "N": 512}},
  "well": {{"V0": 1.9, "D": 2.443, "W": 0.3}},
  "laser": {{"enabled": true, "omega": 0.45, "E0": 0.3}},
  "envelope": {{"T": 3420.845333908886}},
  "evolution": {{"observations": 40}}
}})", kLaserBox)},
      {"paper-two-state", fmt::format(R"({{
  "scenario": "two-state", "name": "paper-two-state",
  "grid": {{"L": {0}, "N": 512}},
  "well": {{"V0": 1.584, "D": 4.5, "W": 0.3}},
  "laser": {{"enabled": true, "omega": 0.45, "E0": 0.3}},
  "envelope": {{"T": 1396.263401595463}},
  "evolution": {{"observations": 40}},
  "decay": {{"box_factor": 16}}
}})", kLaserBox)},
      {"paper-supercritical-A", R"({
  "scenario": "supercritical", "name": "paper-supercritical-A",
  "grid": {"L": 320, "N": 2048},
  "well": {"V0": 2.383, "D": 4.0, "W": 0.3},
  "envelope": {"T": 282, "dT": 5},
  "evolution": {"observations": 120}
})"},
      {"paper-supercritical-B", R"({
  "scenario": "supercritical", "name": "paper-supercritical-B",
  "grid": {"L": 320, "N": 2048},
  "well": {"V0": 2.522, "D": 3.2, "W": 0.3},
  "envelope": {"T": 282, "dT": 5},
  "evolution": {"observations": 120}
})"},
      {"vacuum-well", R"({
  "scenario": "perturbative", "name": "vacuum-well",
  "well": {"V0": 1.726, "D": 3.2, "W": 0.3},
  "envelope": {"T": 20},
  "evolution": {"observations": 4, "positive_set": false}
})"},
      {"vacuum-free", R"({
  "scenario": "perturbative", "name": "vacuum-free",
  "well": {"V0": 0.0, "D": 3.2, "W": 0.3},
  "envelope": {"T": 20},
  "evolution": {"observations": 4, "positive_set": false}
})"},
      {"paper-sweep", fmt::format(R"({{
  "scenario": "sweep", "name": "paper-sweep",
  "grid": {{"L": {0}, "N": 512}},
  "laser": {{"enabled": true, "omega": 0.45, "E0": 0.3}},
  "envelope": {{"T": 1996.656664281513}},
  "decay": {{"box_factor": 16, "observations": 12}},
  "analysis": {{"fit_d_max": 0.97}},
  "sweep": {{"D": [2.0, 2.443, 2.8, 3.2, 3.6, 4.0, 5.0, 6.0], "E_target": -0.4}}
}})", kLaserBox)},
  };
  return p;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [k, _] : presets()) names.push_back(k);
  return names;
}

std::string preset_text(std::string_view name) {
  const auto it = presets().find(name);
  if (it == presets().end())
    throw ConfigError(fmt::format("unknown preset '{}'; known: {}", name, fmt::join(preset_names(), ", ")));
  return it->second;
}

RunConfig load_preset(std::string_view name) { return parse_config(preset_text(name)); }

}  // namespace cqft
