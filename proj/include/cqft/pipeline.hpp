#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cqft/analysis.hpp"
#include "cqft/config.hpp"
#include "cqft/grid.hpp"
#include "cqft/observables.hpp"
#include "cqft/propagator.hpp"
#include "cqft/spectrum.hpp"

namespace cqft {

/// One invariant check; a failed check makes the run exit with status 3.
struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = true;
};

using Progress = std::function<void(const std::string&)>;

/// Grid on which the static spectrum is solved: the run grid itself up to 512
/// points, otherwise the centered 512-point sub-box with the same spacing.
Grid spectrum_grid(const Grid& run);

/// Copies a state from a small box into the center of a larger box with the
/// same spacing (zero elsewhere). Throws ConfigError if the spacings differ or
/// the small box does not fit.
SpinorField embed_centered(const SpinorField& psi, const Grid& small, const Grid& large);

struct LevelOccupations {
  Grid box;
  std::vector<double> times;
  std::vector<std::vector<double>> occupation;  ///< [level][time]
  std::vector<double> energies;                 ///< static energy per level
};

struct AdjointOptions {
  std::size_t box_factor = 32;
  double dt = 0.05;
  double probe_ramp = 0.0;
  std::size_t workers = 1;
};

/// Occupation of static gap levels by the whole evolved Dirac sea,
///   N_n(tau) = sum over every free negative-energy state m of |<n|U_tau|m>|^2
///            = || P_- U_tau^dagger n ||^2,
/// obtained by evolving each level backward from the end of its probe to the
/// start of the run. U_tau is the run up to tau followed by the laser_off
/// probe (the well stays, the laser is ramped off over `probe_ramp`). The
/// levels are taken from `spec` and embedded into a box `box_factor` times
/// larger, so emitted positrons do not return to the well within the run.
LevelOccupations adjoint_level_occupations(const StaticSpectrum& spec,
                                           const std::vector<std::size_t>& levels,
                                           const std::vector<double>& taus,
                                           const AdjointOptions& options);

/// Per-snapshot consistency of the streamed observables.
struct Snapshot {
  double time = 0.0;
  double number = 0.0;        ///< sum |G(+;-)|^2
  double chi_minus = 0.0;     ///< sum of chi^-
  double density = 0.0;       ///< integral of rho
  double chi_plus = 0.0;      ///< sum of chi^+ (NaN without the positive set)
  double unitarity = 0.0;     ///< max |column norm - 1|
};

struct RunReport {
  RunConfig cfg;
  Grid grid{8.0, 8};
  Grid spec_grid{8.0, 8};
  double dt = 0.0;
  std::optional<DtCalibration> calibration;
  std::size_t evolved = 0;  ///< negative states evolved in the forward stage

  std::vector<double> energies;
  std::vector<double> localization;
  std::vector<double> gap_widths;  ///< per gap state, ascending
  std::vector<double> gap_energies;
  std::optional<Quasibound> quasibound;

  std::vector<Snapshot> snapshots;        ///< fields_off probes
  TimeSeries N;                           ///< forward N(tau)
  TimeSeries Nb_forward, Nc_forward;      ///< forward sea, occupations (empty without spectrum on the run grid)
  double final_time = 0.0;
  MomentumSpectrum chi_minus, chi_plus;
  EnergySpectrum s_plus;
  std::vector<double> density;
  Occupation occupation;
  std::optional<OverlapTable> ground_overlap;
  double trace_s = 0.0;
  double density_from_s = 0.0;
  double s_min_eigenvalue = 0.0;

  std::optional<LevelOccupations> levels;  ///< adjoint stage
  TimeSeries decay;                        ///< d(T) used for the decay fit
  std::optional<DecayFit> fit;
  std::string fit_note;
  TimeSeries decay_single;                 ///< two-state: |1 - N_b|
  std::optional<DecayFit> fit_single;
  std::string fit_single_note;
  std::optional<LineFit> slope_N, slope_Nc;
  std::optional<PeakWidth> s_plus_width;
  std::optional<double> peak_energy;
  bool quasibound_mismatch = false;

  std::vector<std::uint64_t> final_modes;   ///< checkpoint: free mode per stored state
  std::vector<SpinorField> final_states;    ///< negative set after the last fields_off probe

  std::vector<Check> checks;
  std::vector<std::string> warnings;
  nlohmann::json timings = nlohmann::json::object();

  bool ok() const;
  nlohmann::json summary() const;
};

/// Static spectrum, forward evolution with probes, observables, adjoint
/// decay stage (laser scenarios) and analysis. Sweep configs are rejected;
/// use run_sweep.
RunReport run(const RunConfig& cfg, const Progress& progress = {});

struct SweepReport {
  RunConfig cfg;
  std::vector<SweepRow> rows;
  std::optional<SweepFit> fit;
  std::string fit_note;
  nlohmann::json timings = nlohmann::json::object();
  nlohmann::json summary() const;
};

SweepReport run_sweep(const RunConfig& cfg, const Progress& progress = {});

/// Static spectrum and gap-state table only.
RunReport run_spectrum(const RunConfig& cfg);

/// Writes CSV files, an optional checkpoint and manifest.json into `dir`.
void write_report(const RunReport& report, const std::filesystem::path& dir);
void write_sweep(const SweepReport& report, const std::filesystem::path& dir);

/// Re-runs the decay fit on a stored run directory with `window`; writes
/// analysis.json next to the data and returns it.
nlohmann::json analyze_directory(const std::filesystem::path& dir, const FitWindow& window,
                                 std::optional<double> saturation);

/// Deterministic identifier of a resolved configuration (ignores workers and output).
std::string run_id(const RunConfig& cfg);

}  // namespace cqft
