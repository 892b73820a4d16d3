#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "cqft/fft.hpp"
#include "cqft/fields.hpp"
#include "cqft/grid.hpp"
#include "cqft/spinor.hpp"

namespace cqft {

/// Instantaneous field strengths as multipliers of the full-strength well
/// profile and of the laser amplitude A0.
struct Drive {
  double well = 0.0;
  double laser = 0.0;
  friend bool operator==(const Drive&, const Drive&) = default;
};
using DriveFn = std::function<Drive(double t)>;

/// How a state is observed at a schedule time tau.
///  in_field:   as is, fields on.
///  laser_off:  a copy is carried through a cos^2 ramp-down of the laser only
///              (well frozen at its strength at tau), then observed.
///  fields_off: a copy is carried through the cos^2 ramp-down of both fields,
///              i.e. the final state of a run whose plateau ends at tau.
enum class Probe { in_field, laser_off, fields_off };

struct Observation {
  double time = 0.0;
  Probe probe = Probe::in_field;
};

struct Schedule {
  double t_start = 0.0;
  double t_end = 0.0;
  double dt = 0.05;
  std::vector<Observation> observations;

  /// Throws ConfigError unless dt > 0, t_end >= t_start and every
  /// observation lies inside [t_start, t_end].
  void validate() const;

  /// Number of uniform steps covering [t_start, t_end] with step <= dt.
  std::size_t steps() const;
  double step_size() const;
  /// Step index nearest to `t`.
  std::size_t step_index(double t) const;

  /// [-dT, T + dT] at the requested step.
  static Schedule full_run(const FieldConfig& cfg, double dt);
};

/// exp(-i h (sigma_1 p + sigma_3)) per momentum mode, with the 1/N of the
/// unnormalized FFT round trip folded in.
struct KineticFactor {
  KineticFactor(const Grid& grid, double h);
  double h;
  AlignedComplex m00, m01, m10, m11;
};

/// Second-order (Strang) split-operator propagator for
///   H(t) = sigma_1 p + sigma_3 + well(x) g_w(t) + A0 g_l(t) sin(omega (t - x)) sigma_2.
/// Potential factors are exact per grid point, the kinetic factor is exact per
/// momentum mode. Fields in one step are evaluated at its midpoint.
class Propagator {
 public:
  Propagator(const Grid& grid, const FieldConfig& cfg);

  const Grid& grid() const { return grid_; }
  const FieldConfig& config() const { return cfg_; }

  /// Drive of the configured run: both fields follow the envelope f(t).
  Drive drive(double t) const;
  DriveFn run_drive() const;

  /// One Strang step from t to t + dt (dt may be negative).
  void step(SpinorField& psi, double t, double dt) const;

  /// Advances every state of `batch` in lockstep by `steps` steps of `dt`
  /// starting at `t0`. Potential half-steps between consecutive kinetic
  /// steps are fused (they commute), so this is the same product of
  /// unitaries as repeated step() up to rounding.
  void advance(std::span<SpinorField> batch, double t0, double dt, std::size_t steps,
               const DriveFn& drive) const;

  std::shared_ptr<const KineticFactor> kinetic(double h) const;

 private:
  // a(x) and b(x) for V = a + b sigma_2 at time t under `d`.
  void fill_potential(double t, const Drive& d, double* a, double* b) const;
  static void potential_factor(const double* a, const double* b, double h, cplx* diag, cplx* off,
                               std::size_t n);

  Grid grid_;
  FieldConfig cfg_;
  std::vector<double> well_;
  std::vector<double> sin_kx_;
  std::vector<double> cos_kx_;
  SpinorFft fft_;
  mutable std::mutex cache_mutex_;
  mutable std::map<double, std::shared_ptr<const KineticFactor>> kinetic_cache_;
};

/// Drive of a probe branch starting at `tau`: the run drive frozen at tau,
/// with the laser (laser_off) or both fields (fields_off) switched off by a
/// cos^2 ramp of length `ramp`.
DriveFn probe_drive(const Propagator& propagator, Probe probe, double tau, double ramp);

/// Runs fn(0 .. jobs-1) on up to `workers` threads, jobs handed out in index
/// order. The first exception is rethrown after all threads stop.
void parallel_for(std::size_t jobs, std::size_t workers, const std::function<void(std::size_t)>& fn);

struct EvolveOptions {
  std::size_t workers = 1;
  std::size_t batch = 8;  ///< states advanced in lockstep; fixed partition, independent of workers
  double probe_ramp = -1.0;  ///< ramp-down length for probes; < 0 means cfg.dT
};

/// Writes initial state `index` into `out` (already sized to the grid).
using InitialFn = std::function<void(std::size_t index, SpinorField& out)>;

/// Receives the states of one batch at one observation. Called concurrently
/// for different batches; implementations must write only to slots owned by
/// (batch, observation).
using ObservationSink = std::function<void(std::size_t batch, std::size_t first_state,
                                           std::size_t observation,
                                           std::span<const SpinorField> states)>;

/// Streams `count` initial states through `schedule` on a worker pool.
/// Batches are fixed slices [b*batch, (b+1)*batch), so per-batch results do
/// not depend on the worker count. Throws ConvergenceError when the first
/// step of a batch changes a norm by more than 1e-8.
void evolve_stream(std::size_t count, const InitialFn& initial, const Schedule& schedule,
                   const Propagator& propagator, const EvolveOptions& options,
                   const ObservationSink& sink);

/// Evolves a small orthonormal set and returns every observation of every
/// state: result[state][observation]. Throws InvariantError if the input is
/// not orthonormal to 1e-10.
std::vector<std::vector<SpinorField>> evolve(std::span<const SpinorField> initial,
                                             const Schedule& schedule, const Propagator& propagator,
                                             const EvolveOptions& options = {});

/// ||psi_dt - psi_{dt/2}|| / ||psi_{dt/2} - psi_{dt/4}|| after evolving
/// `psi` from t0 over `horizon`. Close to 4 for a second-order scheme.
double richardson_ratio(const Propagator& propagator, const SpinorField& psi, double t0,
                        double horizon, double dt);

struct DtCalibration {
  double dt;
  double ratio;
  int halvings;
};

/// Halves dt (at most `max_halvings` times) until the Richardson ratio lies
/// in [3, 5]. Throws ConvergenceError otherwise.
DtCalibration calibrate_dt(const Propagator& propagator, const SpinorField& psi, double t0,
                           double horizon, double dt, int max_halvings = 4);

}  // namespace cqft
