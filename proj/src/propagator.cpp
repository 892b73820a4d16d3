#include "cqft/propagator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <string>
#include <thread>

#include "cqft/errors.hpp"
#include "cqft/kernels.hpp"

namespace cqft {

double SpinorField::norm() const {
  return simd::active_kernels().norm2(amp_.data(), amp_.size());
}

cplx inner(const SpinorField& a, const SpinorField& b) {
  return simd::active_kernels().dot(a.data().data(), b.data().data(), a.data().size());
}

void Schedule::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step must be positive");
  if (!(t_end >= t_start)) throw ConfigError("schedule end precedes its start");
  for (const auto& o : observations) {
    if (o.time < t_start - 1e-9 || o.time > t_end + 1e-9)
      throw ConfigError("observation time " + std::to_string(o.time) + " outside the schedule");
  }
}

std::size_t Schedule::steps() const {
  const double span = t_end - t_start;
  if (span <= 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
}

double Schedule::step_size() const {
  const auto n = steps();
  return n == 0 ? dt : (t_end - t_start) / static_cast<double>(n);
}

std::size_t Schedule::step_index(double t) const {
  const auto n = steps();
  if (n == 0) return 0;
  const double s = std::round((t - t_start) / step_size());
  return static_cast<std::size_t>(std::clamp(s, 0.0, static_cast<double>(n)));
}

Schedule Schedule::full_run(const FieldConfig& cfg, double dt) {
  Schedule s;
  s.t_start = -cfg.dT;
  s.t_end = cfg.T + cfg.dT;
  s.dt = dt;
  return s;
}

KineticFactor::KineticFactor(const Grid& grid, double step)
    : h(step), m00(grid.size()), m01(grid.size()), m10(grid.size()), m11(grid.size()) {
  const double scale = 1.0 / static_cast<double>(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double p = grid.p(k);
    const double e = free_energy(p);
    const double c = std::cos(e * h) * scale;
    const double s = std::sin(e * h) / e * scale;
    m00[k] = {c, -s};
    m11[k] = {c, s};
    m01[k] = {0.0, -s * p};
    m10[k] = m01[k];
  }
}

Propagator::Propagator(const Grid& grid, const FieldConfig& cfg)
    : grid_(grid), cfg_(cfg), fft_(grid.size()) {
  cfg_.validate();
  const auto n = grid_.size();
  well_.resize(n);
  sin_kx_.assign(n, 0.0);
  cos_kx_.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    well_[j] = well_profile(grid_.x(j), cfg_);
    if (cfg_.laser_on) {
      sin_kx_[j] = std::sin(cfg_.omega * grid_.x(j));
      cos_kx_[j] = std::cos(cfg_.omega * grid_.x(j));
    }
  }
}

Drive Propagator::drive(double t) const {
  const double f = envelope(t, cfg_);
  return {f, cfg_.laser_on ? f : 0.0};
}

DriveFn Propagator::run_drive() const {
  return [this](double t) { return drive(t); };
}

std::shared_ptr<const KineticFactor> Propagator::kinetic(double h) const {
  std::lock_guard lock(cache_mutex_);
  auto& slot = kinetic_cache_[h];
  if (!slot) slot = std::make_shared<const KineticFactor>(grid_, h);
  return slot;
}

void Propagator::fill_potential(double t, const Drive& d, double* a, double* b) const {
  const auto n = grid_.size();
  for (std::size_t j = 0; j < n; ++j) a[j] = well_[j] * d.well;
  if (cfg_.laser_on && d.laser != 0.0) {
    // sin(w (t - x)) = sin(wt) cos(wx) - cos(wt) sin(wx)
    const double amp = cfg_.A0 * d.laser;
    const double st = std::sin(cfg_.omega * t);
    const double ct = std::cos(cfg_.omega * t);
    for (std::size_t j = 0; j < n; ++j) b[j] = amp * (st * cos_kx_[j] - ct * sin_kx_[j]);
  } else {
    std::fill(b, b + n, 0.0);
  }
}

void Propagator::potential_factor(const double* a, const double* b, double h, cplx* diag,
                                  cplx* off, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double ca = std::cos(a[j] * h);
    const double sa = -std::sin(a[j] * h);
    if (b[j] == 0.0) {
      diag[j] = {ca, sa};
      off[j] = {0.0, 0.0};
    } else {
      const double cb = std::cos(b[j] * h);
      const double sb = std::sin(b[j] * h);
      diag[j] = {ca * cb, sa * cb};
      off[j] = {ca * sb, sa * sb};
    }
  }
}

void Propagator::advance(std::span<SpinorField> batch, double t0, double dt, std::size_t steps,
                         const DriveFn& drive) const {
  if (steps == 0 || batch.empty()) return;
  const auto& kern = simd::active_kernels();
  const auto n = grid_.size();
  const auto kin = kinetic(dt);

  std::vector<double> a_prev(n), b_prev(n), a_next(n), b_next(n), a_eff(n), b_eff(n);
  AlignedComplex diag(n), off(n);

  auto apply_potential = [&] {
    for (auto& psi : batch) kern.rotate_sigma2(psi.upper(), psi.lower(), diag.data(), off.data(), n);
  };

  double mid = t0 + 0.5 * dt;
  Drive d_prev = drive(mid);
  fill_potential(mid, d_prev, a_prev.data(), b_prev.data());
  potential_factor(a_prev.data(), b_prev.data(), 0.5 * dt, diag.data(), off.data(), n);
  apply_potential();

  // With the laser off and an unchanged well strength the fused factor is
  // the same from step to step; reuse it instead of recomputing.
  bool have_fused = false;
  Drive fused_key{};

  for (std::size_t s = 0; s < steps; ++s) {
    for (auto& psi : batch) {
      fft_.forward(psi.upper());
      kern.apply_2x2(psi.upper(), psi.lower(), kin->m00.data(), kin->m01.data(), kin->m10.data(),
                     kin->m11.data(), n);
      fft_.backward(psi.upper());
    }
    if (s + 1 < steps) {
      const double next_mid = t0 + (static_cast<double>(s + 1) + 0.5) * dt;
      const Drive d_next = drive(next_mid);
      const bool static_step = (!cfg_.laser_on || (d_prev.laser == 0.0 && d_next.laser == 0.0)) &&
                               d_prev.well == d_next.well;
      if (!(static_step && have_fused && fused_key == d_next)) {
        fill_potential(next_mid, d_next, a_next.data(), b_next.data());
        for (std::size_t j = 0; j < n; ++j) {
          a_eff[j] = 0.5 * (a_prev[j] + a_next[j]);
          b_eff[j] = 0.5 * (b_prev[j] + b_next[j]);
        }
        potential_factor(a_eff.data(), b_eff.data(), dt, diag.data(), off.data(), n);
        std::swap(a_prev, a_next);
        std::swap(b_prev, b_next);
        have_fused = static_step;
        fused_key = d_next;
      }
      d_prev = d_next;
      mid = next_mid;
    } else {
      potential_factor(a_prev.data(), b_prev.data(), 0.5 * dt, diag.data(), off.data(), n);
    }
    apply_potential();
  }
}

void Propagator::step(SpinorField& psi, double t, double dt) const {
  advance(std::span<SpinorField>(&psi, 1), t, dt, 1, run_drive());
}

DriveFn probe_drive(const Propagator& prop, Probe probe, double tau, double ramp) {
  const Drive at = prop.drive(tau);
  if (probe == Probe::laser_off) {
    return [at, tau, ramp](double t) { return Drive{at.well, at.laser * ramp_down(t, tau, ramp)}; };
  }
  return [at, tau, ramp](double t) {
    const double r = ramp_down(t, tau, ramp);
    return Drive{at.well * r, at.laser * r};
  };
}

void parallel_for(std::size_t jobs, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto loop = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t job = next.fetch_add(1);
      if (job >= jobs) return;
      try {
        fn(job);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(jobs, 1));
  if (threads == 1) {
    loop();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(loop);
  }
  if (error) std::rethrow_exception(error);
}

void evolve_stream(std::size_t count, const InitialFn& initial, const Schedule& schedule,
                   const Propagator& propagator, const EvolveOptions& options,
                   const ObservationSink& sink) {
  schedule.validate();
  if (options.batch == 0) throw ConfigError("batch size must be positive");
  const auto n = propagator.grid().size();
  const double dt = schedule.step_size();
  const double ramp = options.probe_ramp < 0.0 ? propagator.config().dT : options.probe_ramp;

  std::vector<std::size_t> order(schedule.observations.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return schedule.observations[a].time < schedule.observations[b].time;
  });

  const std::size_t batches = (count + options.batch - 1) / options.batch;
  const DriveFn main_drive = propagator.run_drive();

  parallel_for(batches, options.workers, [&](std::size_t b) {
    const std::size_t first = b * options.batch;
    const std::size_t m = std::min(options.batch, count - first);
    std::vector<SpinorField> states(m, SpinorField(n));
    for (std::size_t i = 0; i < m; ++i) initial(first + i, states[i]);

    std::size_t cur = 0;
    auto time_at = [&](std::size_t s) { return schedule.t_start + static_cast<double>(s) * dt; };
    auto move_to = [&](std::size_t target) {
      if (target <= cur) return;
      if (cur == 0) {
        std::vector<double> before(m);
        for (std::size_t i = 0; i < m; ++i) before[i] = states[i].norm();
        propagator.advance(states, time_at(0), dt, 1, main_drive);
        for (std::size_t i = 0; i < m; ++i) {
          if (!(std::abs(states[i].norm() - before[i]) <= 1e-8))
            throw ConvergenceError("single-step norm error above 1e-8; time step too large");
        }
        cur = 1;
      }
      propagator.advance(states, time_at(cur), dt, target - cur, main_drive);
      cur = target;
    };

    for (const std::size_t oi : order) {
      const auto& obs = schedule.observations[oi];
      move_to(schedule.step_index(obs.time));
      if (obs.probe == Probe::in_field || ramp <= 0.0) {
        sink(b, first, oi, states);
        continue;
      }
      std::vector<SpinorField> branch = states;
      const double tau = time_at(cur);
      const auto nb = static_cast<std::size_t>(std::ceil(ramp / schedule.dt - 1e-9));
      propagator.advance(branch, tau, ramp / static_cast<double>(nb), nb,
                         probe_drive(propagator, obs.probe, tau, ramp));
      sink(b, first, oi, branch);
    }
  });
}

std::vector<std::vector<SpinorField>> evolve(std::span<const SpinorField> initial,
                                             const Schedule& schedule, const Propagator& propagator,
                                             const EvolveOptions& options) {
  for (std::size_t i = 0; i < initial.size(); ++i) {
    for (std::size_t j = i; j < initial.size(); ++j) {
      const cplx ov = inner(initial[i], initial[j]);
      const double expect = i == j ? 1.0 : 0.0;
      if (std::abs(ov - expect) > 1e-10)
        throw InvariantError("initial states are not orthonormal");
    }
  }
  std::vector<std::vector<SpinorField>> out(initial.size(),
                                            std::vector<SpinorField>(schedule.observations.size()));
  evolve_stream(
      initial.size(), [&](std::size_t i, SpinorField& psi) { psi = initial[i]; }, schedule,
      propagator, options,
      [&](std::size_t, std::size_t first, std::size_t obs, std::span<const SpinorField> states) {
        for (std::size_t i = 0; i < states.size(); ++i) out[first + i][obs] = states[i];
      });
  return out;
}

namespace {
double distance(const SpinorField& a, const SpinorField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) s += std::norm(a.data()[i] - b.data()[i]);
  return std::sqrt(s);
}
}  // namespace

double richardson_ratio(const Propagator& propagator, const SpinorField& psi, double t0,
                        double horizon, double dt) {
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::round(horizon / dt)));
  const double h = horizon / static_cast<double>(steps);
  std::vector<SpinorField> runs(3, psi);
  for (std::size_t r = 0; r < 3; ++r) {
    const std::size_t mult = std::size_t{1} << r;
    propagator.advance(std::span<SpinorField>(&runs[r], 1), t0, h / static_cast<double>(mult),
                       steps * mult, propagator.run_drive());
  }
  const double coarse = distance(runs[0], runs[1]);
  const double fine = distance(runs[1], runs[2]);
  return fine > 0.0 ? coarse / fine : 0.0;
}

DtCalibration calibrate_dt(const Propagator& propagator, const SpinorField& psi, double t0,
                           double horizon, double dt, int max_halvings) {
  for (int h = 0; h <= max_halvings; ++h) {
    const double ratio = richardson_ratio(propagator, psi, t0, horizon, dt);
    if (ratio >= 3.0 && ratio <= 5.0) return {dt, ratio, h};
    dt *= 0.5;
  }
  throw ConvergenceError("Richardson ratio did not settle in [3, 5] after halving dt");
}

}  // namespace cqft
