#include "cqft/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <fstream>
#include <numbers>

#include <fftw3.h>
#include <fmt/format.h>
#include <openssl/evp.h>

#include "cqft/errors.hpp"
#include "cqft/io.hpp"
#include "cqft/kernels.hpp"

namespace cqft {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void note(const Progress& p, const std::string& msg) {
  if (p) p(msg);
}

void add_check(RunReport& r, std::string name, double value, double tolerance) {
  r.checks.push_back({std::move(name), value, tolerance, std::isfinite(value) && value <= tolerance});
}

// |a - b| scaled so that vanishing quantities compare absolutely.
double rel_gap(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

std::vector<double> plateau_times(double T, std::size_t count) {
  if (T <= 0.0) return {0.0};
  std::vector<double> t(count);
  for (std::size_t i = 0; i < count; ++i) t[i] = T * static_cast<double>(i + 1) / static_cast<double>(count);
  return t;
}

bool is_laser_box(const Grid& g, const FieldConfig& f) {
  if (!f.laser_on) return true;
  const double waves = g.length() * f.omega / (2.0 * std::numbers::pi);
  return std::abs(waves - std::round(waves)) < 1e-9 * std::max(1.0, waves);
}

std::string sha256_text(const std::string& text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

void static_spectrum_stage(RunReport& r, const StaticSpectrum& spec) {
  r.energies = spec.energies();
  r.localization.resize(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) r.localization[i] = spec.localization(i);
  for (const auto& b : bound_states(spec)) {
    r.gap_energies.push_back(b.energy);
    r.gap_widths.push_back(b.width);
  }
  if (r.cfg.scenario == Scenario::supercritical) r.quasibound = locate_quasibound(spec, r.cfg.field);
}

// Per (observation, batch) partial results of the forward stage.
struct Partial {
  double number = 0.0;
  double chi = 0.0;
  double density = 0.0;
  double unitarity = 0.0;
  double bound = 0.0;
  double continuum = 0.0;
  double occ_max = 0.0;
  std::vector<double> rho;  // final snapshot only
  std::vector<double> occ;  // final snapshot only
};

void forward_stage(RunReport& r, const StaticSpectrum* spec, const Progress& progress) {
  const RunConfig& cfg = r.cfg;
  const Grid& grid = r.grid;
  const std::size_t n = grid.size();
  const FreeBasis basis(grid);
  const Propagator prop(grid, cfg.field);
  const auto& kern = simd::active_kernels();

  Schedule sched = Schedule::full_run(cfg.field, r.dt);
  const auto taus = plateau_times(cfg.field.T, cfg.observations);
  const bool with_occ = spec != nullptr;
  const Probe occ_probe = cfg.field.laser_on ? Probe::laser_off : Probe::in_field;
  std::vector<std::size_t> foff_index, occ_index;
  for (double tau : taus) {
    foff_index.push_back(sched.observations.size());
    sched.observations.push_back({tau, Probe::fields_off});
    if (with_occ) {
      occ_index.push_back(sched.observations.size());
      sched.observations.push_back({tau, occ_probe});
    }
  }
  const std::size_t last = taus.size() - 1;

  const auto modes = basis.modes_within(cfg.cutoff);
  const std::size_t m = modes.size();
  r.evolved = m;
  EvolveOptions opts;
  opts.workers = cfg.workers;
  opts.probe_ramp = cfg.probe_ramp;
  const std::size_t batches = (m + opts.batch - 1) / opts.batch;

  std::optional<std::size_t> ground;
  std::vector<std::size_t> continuum;
  if (with_occ) {
    ground = spec->ground_index();
    for (std::size_t i = 0; i < spec->size(); ++i) {
      if (spec->energy(i) > 1.0) continuum.push_back(i);
    }
  }

  // Final amplitudes: negative set columns [0, m), positive set [m, 2m).
  const std::size_t columns = cfg.positive_set ? 2 * m : m;
  AmplitudeSet final_amps;
  final_amps.time = taus.back();
  final_amps.modes = n;
  final_amps.momenta = grid.momenta();
  final_amps.plus.assign(n * columns, cplx{});
  final_amps.minus.assign(n * columns, cplx{});
  for (const auto k : modes) final_amps.labels.push_back({k, Sign::negative});
  if (cfg.positive_set) {
    for (const auto k : modes) final_amps.labels.push_back({k, Sign::positive});
  }
  if (cfg.checkpoint) {
    r.final_states.assign(m, SpinorField(n));
    r.final_modes.assign(modes.begin(), modes.end());
  }

  std::vector<std::vector<Partial>> neg(taus.size(), std::vector<Partial>(batches));
  std::vector<std::vector<Partial>> occ(taus.size(), std::vector<Partial>(batches));

  Stopwatch sw;
  evolve_stream(
      m, [&](std::size_t i, SpinorField& psi) { basis.fill_state(modes[i], Sign::negative, psi); }, sched,
      prop, opts,
      [&](std::size_t b, std::size_t first, std::size_t o, std::span<const SpinorField> states) {
        const auto f_it = std::find(foff_index.begin(), foff_index.end(), o);
        if (f_it != foff_index.end()) {
          const auto slot = static_cast<std::size_t>(f_it - foff_index.begin());
          Partial& p = neg[slot][b];
          std::vector<cplx> plus(n), minus(n);
          std::vector<double> chi(n, 0.0);
          p.rho.assign(n, 0.0);
          AlignedComplex work;
          SpinorField proj(n);
          for (std::size_t s = 0; s < states.size(); ++s) {
            basis.amplitudes(states[s], plus.data(), minus.data(), work);
            const double np = kern.norm2(plus.data(), n);
            p.number += np;
            p.unitarity = std::max(p.unitarity, std::abs(np + kern.norm2(minus.data(), n) - 1.0));
            kern.accumulate_abs2(plus.data(), chi.data(), n);
            basis.synthesize(Sign::positive, plus.data(), proj);
            kern.accumulate_abs2(proj.upper(), p.rho.data(), n);
            kern.accumulate_abs2(proj.lower(), p.rho.data(), n);
            if (slot == last) {
              std::copy(plus.begin(), plus.end(), final_amps.plus.begin() + (first + s) * n);
              std::copy(minus.begin(), minus.end(), final_amps.minus.begin() + (first + s) * n);
              if (cfg.checkpoint) r.final_states[first + s] = states[s];
            }
          }
          for (double c : chi) p.chi += c;
          for (double c : p.rho) p.density += c;
          if (slot != last) p.rho.clear();
          return;
        }
        const auto o_it = std::find(occ_index.begin(), occ_index.end(), o);
        const auto slot = static_cast<std::size_t>(o_it - occ_index.begin());
        Partial& p = occ[slot][b];
        const std::size_t dim = spec->dimension();
        p.occ.assign(spec->size(), 0.0);
        for (std::size_t i = 0; i < spec->size(); ++i) {
          const cplx* v = spec->vector(i);
          for (const auto& psi : states) p.occ[i] += std::norm(kern.dot(v, psi.data().data(), dim));
        }
        if (ground) p.bound = p.occ[*ground];
        for (const auto i : continuum) p.continuum += p.occ[i];
        p.occ_max = *std::max_element(p.occ.begin(), p.occ.end());
        if (slot != last) p.occ.clear();
      });
  r.timings["forward_negative"] = sw.seconds();
  note(progress, fmt::format("forward: {} negative states in {:.1f} s", m, sw.seconds()));

  std::vector<std::vector<double>> pos(taus.size(), std::vector<double>(batches, 0.0));
  if (cfg.positive_set) {
    Stopwatch swp;
    Schedule psched = Schedule::full_run(cfg.field, r.dt);
    for (double tau : taus) psched.observations.push_back({tau, Probe::fields_off});
    evolve_stream(
        m, [&](std::size_t i, SpinorField& psi) { basis.fill_state(modes[i], Sign::positive, psi); }, psched,
        prop, opts,
        [&](std::size_t b, std::size_t first, std::size_t o, std::span<const SpinorField> states) {
          std::vector<cplx> plus(n), minus(n);
          std::vector<double> chi(n, 0.0);
          AlignedComplex work;
          for (std::size_t s = 0; s < states.size(); ++s) {
            basis.amplitudes(states[s], plus.data(), minus.data(), work);
            kern.accumulate_abs2(minus.data(), chi.data(), n);
            if (o == last) {
              std::copy(plus.begin(), plus.end(), final_amps.plus.begin() + (m + first + s) * n);
              std::copy(minus.begin(), minus.end(), final_amps.minus.begin() + (m + first + s) * n);
            }
          }
          double sum = 0.0;
          for (double c : chi) sum += c;
          pos[o][b] = sum;
        });
    r.timings["forward_positive"] = swp.seconds();
    note(progress, fmt::format("forward: {} positive states in {:.1f} s", m, swp.seconds()));
  }

  // Fixed-order reduction over batches.
  double unitarity = 0.0, identity = 0.0, charge = 0.0, occ_max = 0.0;
  for (std::size_t o = 0; o < taus.size(); ++o) {
    Snapshot snap;
    snap.time = taus[o];
    for (const auto& p : neg[o]) {
      snap.number += p.number;
      snap.chi_minus += p.chi;
      snap.density += p.density;
      snap.unitarity = std::max(snap.unitarity, p.unitarity);
    }
    snap.chi_plus = kNaN;
    if (cfg.positive_set) {
      snap.chi_plus = 0.0;
      for (double v : pos[o]) snap.chi_plus += v;
      charge = std::max(charge, std::abs(snap.chi_minus - snap.chi_plus));
    }
    unitarity = std::max(unitarity, snap.unitarity);
    identity = std::max({identity, rel_gap(snap.number, snap.chi_minus), rel_gap(snap.number, snap.density)});
    r.snapshots.push_back(snap);
    r.N.t.push_back(snap.time);
    r.N.v.push_back(snap.number);
    if (with_occ) {
      double nb = 0.0, nc = 0.0;
      for (const auto& p : occ[o]) {
        nb += p.bound;
        nc += p.continuum;
        occ_max = std::max(occ_max, p.occ_max);
      }
      r.Nc_forward.t.push_back(snap.time);
      r.Nc_forward.v.push_back(nc);
      if (ground) {
        r.Nb_forward.t.push_back(snap.time);
        r.Nb_forward.v.push_back(nb);
      }
    }
  }
  r.final_time = taus.back();

  r.density.assign(n, 0.0);
  for (const auto& p : neg[last]) {
    for (std::size_t j = 0; j < n; ++j) r.density[j] += p.rho[j];
  }
  for (auto& v : r.density) v /= grid.dx();
  if (with_occ) {
    r.occupation.energy = spec->energies();
    r.occupation.occupation.assign(spec->size(), 0.0);
    for (const auto& p : occ[last]) {
      for (std::size_t i = 0; i < p.occ.size(); ++i) r.occupation.occupation[i] += p.occ[i];
    }
    if (cfg.field.laser_on) {
      // Same sea through the well turn-on alone; the well is static afterwards.
      Stopwatch swr;
      const double t0 = -cfg.field.dT;
      const std::size_t steps = sched.step_index(0.0);
      const double h = sched.step_size();
      const DriveFn well_only = [&prop](double t) { return Drive{prop.drive(t).well, 0.0}; };
      std::vector<std::vector<double>> ref(batches);
      parallel_for(batches, cfg.workers, [&](std::size_t b) {
        const std::size_t first = b * opts.batch;
        const std::size_t count = std::min(opts.batch, m - first);
        std::vector<SpinorField> states(count, SpinorField(n));
        for (std::size_t s = 0; s < count; ++s) basis.fill_state(modes[first + s], Sign::negative, states[s]);
        prop.advance(states, t0, h, steps, well_only);
        ref[b].assign(spec->size(), 0.0);
        for (std::size_t i = 0; i < spec->size(); ++i) {
          for (const auto& psi : states) ref[b][i] += std::norm(kern.dot(spec->vector(i), psi.data().data(), spec->dimension()));
        }
      });
      r.occupation.reference.assign(spec->size(), 0.0);
      for (const auto& part : ref) {
        for (std::size_t i = 0; i < part.size(); ++i) r.occupation.reference[i] += part[i];
      }
      r.timings["reference_occupation"] = swr.seconds();
    }
  }

  Stopwatch sws;
  const SMatrix S = s_matrix(final_amps);
  r.trace_s = S.trace();
  const auto rho_s = spatial_density(S, basis);
  r.density_from_s = 0.0;
  for (double v : rho_s) r.density_from_s += v * grid.dx();
  const auto eig = hermitian_eigenvalues(HermitianMatrix{S.n, S.s});
  r.s_min_eigenvalue = eig.front();
  r.chi_minus = electron_momentum_spectrum(final_amps);
  if (cfg.positive_set) {
    r.chi_plus = positron_momentum_spectrum(final_amps);
    r.s_plus = positron_energy_spectrum(r.chi_plus, cfg.binning);
  }
  r.timings["observables"] = sws.seconds();

  const double n_final = r.snapshots.back().number;
  add_check(r, "column_unitarity", unitarity, 1e-6);
  add_check(r, "identity_N_chi_rho", identity, 1e-6);
  add_check(r, "identity_trace_S",
            std::max(rel_gap(r.trace_s, n_final), rel_gap(r.density_from_s, n_final)), 1e-6);
  add_check(r, "s_matrix_psd", -r.s_min_eigenvalue, 1e-9);
  if (cfg.positive_set) add_check(r, "charge_conservation", charge, 1e-4);
  if (with_occ) add_check(r, "occupation_bound", occ_max - 1.0, 1e-6);
}

void decay_stage(RunReport& r, const StaticSpectrum& spec, const Progress& progress) {
  const RunConfig& cfg = r.cfg;
  const auto gi = spec.ground_index();
  if (!gi) throw ConfigError("no gap state: the decay stage needs a bound ground state");
  std::vector<std::size_t> levels{*gi};
  if (cfg.scenario == Scenario::two_state) {
    if (*gi + 1 >= spec.size() || classify_energy(spec.energy(*gi + 1)) != Band::gap)
      throw ConfigError("two-state scenario needs two gap states");
    levels.push_back(*gi + 1);
  }
  AdjointOptions opts;
  opts.box_factor = cfg.decay_box;
  opts.dt = r.dt;
  opts.probe_ramp = cfg.probe_ramp;
  opts.workers = cfg.workers;
  Stopwatch sw;
  r.levels = adjoint_level_occupations(spec, levels, plateau_times(cfg.field.T, cfg.decay_observations), opts);
  r.timings["decay_stage"] = sw.seconds();
  note(progress, fmt::format("decay stage: {} levels x {} times in a {:.1f} box, {:.1f} s", levels.size(),
                             r.levels->times.size(), r.levels->box.length(), sw.seconds()));

  // Positrons leave the well at about 0.6 c; they come back after one box length.
  const double back = r.levels->box.length() / 0.6;
  if (back < cfg.field.T + 2.0 * cfg.field.dT)
    r.warnings.push_back(fmt::format("positrons may return to the well after t = {:.0f}, before the run ends", back));

  TimeSeries total{r.levels->times, r.levels->occupation[0]};
  if (levels.size() == 2) {
    for (std::size_t i = 0; i < total.size(); ++i) total.v[i] += r.levels->occupation[1][i];
  }
  FitWindow window = cfg.fit;
  window.t_min = 0.0;
  r.decay = decay_probability(total, cfg.saturation);
  try {
    r.fit = fit_decay_rate(r.decay, window);
  } catch (const ConvergenceError& e) {
    r.fit_note = e.what();
  }
  if (cfg.scenario == Scenario::two_state) {
    r.decay_single = decay_probability(TimeSeries{r.levels->times, r.levels->occupation[0]}, 1.0);
    try {
      r.fit_single = fit_decay_rate(r.decay_single, window);
    } catch (const ConvergenceError& e) {
      r.fit_single_note = e.what();
    }
  }
}

}  // namespace

Grid spectrum_grid(const Grid& run) {
  if (run.size() <= 512) return run;
  return make_grid(run.dx() * 512.0, 512);
}

SpinorField embed_centered(const SpinorField& psi, const Grid& small, const Grid& large) {
  if (std::abs(small.dx() - large.dx()) > 1e-12 * small.dx())
    throw ConfigError("embedding needs equal grid spacings");
  if (large.size() < small.size() || (large.size() - small.size()) % 2 != 0)
    throw ConfigError("embedding box does not fit");
  const std::size_t off = (large.size() - small.size()) / 2;
  SpinorField out(large.size());
  std::copy(psi.upper(), psi.upper() + small.size(), out.upper() + off);
  std::copy(psi.lower(), psi.lower() + small.size(), out.lower() + off);
  return out;
}

LevelOccupations adjoint_level_occupations(const StaticSpectrum& spec, const std::vector<std::size_t>& levels,
                                           const std::vector<double>& taus, const AdjointOptions& options) {
  if (options.box_factor == 0) throw ConfigError("adjoint stage needs a positive box factor");
  const Grid& small = spec.grid();
  const FieldConfig& cfg = spec.config();
  const Grid big = make_grid(small.length() * static_cast<double>(options.box_factor),
                             small.size() * options.box_factor);
  const Propagator prop(big, cfg);
  const FreeBasis basis(big);
  const Schedule sched = Schedule::full_run(cfg, options.dt);
  const double h = sched.step_size();

  std::vector<SpinorField> init;
  LevelOccupations out{big, {}, {}, {}};
  for (const auto l : levels) {
    // The level must be confined to the small box, otherwise embedding cuts it.
    const SpinorField psi = spec.state(l);
    double edge = 0.0;
    for (std::size_t j : {std::size_t{0}, std::size_t{1}, small.size() - 2, small.size() - 1})
      edge += std::norm(psi.upper()[j]) + std::norm(psi.lower()[j]);
    if (edge > 1e-8) throw InvariantError(fmt::format("gap level {} reaches the spectrum box edge", l));
    init.push_back(embed_centered(psi, small, big));
    out.energies.push_back(spec.energy(l));
  }
  for (const double tau : taus) out.times.push_back(sched.t_start + static_cast<double>(sched.step_index(tau)) * h);
  out.occupation.assign(levels.size(), std::vector<double>(taus.size(), 0.0));

  const std::size_t nt = taus.size();
  parallel_for(levels.size() * nt, options.workers, [&](std::size_t job) {
    const std::size_t l = job / nt, i = job % nt;
    const std::size_t idx = sched.step_index(taus[i]);
    const double tau = out.times[i];
    std::vector<SpinorField> v{init[l]};
    if (options.probe_ramp > 0.0) {
      const auto nb = static_cast<std::size_t>(std::ceil(options.probe_ramp / options.dt - 1e-9));
      prop.advance(v, tau + options.probe_ramp, -options.probe_ramp / static_cast<double>(nb), nb,
                   probe_drive(prop, Probe::laser_off, tau, options.probe_ramp));
    }
    prop.advance(v, tau, -h, idx, prop.run_drive());
    std::vector<cplx> plus(big.size()), minus(big.size());
    AlignedComplex work;
    basis.amplitudes(v[0], plus.data(), minus.data(), work);
    out.occupation[l][i] = simd::active_kernels().norm2(minus.data(), big.size());
  });
  return out;
}

bool RunReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string run_id(const RunConfig& cfg) {
  nlohmann::json j = cfg.resolved;
  j.erase("workers");
  j.erase("output");
  return sha256_text(j.dump()).substr(0, 16);
}

RunReport run_spectrum(const RunConfig& cfg) {
  RunReport r;
  r.cfg = cfg;
  r.grid = make_grid(cfg.L, cfg.N);
  r.spec_grid = spectrum_grid(r.grid);
  r.dt = cfg.dt;
  const auto spec = solve_static_spectrum(r.spec_grid, cfg.field);
  static_spectrum_stage(r, spec);
  return r;
}

RunReport run(const RunConfig& cfg, const Progress& progress) {
  if (cfg.scenario == Scenario::sweep) throw ConfigError("sweep configs run through the sweep command");
  Stopwatch total;
  RunReport r;
  r.cfg = cfg;
  r.grid = make_grid(cfg.L, cfg.N);
  r.spec_grid = spectrum_grid(r.grid);
  r.dt = cfg.dt;
  const FieldConfig& f = cfg.field;

  if (cfg.L < 10.0 * (f.D + 2.0 * f.W))
    r.warnings.push_back(fmt::format("box L = {} is shorter than 10 (D + 2W)", cfg.L));
  if (!is_laser_box(r.grid, f))
    r.warnings.push_back("box length is not a whole number of laser wavelengths; the wave is cut at the edge");

  Stopwatch sw;
  const auto spec = solve_static_spectrum(r.spec_grid, f);
  static_spectrum_stage(r, spec);
  r.timings["spectrum"] = sw.seconds();
  note(progress, fmt::format("spectrum: {} states on L = {:.3f}, N = {} in {:.1f} s", spec.size(),
                             r.spec_grid.length(), r.spec_grid.size(), sw.seconds()));
  if (const auto gi = spec.ground_index()) r.ground_overlap = bound_free_overlap(spec.state(*gi), FreeBasis(r.spec_grid));

  if (cfg.calibrate_dt) {
    const FreeBasis basis(r.grid);
    const Propagator prop(r.grid, f);
    const double horizon = f.dT > 0.0 ? std::min(f.dT, 20.0) : 10.0;
    r.calibration = calibrate_dt(prop, basis.state(0, Sign::negative), -f.dT, horizon, cfg.dt);
    r.dt = r.calibration->dt;
    note(progress, fmt::format("dt calibrated to {} (ratio {:.3f})", r.dt, r.calibration->ratio));
  }

  const bool same_grid = r.spec_grid == r.grid;
  forward_stage(r, same_grid ? &spec : nullptr, progress);

  if (f.laser_on && cfg.decay_box > 0 &&
      (cfg.scenario == Scenario::perturbative || cfg.scenario == Scenario::two_state)) {
    decay_stage(r, spec, progress);
  }
  if (cfg.scenario == Scenario::supercritical) {
    r.decay = decay_probability(r.N, 1.0);
    FitWindow window = cfg.fit;
    window.t_min = 0.0;
    try {
      r.fit = fit_decay_rate(r.decay, window);
    } catch (const ConvergenceError& e) {
      r.fit_note = e.what();
    }
  }
  if (cfg.scenario == Scenario::perturbative && r.N.size() >= 9) {
    r.slope_N = late_slope(r.N);
    if (r.Nc_forward.size() >= 9) r.slope_Nc = late_slope(r.Nc_forward);
  }
  if (cfg.positive_set && r.s_plus.integral() > 0.0) {
    const auto top = std::max_element(r.s_plus.density.begin(), r.s_plus.density.end());
    r.peak_energy = r.s_plus.energy[static_cast<std::size_t>(top - r.s_plus.density.begin())];
    try {
      r.s_plus_width = fwhm(r.s_plus.energy, r.s_plus.density);
    } catch (const ConvergenceError&) {
    }
    if (r.quasibound) {
      r.quasibound_mismatch = std::abs(*r.peak_energy + r.quasibound->energy) > 0.02;
      if (r.quasibound_mismatch)
        r.warnings.push_back(fmt::format("positron spectrum peak {:.4f} and quasibound energy {:.4f} differ by more than 0.02",
                                         *r.peak_energy, r.quasibound->energy));
    }
  }
  r.timings["total"] = total.seconds();
  return r;
}

namespace {

nlohmann::json fit_json(const std::optional<DecayFit>& fit, const std::string& why) {
  if (!fit) return {{"error", why}};
  return {{"gamma", fit->gamma},   {"residual", fit->residual}, {"r2", fit->r2},
          {"t_lo", fit->t_lo},     {"t_hi", fit->t_hi},         {"samples", fit->samples}};
}

nlohmann::json line_json(const std::optional<LineFit>& f) {
  if (!f) return nullptr;
  return {{"slope", f->slope}, {"intercept", f->intercept}, {"r2", f->r2}, {"rms", f->rms}};
}

template <class T>
nlohmann::json opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json RunReport::summary() const {
  nlohmann::json s;
  s["scenario"] = scenario_name(cfg.scenario);
  s["dt"] = dt;
  s["evolved_states"] = evolved;
  s["gap_energies"] = gap_energies;
  s["gap_widths"] = gap_widths;
  if (quasibound) s["quasibound"] = {{"energy", quasibound->energy}, {"localization", quasibound->localization}};
  if (!snapshots.empty()) {
    s["N_final"] = snapshots.back().number;
    s["chi_plus_final"] = std::isfinite(snapshots.back().chi_plus) ? nlohmann::json(snapshots.back().chi_plus)
                                                                    : nlohmann::json(nullptr);
  }
  if (!Nb_forward.v.empty()) s["Nb_forward_final"] = Nb_forward.v.back();
  if (!Nc_forward.v.empty()) s["Nc_forward_final"] = Nc_forward.v.back();
  if (levels) {
    s["decay_box"] = levels->box.length();
    nlohmann::json finals = nlohmann::json::array();
    for (const auto& o : levels->occupation) finals.push_back(o.back());
    s["level_occupation_final"] = finals;
  }
  if (fit || !fit_note.empty()) s["decay_fit"] = fit_json(fit, fit_note);
  if (fit_single || !fit_single_note.empty()) s["decay_fit_single"] = fit_json(fit_single, fit_single_note);
  s["fit_window"] = {{"d_min", cfg.fit.d_min}, {"d_max", cfg.fit.d_max}, {"min_samples", cfg.fit.min_samples}};
  s["slope_N"] = line_json(slope_N);
  s["slope_Nc"] = line_json(slope_Nc);
  s["s_plus_peak"] = opt(peak_energy);
  if (s_plus_width) s["s_plus_fwhm"] = s_plus_width->width;
  s["s_plus_bin_width"] = s_plus.bin_width;
  s["quasibound_mismatch"] = quasibound_mismatch;
  s["trace_S"] = trace_s;
  s["s_min_eigenvalue"] = s_min_eigenvalue;
  s["ok"] = ok();
  return s;
}

nlohmann::json SweepReport::summary() const {
  nlohmann::json s;
  if (fit) {
    s["C"] = fit->C;
    s["log_prefactor"] = fit->log_prefactor;
    s["r2"] = fit->r2;
    s["rms"] = fit->rms;
    s["rows_used"] = fit->used;
    s["decreasing"] = fit->decreasing;
  } else {
    s["error"] = fit_note;
  }
  nlohmann::json excluded = nlohmann::json::array();
  for (const auto& r : rows) {
    if (r.in_window || !r.ok) excluded.push_back({{"D", r.D}, {"W_b", r.W_b}, {"in_window", r.in_window}, {"note", r.note}});
  }
  s["excluded"] = excluded;
  s["window"] = {cfg.window.lo, cfg.window.hi};
  return s;
}

SweepReport run_sweep(const RunConfig& cfg, const Progress& progress) {
  if (cfg.scenario != Scenario::sweep) throw ConfigError("run_sweep needs scenario sweep");
  SweepReport rep;
  rep.cfg = cfg;
  const Grid grid = spectrum_grid(make_grid(cfg.L, cfg.N));
  TuneOptions topts;
  topts.v_min = cfg.tune_v_min;
  topts.v_max = cfg.tune_v_max;
  topts.scan_step = cfg.tune_scan_step;
  FitWindow window = cfg.fit;
  window.t_min = 0.0;
  for (const double D : cfg.sweep_D) {
    Stopwatch sw;
    SweepRow row;
    row.D = D;
    row.W = cfg.field.W;
    try {
      const TuneResult tr = tune_well_depth(D, cfg.field.W, cfg.E_target, grid, topts);
      FieldConfig f = cfg.field;
      f.V0 = tr.V0;
      f.D = D;
      row.V0 = tr.V0;
      const auto spec = solve_static_spectrum(grid, f);
      const auto gi = spec.ground_index();
      if (!gi) throw ConvergenceError("tuned well has no gap state");
      row.E_g = spec.energy(*gi);
      row.W_b = state_width(spec.state(*gi), grid);
      AdjointOptions opts;
      opts.box_factor = cfg.decay_box;
      opts.dt = cfg.dt;
      opts.probe_ramp = cfg.probe_ramp;
      opts.workers = cfg.workers;
      const auto occ = adjoint_level_occupations(spec, {*gi}, plateau_times(f.T, cfg.decay_observations), opts);
      const auto d = decay_probability(TimeSeries{occ.times, occ.occupation[0]}, 1.0);
      const DecayFit fit = fit_decay_rate(d, window);
      row.gamma = fit.gamma;
      row.t_lo = fit.t_lo;
      row.t_hi = fit.t_hi;
      row.residual = fit.residual;
      row.ok = tr.V0 < 2.0;
      if (!row.ok) row.note = "tuned depth V0 >= 2 is supercritical; kept out of the fit";
    } catch (const ConvergenceError& e) {
      row.note = e.what();
    } catch (const InvariantError& e) {
      row.note = e.what();
    }
    rep.timings[fmt::format("D={}", D)] = sw.seconds();
    note(progress, fmt::format("sweep D = {}: V0 = {:.4f}, W_b = {:.4f}, Gamma = {:.4e} ({:.1f} s){}", D, row.V0,
                               row.W_b, row.gamma, sw.seconds(), row.note.empty() ? "" : " [" + row.note + "]"));
    rep.rows.push_back(row);
  }
  try {
    rep.fit = fit_sweep(rep.rows, cfg.window);
  } catch (const ConvergenceError& e) {
    rep.fit_note = e.what();
  }
  return rep;
}

namespace {

io::Metadata metadata(const RunConfig& cfg) {
  const FieldConfig& f = cfg.field;
  return {{"run_id", run_id(cfg)},
          {"name", cfg.name},
          {"scenario", std::string(scenario_name(cfg.scenario))},
          {"units", "hbar = c = m_e = 1; x in lambda_c, t in t_pl, E in m_e c^2"},
          {"grid", fmt::format("L={} N={}", cfg.L, cfg.N)},
          {"well", fmt::format("V0={} D={} W={}", f.V0, f.D, f.W)},
          {"laser", f.laser_on ? fmt::format("omega={} E0={} A0={}", f.omega, cfg.E0, f.A0) : "off"},
          {"envelope", fmt::format("T={} dT={}", f.T, f.dT)},
          {"evolution", fmt::format("dt={} cutoff={} probe_ramp={}", cfg.dt, cfg.cutoff, cfg.probe_ramp)}};
}

nlohmann::json versions() {
  return {{"cqft", kVersion},
          {"fftw", std::string(fftw_version)},
          {"compiler", __VERSION__},
          {"kernels", std::string(simd::active_kernels().name)}};
}

}  // namespace

void write_report(const RunReport& r, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto meta = metadata(r.cfg);

  {
    std::vector<double> band(r.energies.size()), width(r.energies.size(), kNaN);
    for (std::size_t i = 0; i < r.energies.size(); ++i) {
      const Band b = classify_energy(r.energies[i]);
      band[i] = b == Band::negative_continuum ? -1.0 : b == Band::gap ? 0.0 : 1.0;
      for (std::size_t g = 0; g < r.gap_energies.size(); ++g) {
        if (r.gap_energies[g] == r.energies[i]) width[i] = r.gap_widths[g];
      }
    }
    auto m = meta;
    m.emplace_back("spectrum_grid", fmt::format("L={} N={}", r.spec_grid.length(), r.spec_grid.size()));
    m.emplace_back("band", "-1 negative continuum, 0 gap, 1 positive continuum");
    if (!r.energies.empty())
      io::write_csv(dir / "spectrum.csv", m, {{"E", "band", "localization", "width"}, {r.energies, band, r.localization, width}});
  }
  if (!r.snapshots.empty()) {
    io::Table t{{"t", "N", "chi_minus", "density", "chi_plus", "unitarity", "N_b", "N_c"}, {}};
    t.data.resize(t.columns.size());
    for (std::size_t i = 0; i < r.snapshots.size(); ++i) {
      const auto& s = r.snapshots[i];
      t.data[0].push_back(s.time);
      t.data[1].push_back(s.number);
      t.data[2].push_back(s.chi_minus);
      t.data[3].push_back(s.density);
      t.data[4].push_back(s.chi_plus);
      t.data[5].push_back(s.unitarity);
      t.data[6].push_back(i < r.Nb_forward.size() ? r.Nb_forward.v[i] : kNaN);
      t.data[7].push_back(i < r.Nc_forward.size() ? r.Nc_forward.v[i] : kNaN);
    }
    auto m = meta;
    m.emplace_back("probes", "N, chi, density: fields ramped off after t; N_b, N_c: laser ramped off (well kept)");
    m.emplace_back("evolved_states", std::to_string(r.evolved));
    io::write_csv(dir / "series.csv", m, t);

    io::write_csv(dir / "electron_momentum.csv", meta, {{"p", "chi"}, {r.chi_minus.p, r.chi_minus.weight}});
    if (!r.chi_plus.p.empty()) {
      io::write_csv(dir / "positron_momentum.csv", meta, {{"p", "chi"}, {r.chi_plus.p, r.chi_plus.weight}});
      auto e = meta;
      e.emplace_back("bin_width", fmt::format("{}", r.s_plus.bin_width));
      io::write_csv(dir / "positron_energy.csv", e, {{"E", "S"}, {r.s_plus.energy, r.s_plus.density}});
    }
    io::write_csv(dir / "density.csv", meta, {{"x", "rho"}, {r.grid.positions(), r.density}});
    if (!r.occupation.energy.empty()) {
      io::write_csv(dir / "occupation.csv", meta,
                    {{"E", "occupation", "reference", "depletion"},
                     {r.occupation.energy, r.occupation.occupation,
                      r.occupation.reference.empty() ? std::vector<double>(r.occupation.energy.size(), kNaN)
                                                     : r.occupation.reference,
                      r.occupation.depletion()}});
    }
  }
  if (r.ground_overlap)
    io::write_csv(dir / "ground_overlap.csv", meta, {{"E", "weight"}, {r.ground_overlap->energy, r.ground_overlap->weight}});
  if (r.levels) {
    io::Table t{{"t"}, {r.levels->times}};
    for (std::size_t l = 0; l < r.levels->occupation.size(); ++l) {
      t.columns.push_back(fmt::format("N_{}", l));
      t.data.push_back(r.levels->occupation[l]);
    }
    auto m = meta;
    m.emplace_back("decay_box", fmt::format("L={} N={}", r.levels->box.length(), r.levels->box.size()));
    m.emplace_back("level_energies", fmt::format("{}", fmt::join(r.levels->energies, " ")));
    io::write_csv(dir / "levels.csv", m, t);
  }
  if (r.decay.size() > 0) {
    io::Table t{{"t", "d"}, {r.decay.t, r.decay.v}};
    if (r.decay_single.size() == r.decay.size()) {
      t.columns.push_back("d_single");
      t.data.push_back(r.decay_single.v);
    }
    auto m = meta;
    m.emplace_back("saturation", fmt::format("{}", r.cfg.saturation));
    io::write_csv(dir / "decay.csv", m, t);
  }
  if (r.cfg.checkpoint && !r.final_states.empty())
    io::write_checkpoint(dir / "checkpoint.bin", r.grid, r.final_time, r.final_modes, r.final_states);

  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"passed", c.passed}});
  nlohmann::json manifest;
  manifest["run_id"] = run_id(r.cfg);
  manifest["config_source"] = r.cfg.source;
  manifest["config"] = r.cfg.resolved;
  manifest["versions"] = versions();
  manifest["grid"] = {{"L", r.grid.length()}, {"N", r.grid.size()}, {"dx", r.grid.dx()}, {"dp", r.grid.dp()}};
  manifest["timings"] = r.timings;
  manifest["checks"] = checks;
  manifest["warnings"] = r.warnings;
  manifest["summary"] = r.summary();
  manifest["files"] = io::list_files(dir, dir / "manifest.json");
  io::write_json(dir / "manifest.json", manifest);
}

void write_sweep(const SweepReport& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::Table t{{"D", "V0", "W", "E_g", "W_b", "gamma", "t_lo", "t_hi", "residual", "ok", "in_window", "deviation", "deviates"}, {}};
  t.data.resize(t.columns.size());
  for (const auto& r : rep.rows) {
    const double row[] = {r.D, r.V0, r.W, r.E_g, r.W_b, r.gamma, r.t_lo, r.t_hi, r.residual,
                          r.ok ? 1.0 : 0.0, r.in_window ? 1.0 : 0.0, r.deviation, r.deviates ? 1.0 : 0.0};
    for (std::size_t c = 0; c < t.columns.size(); ++c) t.data[c].push_back(row[c]);
  }
  io::write_csv(dir / "sweep.csv", metadata(rep.cfg), t);
  io::write_json(dir / "sweep_summary.json", rep.summary());
  nlohmann::json manifest;
  manifest["run_id"] = run_id(rep.cfg);
  manifest["config_source"] = rep.cfg.source;
  manifest["config"] = rep.cfg.resolved;
  manifest["versions"] = versions();
  manifest["timings"] = rep.timings;
  manifest["summary"] = rep.summary();
  manifest["files"] = io::list_files(dir, dir / "manifest.json");
  io::write_json(dir / "manifest.json", manifest);
}

nlohmann::json analyze_directory(const std::filesystem::path& dir, const FitWindow& window,
                                 std::optional<double> saturation) {
  namespace fs = std::filesystem;
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw ConfigError("no manifest.json in " + dir.string());
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("unreadable manifest: ") + e.what());
  }
  const std::string scenario = manifest.at("config").at("scenario").get<std::string>();
  const double sat = saturation.value_or(manifest.at("config").at("analysis").at("saturation").get<double>());
  FitWindow w = window;
  w.t_min = 0.0;

  nlohmann::json out;
  out["scenario"] = scenario;
  out["window"] = {{"d_min", w.d_min}, {"d_max", w.d_max}, {"min_samples", w.min_samples}};
  out["saturation"] = sat;
  TimeSeries n;
  if (fs::exists(dir / "levels.csv")) {
    const auto csv = io::read_csv(dir / "levels.csv");
    n.t = csv.table.column("t");
    n.v.assign(n.t.size(), 0.0);
    const std::size_t levels = sat == 2.0 ? csv.table.columns.size() - 1 : 1;
    for (std::size_t l = 0; l < levels; ++l) {
      const auto& c = csv.table.column(fmt::format("N_{}", l));
      for (std::size_t i = 0; i < c.size(); ++i) n.v[i] += c[i];
    }
    out["source"] = "levels.csv";
  } else if (fs::exists(dir / "series.csv")) {
    const auto csv = io::read_csv(dir / "series.csv");
    n.t = csv.table.column("t");
    n.v = csv.table.column("N");
    out["source"] = "series.csv";
    if (n.size() >= 9) out["slope_N"] = line_json(late_slope(n));
  } else {
    throw ConfigError("no series to analyze in " + dir.string());
  }
  const auto d = decay_probability(n, sat);
  try {
    out["decay_fit"] = fit_json(fit_decay_rate(d, w), "");
  } catch (const ConvergenceError& e) {
    out["decay_fit"] = {{"error", e.what()}};
  }
  if (fs::exists(dir / "positron_energy.csv")) {
    const auto csv = io::read_csv(dir / "positron_energy.csv");
    try {
      const auto pw = fwhm(csv.table.column("E"), csv.table.column("S"));
      out["s_plus_fwhm"] = pw.width;
      out["s_plus_peak"] = pw.peak;
    } catch (const ConvergenceError& e) {
      out["s_plus_fwhm"] = {{"error", e.what()}};
    }
  }
  io::write_json(dir / "analysis.json", out);
  return out;
}

}  // namespace cqft
