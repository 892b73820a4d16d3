#include "cqft/spectrum.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cqft/errors.hpp"
#include "cqft/kernels.hpp"

namespace cqft {

HermitianMatrix build_static_hamiltonian(const Grid& grid, const FieldConfig& cfg) {
  const std::size_t n = grid.size();
  HermitianMatrix h{2 * n, std::vector<cplx>(4 * n * n)};

  // Spectral derivative: P_{jl} = c_{(j-l) mod N}, c_m = (1/N) sum_k p_k e^{2 pi i k m / N}.
  std::vector<cplx> c(n);
  for (std::size_t m = 0; m < n; ++m) {
    cplx s{};
    for (std::size_t k = 0; k < n; ++k) {
      const double phase = 2.0 * std::numbers::pi * static_cast<double>((k * m) % n) /
                           static_cast<double>(n);
      s += grid.p(k) * cplx{std::cos(phase), std::sin(phase)};
    }
    c[m] = s / static_cast<double>(n);
  }

  for (std::size_t j = 0; j < n; ++j) {
    const double v = well_profile(grid.x(j), cfg);
    h(j, j) = 1.0 + v;
    h(n + j, n + j) = -1.0 + v;
    for (std::size_t l = 0; l < n; ++l) {
      const cplx pjl = c[(j + n - l) % n];
      h(j, n + l) = pjl;
      h(n + j, l) = pjl;
    }
  }
  return h;
}

std::string_view band_name(Band b) {
  switch (b) {
    case Band::negative_continuum: return "negative_continuum";
    case Band::gap: return "gap";
    case Band::positive_continuum: return "positive_continuum";
  }
  return "?";
}

Band classify_energy(double e) {
  if (e < -1.0) return Band::negative_continuum;
  if (e > 1.0) return Band::positive_continuum;
  return Band::gap;
}

StaticSpectrum::StaticSpectrum(Grid grid, FieldConfig cfg, std::vector<double> energies,
                               AlignedComplex vectors)
    : grid_(std::move(grid)), cfg_(cfg), energies_(std::move(energies)), vectors_(std::move(vectors)) {}

SpinorField StaticSpectrum::state(std::size_t i) const {
  SpinorField psi(grid_.size());
  std::copy_n(vector(i), dimension(), psi.data().begin());
  return psi;
}

double StaticSpectrum::localization(std::size_t i) const {
  const double edge = 0.5 * cfg_.D + 2.0 * cfg_.W;
  const std::size_t n = grid_.size();
  const cplx* v = vector(i);
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (std::abs(grid_.x(j)) < edge) s += std::norm(v[j]) + std::norm(v[n + j]);
  }
  return s;
}

std::optional<std::size_t> StaticSpectrum::ground_index() const {
  for (std::size_t i = 0; i < energies_.size(); ++i) {
    if (band(i) == Band::gap) return i;
  }
  return std::nullopt;
}

namespace {

struct EigenResult {
  std::vector<double> values;
  AlignedComplex vectors;
};

EigenResult hermitian_eigen(HermitianMatrix h, bool want_vectors, std::optional<std::pair<double, double>> range) {
  const auto n = static_cast<lapack_int>(h.n);
  lapack_int found = 0;
  std::vector<double> w(h.n);
  AlignedComplex z(want_vectors ? h.n * h.n : 1);
  std::vector<lapack_int> support(2 * h.n);
  const double vl = range ? range->first : 0.0;
  const double vu = range ? range->second : 0.0;
  const lapack_int info = LAPACKE_zheevr(
      LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', range ? 'V' : 'A', 'U', n,
      reinterpret_cast<lapack_complex_double*>(h.a.data()), n, vl, vu, 0, 0, 0.0, &found, w.data(),
      reinterpret_cast<lapack_complex_double*>(z.data()), n, support.data());
  if (info != 0) throw ConvergenceError("zheevr failed with info=" + std::to_string(info));
  w.resize(static_cast<std::size_t>(found));
  if (want_vectors) z.resize(h.n * static_cast<std::size_t>(found));
  return {std::move(w), std::move(z)};
}

}  // namespace

std::vector<double> hermitian_eigenvalues(HermitianMatrix h) {
  return hermitian_eigen(std::move(h), false, std::nullopt).values;
}

StaticSpectrum solve_static_spectrum(const Grid& grid, const FieldConfig& cfg) {
  auto eig = hermitian_eigen(build_static_hamiltonian(grid, cfg), true, std::nullopt);
  return StaticSpectrum(grid, cfg, std::move(eig.values), std::move(eig.vectors));
}

std::vector<double> static_energies_in(const Grid& grid, const FieldConfig& cfg, double lo,
                                       double hi) {
  return hermitian_eigen(build_static_hamiltonian(grid, cfg), false, std::pair{lo, hi}).values;
}

double mean_position(const SpinorField& psi, const Grid& grid) {
  const std::size_t n = grid.size();
  double m = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    m += grid.x(j) * (std::norm(psi.upper()[j]) + std::norm(psi.lower()[j]));
  return m;
}

double state_width(const SpinorField& psi, const Grid& grid) {
  const double norm = psi.norm();
  if (std::abs(norm - 1.0) > 1e-6)
    throw InvariantError("state_width needs a normalized state, norm=" + std::to_string(norm));
  const std::size_t n = grid.size();
  double m1 = 0.0;
  double m2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double rho = std::norm(psi.upper()[j]) + std::norm(psi.lower()[j]);
    m1 += grid.x(j) * rho;
    m2 += grid.x(j) * grid.x(j) * rho;
  }
  return 2.0 * std::sqrt(std::max(0.0, m2 - m1 * m1));
}

std::vector<BoundState> bound_states(const StaticSpectrum& spec) {
  constexpr double eps = 1e-6;
  std::vector<BoundState> out;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const double e = spec.energy(i);
    if (e > -1.0 + eps && e < 1.0 - eps) {
      SpinorField psi = spec.state(i);
      const double w = state_width(psi, spec.grid());
      out.push_back({e, std::move(psi), w});
    }
  }
  return out;
}

namespace {

constexpr double kGapEps = 1e-9;

struct GapScan {
  std::vector<double> gap;  // ascending gap levels
  std::size_t dived = 0;    // states pulled below -1 by the well
};

GapScan gap_levels(double V0, double D, double W, const Grid& grid) {
  FieldConfig cfg;
  cfg.V0 = V0;
  cfg.D = D;
  cfg.W = W;
  // Without a well exactly N levels lie above -1; each level that dived
  // into the negative continuum removes one.
  const auto above = static_energies_in(grid, cfg, -1.0 + kGapEps, 1e300);
  GapScan scan;
  scan.dived = grid.size() > above.size() ? grid.size() - above.size() : 0;
  for (double e : above) {
    if (e < 1.0 - kGapEps) scan.gap.push_back(e);
  }
  return scan;
}

// Generic scan-then-bisect on a quantity q(V0) that decreases through
// `target` (increasing=false) or increases through it (increasing=true).
template <class Q>
TuneResult bracket_and_bisect(Q&& q, double target, bool increasing, const TuneOptions& opts,
                              const char* what) {
  int evals = 0;
  auto eval = [&](double v) {
    ++evals;
    return q(v);
  };
  auto past = [&](double value) { return increasing ? value > target : value < target; };

  double lo = opts.v_min;
  std::optional<double> q_lo;
  std::optional<double> hi;
  std::optional<double> q_hi;
  for (double v = opts.v_min; v <= opts.v_max + 1e-12; v += opts.scan_step) {
    const auto value = eval(v);
    if (!value) continue;
    if (past(*value)) {
      if (!q_lo) break;  // already past the target at the first valid point
      hi = v;
      q_hi = value;
      break;
    }
    lo = v;
    q_lo = value;
  }
  if (!hi || !q_lo)
    throw ConvergenceError(std::string("no bracket for ") + what + " in the V0 scan range");

  double v_mid = 0.5 * (lo + *hi);
  double q_mid = *q_lo;
  for (int it = 0; it < 200; ++it) {
    v_mid = 0.5 * (lo + *hi);
    const auto value = eval(v_mid);
    if (!value) throw ConvergenceError(std::string("tuned state vanished inside the bracket for ") + what);
    q_mid = *value;
    const double a = std::min(*q_lo, *q_hi);
    const double b = std::max(*q_lo, *q_hi);
    if (q_mid < a - 1e-9 || q_mid > b + 1e-9)
      throw InvariantError(std::string(what) + " is not monotone in V0 over the bracket");
    if (std::abs(q_mid - target) < opts.tolerance) break;
    if (past(q_mid)) {
      hi = v_mid;
      q_hi = q_mid;
    } else {
      lo = v_mid;
      q_lo = q_mid;
    }
    if (*hi - lo < 1e-12) break;
  }
  return {v_mid, q_mid, evals};
}

}  // namespace

TuneResult tune_well_depth(double D, double W, double E_target, const Grid& grid,
                           const TuneOptions& opts) {
  if (!(E_target > -1.0 && E_target < 1.0))
    throw ConfigError("target energy must lie inside the gap (-1, 1)");
  auto ground = [&](double v) -> std::optional<double> {
    const auto scan = gap_levels(v, D, W, grid);
    if (scan.dived > 0 || scan.gap.empty()) return std::nullopt;
    return scan.gap.front();
  };
  return bracket_and_bisect(ground, E_target, false, opts, "ground-state energy");
}

TuneResult tune_level_spacing(double D, double W, double spacing, const Grid& grid,
                              const TuneOptions& opts) {
  if (!(spacing > 0.0 && spacing < 2.0)) throw ConfigError("level spacing must lie in (0, 2)");
  // Only meaningful while the ground state is still a gap state; once it
  // dives the two lowest gap levels are a different pair.
  auto gap01 = [&](double v) -> std::optional<double> {
    const auto scan = gap_levels(v, D, W, grid);
    if (scan.dived > 0 || scan.gap.size() < 2) return std::nullopt;
    return scan.gap[1] - scan.gap[0];
  };
  return bracket_and_bisect(gap01, spacing, true, opts, "level spacing E1 - E0");
}

Quasibound locate_quasibound(const StaticSpectrum& spec, const FieldConfig& cfg) {
  if (!(cfg.V0 > 2.0))
    throw ConfigError("quasibound states need a supercritical well (V0 > 2)");
  const double lo = 1.0 - cfg.V0;
  std::optional<Quasibound> best;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const double e = spec.energy(i);
    if (e <= lo || e >= -1.0) continue;
    const double p_in = spec.localization(i);
    if (!best || p_in > best->localization) best = Quasibound{e, p_in, i};
  }
  if (!best) throw ConfigError("no negative-continuum state inside the embedding window");
  return *best;
}

}  // namespace cqft
