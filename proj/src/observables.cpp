#include "cqft/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <utility>
#include <stdexcept>

#include "cqft/kernels.hpp"

namespace cqft {

namespace {
cplx unit_phase(std::size_t jk, std::size_t n) {
  const double a = 2.0 * std::numbers::pi * static_cast<double>(jk % n) / static_cast<double>(n);
  return {std::cos(a), std::sin(a)};
}
}  // namespace

FreeBasis::FreeBasis(const Grid& grid) : grid_(grid), fft_(grid.size()) {
  const std::size_t n = grid_.size();
  plus_up_.resize(n);
  plus_lo_.resize(n);
  minus_up_.resize(n);
  minus_lo_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double p = grid_.p(k);
    const double e = free_energy(p);
    const double big = std::sqrt((e + 1.0) / (2.0 * e));
    const double small = p / std::sqrt(2.0 * e * (e + 1.0));
    plus_up_[k] = big;
    plus_lo_[k] = small;
    minus_up_[k] = -small;
    minus_lo_[k] = big;
  }
}

double FreeBasis::energy(Sign s, std::size_t k) const {
  const double e = free_energy(grid_.p(k));
  return s == Sign::positive ? e : -e;
}

void FreeBasis::fill_state(std::size_t k, Sign s, SpinorField& out) const {
  const std::size_t n = grid_.size();
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  const double u0 = upper(s, k) * norm;
  const double u1 = lower(s, k) * norm;
  for (std::size_t j = 0; j < n; ++j) {
    const cplx ph = unit_phase(j * k, n);
    out.upper()[j] = u0 * ph;
    out.lower()[j] = u1 * ph;
  }
}

SpinorField FreeBasis::state(std::size_t k, Sign s) const {
  SpinorField psi(grid_.size());
  fill_state(k, s, psi);
  return psi;
}

void FreeBasis::amplitudes(const SpinorField& psi, cplx* plus, cplx* minus,
                           AlignedComplex& work) const {
  const std::size_t n = grid_.size();
  work.resize(2 * n);
  std::copy(psi.data().begin(), psi.data().end(), work.begin());
  fft_.forward(work.data());
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  const auto& kern = simd::active_kernels();
  kern.project_real(work.data(), work.data() + n, plus_up_.data(), plus_lo_.data(), plus, n);
  kern.project_real(work.data(), work.data() + n, minus_up_.data(), minus_lo_.data(), minus, n);
  for (std::size_t k = 0; k < n; ++k) {
    plus[k] *= norm;
    minus[k] *= norm;
  }
}

void FreeBasis::synthesize(Sign s, const cplx* coeff, SpinorField& out) const {
  const std::size_t n = grid_.size();
  const double* u0 = upper_data(s);
  const double* u1 = lower_data(s);
  for (std::size_t k = 0; k < n; ++k) {
    out.upper()[k] = coeff[k] * u0[k];
    out.lower()[k] = coeff[k] * u1[k];
  }
  fft_.backward(out.upper());
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& z : out.data()) z *= norm;
}

std::vector<std::size_t> FreeBasis::modes_within(double p_max) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    if (std::abs(grid_.p(k)) <= p_max + 1e-12) out.push_back(k);
  }
  return out;
}

bool AmplitudeSet::has(Sign s) const {
  return std::any_of(labels.begin(), labels.end(), [s](const EvolvedLabel& l) { return l.sign == s; });
}

AmplitudeSet transition_amplitudes(std::span<const SpinorField> states,
                                   std::span<const EvolvedLabel> labels, const FreeBasis& basis,
                                   double time) {
  if (states.size() != labels.size())
    throw std::invalid_argument("one label per evolved state is required");
  AmplitudeSet amps;
  amps.time = time;
  amps.modes = basis.size();
  amps.labels.assign(labels.begin(), labels.end());
  amps.momenta = basis.grid().momenta();
  amps.plus.resize(amps.modes * states.size());
  amps.minus.resize(amps.modes * states.size());
  AlignedComplex work;
  for (std::size_t m = 0; m < states.size(); ++m) {
    basis.amplitudes(states[m], amps.plus.data() + m * amps.modes,
                     amps.minus.data() + m * amps.modes, work);
  }
  return amps;
}

double SMatrix::trace() const {
  double t = 0.0;
  for (std::size_t k = 0; k < n; ++k) t += s[k * n + k].real();
  return t;
}

SMatrix s_matrix(const AmplitudeSet& amps) {
  const std::size_t n = amps.modes;
  SMatrix out{n, std::vector<cplx>(n * n)};
  for (std::size_t m = 0; m < amps.labels.size(); ++m) {
    if (amps.labels[m].sign != Sign::negative) continue;
    const cplx* g = amps.plus.data() + m * n;
    for (std::size_t c = 0; c < n; ++c) {
      const cplx gc = g[c];
      if (gc == cplx{}) continue;
      cplx* col = out.s.data() + c * n;
      for (std::size_t r = 0; r < n; ++r) col[r] += std::conj(g[r]) * gc;
    }
  }
  return out;
}

double particle_number(const AmplitudeSet& amps) {
  const auto& kern = simd::active_kernels();
  double total = 0.0;
  for (std::size_t m = 0; m < amps.labels.size(); ++m) {
    if (amps.labels[m].sign == Sign::negative)
      total += kern.norm2(amps.plus.data() + m * amps.modes, amps.modes);
  }
  return total;
}

std::vector<double> spatial_density(const SMatrix& s, const FreeBasis& basis) {
  const std::size_t n = s.n;
  if (n != basis.size()) throw std::invalid_argument("S matrix and basis sizes differ");
  SpinorFft fft(n);
  AlignedComplex pair(2 * n);
  std::vector<cplx> twiddle(n);
  for (std::size_t m = 0; m < n; ++m) twiddle[m] = unit_phase(m, n);

  // rho_j = (1/N) sum_c sum_{k,k'} u_c(k) S_{kk'} u_c(k') e^{-2 pi i jk/N} e^{2 pi i jk'/N}
  // The k sum is a forward FFT per column; two columns share one transform.
  std::vector<double> rho(n, 0.0);
  for (int c = 0; c < 2; ++c) {
    const double* u = c == 0 ? basis.upper_data(Sign::positive) : basis.lower_data(Sign::positive);
    std::vector<cplx> acc(n);
    for (std::size_t kp = 0; kp < n; kp += 2) {
      for (std::size_t half = 0; half < 2; ++half) {
        cplx* dst = pair.data() + half * n;
        for (std::size_t k = 0; k < n; ++k) dst[k] = u[k] * s(k, kp + half);
      }
      fft.forward(pair.data());
      for (std::size_t half = 0; half < 2; ++half) {
        const std::size_t col = kp + half;
        const cplx* y = pair.data() + half * n;
        const double w = u[col];
        for (std::size_t j = 0; j < n; ++j) acc[j] += y[j] * (w * twiddle[(j * col) % n]);
      }
    }
    for (std::size_t j = 0; j < n; ++j) rho[j] += acc[j].real();
  }
  const double scale = 1.0 / (static_cast<double>(n) * basis.grid().dx());
  for (auto& r : rho) r *= scale;
  return rho;
}

double MomentumSpectrum::total() const { return std::accumulate(weight.begin(), weight.end(), 0.0); }

namespace {

MomentumSpectrum sorted_spectrum(const std::vector<double>& p, const std::vector<double>& w) {
  std::vector<std::size_t> idx(p.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  MomentumSpectrum out;
  out.p.reserve(p.size());
  out.weight.reserve(p.size());
  for (const auto i : idx) {
    out.p.push_back(p[i]);
    out.weight.push_back(w[i]);
  }
  return out;
}

std::vector<double> column_weights(const AmplitudeSet& amps, const std::vector<cplx>& g, Sign source) {
  const std::size_t n = amps.modes;
  std::vector<double> w(n, 0.0);
  const auto& kern = simd::active_kernels();
  for (std::size_t m = 0; m < amps.labels.size(); ++m) {
    if (amps.labels[m].sign == source) kern.accumulate_abs2(g.data() + m * n, w.data(), n);
  }
  return w;
}

// CDF of the unit hat function on [-1, 1].
double hat_cdf(double u) {
  if (u <= -1.0) return 0.0;
  if (u <= 0.0) return 0.5 * (1.0 + u) * (1.0 + u);
  if (u < 1.0) return 1.0 - 0.5 * (1.0 - u) * (1.0 - u);
  return 1.0;
}

}  // namespace

MomentumSpectrum electron_momentum_spectrum(const AmplitudeSet& amps) {
  return sorted_spectrum(amps.momenta, column_weights(amps, amps.plus, Sign::negative));
}

MomentumSpectrum positron_momentum_spectrum(const AmplitudeSet& amps) {
  if (!amps.has(Sign::positive))
    throw std::invalid_argument("positron spectrum needs the evolved positive-energy set");
  std::vector<double> p(amps.momenta.size());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = -amps.momenta[k];
  return sorted_spectrum(p, column_weights(amps, amps.minus, Sign::positive));
}

double EnergySpectrum::integral() const {
  return std::accumulate(density.begin(), density.end(), 0.0) * bin_width;
}

EnergySpectrum positron_energy_spectrum(const MomentumSpectrum& chi, const EnergyBinning& binning) {
  if (chi.p.size() < 2 || chi.p.size() != chi.weight.size())
    throw std::invalid_argument("energy spectrum needs at least two momentum modes");
  if (binning.bins == 0 || !(binning.e_max > binning.e_min) || binning.e_min < 1.0)
    throw std::invalid_argument("invalid energy binning");
  const double dp = chi.p[1] - chi.p[0];
  if (!(dp > 0.0)) throw std::invalid_argument("momenta must be strictly ascending");

  // Piecewise-linear density through (p_i, w_i / dp) == sum of hats of mass w_i.
  auto cumulative = [&](double p) {
    double f = 0.0;
    for (std::size_t i = 0; i < chi.p.size(); ++i) f += chi.weight[i] * hat_cdf((p - chi.p[i]) / dp);
    return f;
  };
  auto momentum = [](double e) { return std::sqrt(std::max(0.0, e * e - 1.0)); };

  EnergySpectrum out;
  out.bin_width = binning.width();
  out.energy.resize(binning.bins);
  out.density.resize(binning.bins);
  for (std::size_t b = 0; b < binning.bins; ++b) {
    const double e0 = binning.e_min + static_cast<double>(b) * out.bin_width;
    const double e1 = e0 + out.bin_width;
    const double p0 = momentum(e0), p1 = momentum(e1);
    const double mass = (cumulative(p1) - cumulative(p0)) + (cumulative(-p0) - cumulative(-p1));
    out.energy[b] = 0.5 * (e0 + e1);
    out.density[b] = mass / out.bin_width;
  }
  return out;
}

std::vector<double> Occupation::depletion() const {
  std::vector<double> d(occupation.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double ref = reference.empty() ? (energy[i] < -1.0 ? 1.0 : 0.0) : reference[i];
    d[i] = energy[i] < -1.0 ? ref - occupation[i] : occupation[i] - ref;
  }
  return d;
}

Occupation instantaneous_occupation(std::span<const SpinorField> sea, const StaticSpectrum& spec) {
  const auto& kern = simd::active_kernels();
  const std::size_t dim = spec.dimension();
  Occupation occ;
  occ.energy = spec.energies();
  occ.occupation.assign(spec.size(), 0.0);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const cplx* v = spec.vector(i);
    double sum = 0.0;
    for (const auto& psi : sea) {
      if (psi.data().size() != dim) throw std::invalid_argument("state and spectrum grids differ");
      sum += std::norm(kern.dot(v, psi.data().data(), dim));
    }
    occ.occupation[i] = sum;
  }
  return occ;
}

BoundContinuum bound_and_continuum_numbers(const Occupation& occ) {
  std::optional<std::size_t> ground;
  double continuum = 0.0;
  for (std::size_t i = 0; i < occ.energy.size(); ++i) {
    const Band b = classify_energy(occ.energy[i]);
    if (b == Band::gap && (!ground || occ.energy[i] < occ.energy[*ground])) ground = i;
    if (b == Band::positive_continuum) continuum += occ.occupation[i];
  }
  if (!ground) throw std::invalid_argument("spectrum has no gap state");
  return {occ.occupation[*ground], continuum};
}

BoundContinuum bound_and_continuum_numbers(std::span<const SpinorField> sea, const StaticSpectrum& spec) {
  return bound_and_continuum_numbers(instantaneous_occupation(sea, spec));
}

OverlapTable bound_free_overlap(const SpinorField& psi, const FreeBasis& basis) {
  const std::size_t n = basis.size();
  std::vector<cplx> plus(n), minus(n);
  AlignedComplex work;
  basis.amplitudes(psi, plus.data(), minus.data(), work);
  std::vector<std::pair<double, double>> rows;
  rows.reserve(2 * n);
  OverlapTable t;
  for (std::size_t k = 0; k < n; ++k) {
    const double wp = std::norm(plus[k]), wm = std::norm(minus[k]);
    rows.emplace_back(basis.energy(Sign::positive, k), wp);
    rows.emplace_back(basis.energy(Sign::negative, k), wm);
    t.negative_mass += wm;
    t.total += wp + wm;
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [e, w] : rows) {
    t.energy.push_back(e);
    t.weight.push_back(w);
  }
  return t;
}

}  // namespace cqft
