#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cqft/kernels.hpp"
#include "cqft/observables.hpp"
#include "cqft/propagator.hpp"

using namespace cqft;

namespace {

FieldConfig laser_well() {
  FieldConfig f;
  f.V0 = 1.726;
  f.D = 3.2;
  f.W = 0.3;
  f.laser_on = true;
  f.omega = 0.45;
  f.A0 = 0.3 / 0.45;
  f.T = 8.0;
  f.dT = 4.0;
  return f;
}

struct Evolved {
  AmplitudeSet amps;
  std::vector<SpinorField> sea;
};

// Every free state of a small box evolved to the end of the run.
Evolved evolve_all(const Grid& g, const FieldConfig& f, double t) {
  const Propagator prop(g, f);
  const FreeBasis basis(g);
  std::vector<SpinorField> init;
  std::vector<EvolvedLabel> labels;
  for (Sign s : {Sign::negative, Sign::positive}) {
    for (std::size_t k = 0; k < g.size(); ++k) {
      init.push_back(basis.state(k, s));
      labels.push_back({k, s});
    }
  }
  Schedule sched = Schedule::full_run(f, 0.05);
  sched.observations.push_back({t, Probe::in_field});
  const auto out = evolve(init, sched, prop);
  std::vector<SpinorField> last;
  for (const auto& o : out) last.push_back(o[0]);
  Evolved e{transition_amplitudes(last, labels, basis, t), {}};
  e.sea.assign(last.begin(), last.begin() + static_cast<long>(g.size()));
  return e;
}

}  // namespace

TEST_CASE("free basis spinors") {
  const Grid g = make_grid(20.0, 32);
  const FreeBasis b(g);
  CHECK(b.upper(Sign::positive, 0) == doctest::Approx(1.0));
  CHECK(b.lower(Sign::negative, 0) == doctest::Approx(1.0));
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double dot = b.upper(Sign::positive, k) * b.upper(Sign::negative, k) +
                       b.lower(Sign::positive, k) * b.lower(Sign::negative, k);
    CHECK(std::abs(dot) < 1e-15);
    CHECK(b.energy(Sign::negative, k) == doctest::Approx(-free_energy(g.p(k))));
  }
  // Positive p = 0 state has no overlap with any negative state.
  const auto ov = bound_free_overlap(b.state(0, Sign::positive), b);
  CHECK(ov.negative_mass < 1e-28);
  CHECK(ov.total == doctest::Approx(1.0));
}

TEST_CASE("amplitudes and synthesis invert each other") {
  const Grid g = make_grid(20.0, 64);
  const FreeBasis b(g);
  std::vector<cplx> c(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) c[k] = {std::cos(0.3 * k), 0.1 * k};
  SpinorField psi(g.size());
  b.synthesize(Sign::negative, c.data(), psi);
  std::vector<cplx> plus(g.size()), minus(g.size());
  AlignedComplex work;
  b.amplitudes(psi, plus.data(), minus.data(), work);
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(std::abs(minus[k] - c[k]) < 1e-12);
    CHECK(std::abs(plus[k]) < 1e-12);
  }
}

TEST_CASE("amplitudes at the start are identity blocks") {
  const Grid g = make_grid(20.0, 32);
  const FreeBasis b(g);
  std::vector<SpinorField> states;
  std::vector<EvolvedLabel> labels;
  for (std::size_t k = 0; k < g.size(); ++k) {
    states.push_back(b.state(k, Sign::negative));
    labels.push_back({k, Sign::negative});
  }
  const auto a = transition_amplitudes(states, labels, b, 0.0);
  double worst = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m)
    for (std::size_t k = 0; k < g.size(); ++k) {
      worst = std::max(worst, std::abs(a.g_minus(k, m) - (k == m ? 1.0 : 0.0)));
      worst = std::max(worst, std::abs(a.g_plus(k, m)));
    }
  CHECK(worst < 1e-12);
  CHECK(particle_number(a) < 1e-24);
  const auto occ = instantaneous_occupation(states, solve_static_spectrum(g, FieldConfig{}));
  for (std::size_t i = 0; i < occ.energy.size(); ++i)
    CHECK(occ.occupation[i] == doctest::Approx(occ.energy[i] < -1.0 ? 1.0 : 0.0));
}

TEST_CASE("free evolution keeps amplitudes diagonal with phase") {
  const Grid g = make_grid(20.0, 32);
  FieldConfig f;
  f.T = 2.0;
  f.dT = 1.0;
  const auto e = evolve_all(g, f, 2.0);
  const double t = 3.0;  // from t_start = -1
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(std::abs(e.amps.g_minus(k, k) - std::polar(1.0, free_energy(g.p(k)) * t)) < 1e-10);
  }
  CHECK(particle_number(e.amps) < 1e-20);
}

TEST_CASE("four-way identity and charge conservation") {
  const Grid g = make_grid(16.0, 64);
  const auto e = evolve_all(g, laser_well(), 12.0);
  const FreeBasis b(g);
  const double n = particle_number(e.amps);
  CHECK(n > 1e-6);
  const SMatrix s = s_matrix(e.amps);
  CHECK(std::abs(s.trace() - n) / n < 1e-10);
  const auto rho = spatial_density(s, b);
  const double integral = std::accumulate(rho.begin(), rho.end(), 0.0) * g.dx();
  CHECK(std::abs(integral - n) / n < 1e-10);
  const auto chi_minus = electron_momentum_spectrum(e.amps);
  const auto chi_plus = positron_momentum_spectrum(e.amps);
  CHECK(std::abs(chi_minus.total() - n) / n < 1e-10);
  CHECK(std::abs(chi_plus.total() - chi_minus.total()) < 1e-10);
  for (std::size_t i = 1; i < chi_minus.p.size(); ++i) CHECK(chi_minus.p[i] > chi_minus.p[i - 1]);
  const auto eig = hermitian_eigenvalues(HermitianMatrix{s.n, s.s});
  CHECK(eig.front() > -1e-9);
  // Column unitarity.
  const auto& k = simd::active_kernels();
  for (std::size_t m = 0; m < e.amps.labels.size(); ++m) {
    const double norm = k.norm2(&e.amps.plus[m * g.size()], g.size()) + k.norm2(&e.amps.minus[m * g.size()], g.size());
    CHECK(std::abs(norm - 1.0) < 1e-10);
  }
  // Occupations stay below one and sum to the number of evolved states.
  const auto occ = instantaneous_occupation(e.sea, solve_static_spectrum(g, laser_well()));
  double sum = 0.0;
  for (double o : occ.occupation) {
    CHECK(o <= 1.0 + 1e-6);
    sum += o;
  }
  CHECK(sum == doctest::Approx(static_cast<double>(g.size())));
  const auto bc = bound_and_continuum_numbers(occ);
  CHECK(bc.bound >= 0.0);
  CHECK(bc.continuum >= 0.0);
}

TEST_CASE("positron energy spectrum maps momentum to energy") {
  MomentumSpectrum chi;
  const double dp = 0.01;
  for (int i = -300; i <= 300; ++i) {
    chi.p.push_back(i * dp);
    chi.weight.push_back(i == 71 ? 1.0 : 0.0);
  }
  EnergyBinning bins;
  bins.e_min = 1.0;
  bins.e_max = 2.0;
  bins.bins = 100;
  const auto s = positron_energy_spectrum(chi, bins);
  CHECK(s.integral() == doctest::Approx(1.0).epsilon(1e-9));
  const auto top = std::max_element(s.density.begin(), s.density.end()) - s.density.begin();
  CHECK(std::abs(s.energy[static_cast<std::size_t>(top)] - free_energy(0.71)) < bins.width());
  CHECK_THROWS(positron_energy_spectrum(MomentumSpectrum{}, bins));
}

TEST_CASE("depletion") {
  Occupation o{{-2.0, -1.2, 0.5, 1.5}, {1.0, 0.7, 0.4, 0.1}};
  const auto d = o.depletion();
  CHECK(d[0] == doctest::Approx(0.0));
  CHECK(d[1] == doctest::Approx(0.3));
  CHECK(d[2] == doctest::Approx(0.4));
  CHECK(d[3] == doctest::Approx(0.1));

  o.reference = {0.9, 0.9, 0.0, 0.05};
  const auto r = o.depletion();
  CHECK(r[0] == doctest::Approx(-0.1));
  CHECK(r[1] == doctest::Approx(0.2));
  CHECK(r[3] == doctest::Approx(0.05));
}
