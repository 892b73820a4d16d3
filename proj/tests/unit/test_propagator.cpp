#include <doctest.h>

#include <cmath>
#include <random>

#include "cqft/errors.hpp"
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
  f.T = 6.0;
  f.dT = 4.0;
  return f;
}

SpinorField random_state(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  SpinorField psi(n);
  for (auto& z : psi.data()) z = {g(rng), g(rng)};
  const double s = std::sqrt(psi.norm());
  for (auto& z : psi.data()) z /= s;
  return psi;
}

double distance(const SpinorField& a, const SpinorField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) s += std::norm(a.data()[i] - b.data()[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("schedule geometry") {
  FieldConfig f;
  f.T = 10.0;
  f.dT = 5.0;
  const Schedule s = Schedule::full_run(f, 0.05);
  CHECK(s.t_start == -5.0);
  CHECK(s.t_end == 15.0);
  CHECK(s.steps() == 400);
  CHECK(s.step_size() == doctest::Approx(0.05));
  CHECK(s.step_index(0.0) == 100);
  Schedule bad = s;
  bad.observations.push_back({20.0, Probe::in_field});
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("free positive state only acquires its phase") {
  const Grid g = make_grid(20.0, 64);
  FieldConfig f;  // no fields
  const Propagator prop(g, f);
  const FreeBasis basis(g);
  const std::size_t k = 5;
  std::vector<SpinorField> v{basis.state(k, Sign::positive)};
  const double t = 3.7;
  prop.advance(v, 0.0, t / 50.0, 50, prop.run_drive());
  std::vector<cplx> plus(g.size()), minus(g.size());
  AlignedComplex work;
  basis.amplitudes(v[0], plus.data(), minus.data(), work);
  const double E = free_energy(g.p(k));
  CHECK(std::abs(plus[k] - std::polar(1.0, -E * t)) < 1e-12);
  double transfer = 0.0;
  for (std::size_t q = 0; q < g.size(); ++q) transfer += std::norm(minus[q]) + (q == k ? 0.0 : std::norm(plus[q]));
  CHECK(transfer < 1e-24);
}

TEST_CASE("constant potential adds only a global phase") {
  const Grid g = make_grid(20.0, 64);
  FieldConfig f;
  f.V0 = 0.8;
  f.D = 1e4;  // flat across the whole box
  f.W = 0.3;
  const Propagator with(g, f);
  const Propagator without(g, FieldConfig{});
  const DriveFn on = [](double) { return Drive{1.0, 0.0}; };
  std::vector<SpinorField> a{random_state(g.size(), 7)};
  std::vector<SpinorField> b{a[0]};
  const double t = 2.5;
  with.advance(a, 0.0, 0.05, 50, on);
  without.advance(b, 0.0, 0.05, 50, on);
  const cplx overlap = inner(b[0], a[0]);
  CHECK(std::abs(overlap - std::polar(1.0, f.V0 * t)) < 1e-10);
}

TEST_CASE("evolution is unitary and exactly reversible") {
  const Grid g = make_grid(24.0, 128);
  const Propagator prop(g, laser_well());
  std::vector<SpinorField> v{random_state(g.size(), 1), random_state(g.size(), 2)};
  const auto start = v;
  const cplx before = inner(v[0], v[1]);
  prop.advance(v, -4.0, 0.05, 200, prop.run_drive());
  CHECK(std::abs(v[0].norm() - 1.0) < 1e-12);
  CHECK(std::abs(inner(v[0], v[1]) - before) < 1e-12);
  prop.advance(v, 6.0, -0.05, 200, prop.run_drive());
  CHECK(distance(v[0], start[0]) < 1e-10);
  CHECK(distance(v[1], start[1]) < 1e-10);
}

TEST_CASE("fused advance matches repeated single steps") {
  const Grid g = make_grid(24.0, 128);
  const Propagator prop(g, laser_well());
  std::vector<SpinorField> v{random_state(g.size(), 3)};
  SpinorField w = v[0];
  prop.advance(v, -4.0, 0.1, 30, prop.run_drive());
  for (int i = 0; i < 30; ++i) prop.step(w, -4.0 + 0.1 * i, 0.1);
  CHECK(distance(v[0], w) < 1e-12);
}

TEST_CASE("second-order convergence") {
  const Grid g = make_grid(24.0, 128);
  const Propagator prop(g, laser_well());
  const double r = richardson_ratio(prop, random_state(g.size(), 4), -4.0, 4.0, 0.05);
  CHECK(r > 3.0);
  CHECK(r < 5.0);
  const auto cal = calibrate_dt(prop, random_state(g.size(), 4), -4.0, 4.0, 0.05);
  CHECK(cal.ratio > 3.0);
  CHECK(cal.ratio < 5.0);
}

TEST_CASE("evolving the complete basis and recombining is the identity map") {
  const Grid g = make_grid(16.0, 32);
  const Propagator prop(g, laser_well());
  const FreeBasis basis(g);
  std::vector<SpinorField> all;
  for (std::size_t k = 0; k < g.size(); ++k) {
    all.push_back(basis.state(k, Sign::negative));
    all.push_back(basis.state(k, Sign::positive));
  }
  Schedule s = Schedule::full_run(laser_well(), 0.05);
  s.observations.push_back({3.0, Probe::in_field});
  const auto out = evolve(all, s, prop);

  const SpinorField phi = random_state(g.size(), 9);
  SpinorField recombined(g.size());
  for (std::size_t m = 0; m < all.size(); ++m) {
    const cplx c = inner(all[m], phi);
    for (std::size_t i = 0; i < recombined.data().size(); ++i) recombined.data()[i] += c * out[m][0].data()[i];
  }
  std::vector<SpinorField> direct{phi};
  prop.advance(direct, s.t_start, s.step_size(), s.step_index(3.0), prop.run_drive());
  CHECK(distance(recombined, direct[0]) < 1e-6);
}

TEST_CASE("stream results do not depend on the worker count") {
  const Grid g = make_grid(16.0, 64);
  const Propagator prop(g, laser_well());
  const FreeBasis basis(g);
  Schedule s = Schedule::full_run(laser_well(), 0.05);
  s.observations = {{2.0, Probe::in_field}, {4.0, Probe::fields_off}, {6.0, Probe::laser_off}};
  auto collect = [&](std::size_t workers) {
    std::vector<double> out(3 * 20);
    EvolveOptions opt;
    opt.workers = workers;
    opt.batch = 3;
    evolve_stream(
        20, [&](std::size_t i, SpinorField& psi) { basis.fill_state(i, Sign::negative, psi); }, s, prop, opt,
        [&](std::size_t, std::size_t first, std::size_t o, std::span<const SpinorField> states) {
          for (std::size_t j = 0; j < states.size(); ++j) out[o * 20 + first + j] = std::abs(states[j].upper()[5]);
        });
    return out;
  };
  CHECK(collect(1) == collect(4));
}

TEST_CASE("probe drives") {
  const Grid g = make_grid(16.0, 32);
  const Propagator prop(g, laser_well());
  const auto d = prop.drive(2.0);
  const auto laser_off = probe_drive(prop, Probe::laser_off, 2.0, 3.0);
  CHECK(laser_off(2.0).well == d.well);
  CHECK(laser_off(2.0).laser == doctest::Approx(d.laser));
  CHECK(laser_off(5.0).laser == doctest::Approx(0.0));
  CHECK(laser_off(5.0).well == d.well);
  const auto fields_off = probe_drive(prop, Probe::fields_off, 2.0, 3.0);
  CHECK(fields_off(5.0).well == doctest::Approx(0.0));
  CHECK(fields_off(3.5).well == doctest::Approx(0.5 * d.well));
}
