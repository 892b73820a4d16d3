#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cqft/errors.hpp"
#include "cqft/kernels.hpp"
#include "cqft/spectrum.hpp"

using namespace cqft;
using doctest::Approx;

namespace {

FieldConfig well(double V0, double D) {
  FieldConfig f;
  f.V0 = V0;
  f.D = D;
  f.W = 0.3;
  return f;
}

}  // namespace

TEST_CASE("free spectrum is the exact dispersion") {
  const Grid g = make_grid(20.0, 32);
  const auto spec = solve_static_spectrum(g, well(0.0, 1.0));
  REQUIRE(spec.size() == 64);
  std::vector<double> expected;
  for (std::size_t k = 0; k < g.size(); ++k) {
    expected.push_back(free_energy(g.p(k)));
    expected.push_back(-free_energy(g.p(k)));
  }
  std::sort(expected.begin(), expected.end());
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(spec.energy(i) == Approx(expected[i]).epsilon(1e-10));
  CHECK(bound_states(spec).empty());
  CHECK_FALSE(spec.ground_index().has_value());
}

TEST_CASE("static Hamiltonian is Hermitian and eigenvectors orthonormal") {
  const Grid g = make_grid(16.0, 32);
  const auto h = build_static_hamiltonian(g, well(1.726, 3.2));
  double worst = 0.0;
  for (std::size_t r = 0; r < h.n; ++r)
    for (std::size_t c = 0; c < h.n; ++c) worst = std::max(worst, std::abs(h(r, c) - std::conj(h(c, r))));
  CHECK(worst < 1e-12);

  const auto spec = solve_static_spectrum(g, well(1.726, 3.2));
  CHECK(spec.size() == 2 * g.size());
  const auto& k = simd::active_kernels();
  double off = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i)
    for (std::size_t j = i; j < spec.size(); ++j) {
      const cplx d = k.dot(spec.vector(i), spec.vector(j), spec.dimension());
      off = std::max(off, std::abs(d - (i == j ? 1.0 : 0.0)));
    }
  CHECK(off < 1e-8);
  for (std::size_t i = 1; i < spec.size(); ++i) CHECK(spec.energy(i) >= spec.energy(i - 1));
}

TEST_CASE("band classification") {
  CHECK(classify_energy(-1.5) == Band::negative_continuum);
  CHECK(classify_energy(-0.4) == Band::gap);
  CHECK(classify_energy(1.2) == Band::positive_continuum);
  CHECK(band_name(Band::gap) == "gap");
}

TEST_CASE("desk wells hold a ground state near -0.4") {
  const Grid g = make_grid(80.0, 512);
  for (auto [V0, D] : {std::pair{1.726, 3.2}, std::pair{1.9, 2.443}}) {
    CAPTURE(D);
    const auto spec = solve_static_spectrum(g, well(V0, D));
    const auto gi = spec.ground_index();
    REQUIRE(gi.has_value());
    CHECK(std::abs(spec.energy(*gi) + 0.4) < 0.01);
  }
}

TEST_CASE("two-state well has two gap levels") {
  const Grid g = make_grid(80.0, 512);
  const auto levels = bound_states(solve_static_spectrum(g, well(1.584, 4.5)));
  REQUIRE(levels.size() >= 2);
  CHECK(levels[0].energy < levels[1].energy);
  // The static spacing at these parameters is 0.40, short of the laser frequency.
  CHECK(std::abs(levels[1].energy - levels[0].energy - 0.45) < 0.06);
}

TEST_CASE("state width") {
  const Grid g = make_grid(40.0, 512);
  const double sigma = 1.5;
  SpinorField psi(g.size());
  double norm = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double a = std::exp(-g.x(j) * g.x(j) / (4 * sigma * sigma));
    psi.upper()[j] = a;
    norm += a * a;
  }
  for (std::size_t j = 0; j < g.size(); ++j) psi.upper()[j] /= std::sqrt(norm);
  CHECK(state_width(psi, g) == Approx(2 * sigma).epsilon(1e-6));

  SpinorField delta(g.size());
  delta.lower()[g.size() / 2] = 1.0;
  CHECK(state_width(delta, g) == Approx(0.0));
  SpinorField unnormalized(g.size());
  unnormalized.upper()[0] = 2.0;
  CHECK_THROWS_AS(state_width(unnormalized, g), InvariantError);
}

TEST_CASE("tuner finds the well depth for a target energy") {
  const Grid g = make_grid(40.0, 256);
  const auto r = tune_well_depth(3.2, 0.3, -0.4, g);
  CHECK(std::abs(r.value + 0.4) < 1e-4);
  CHECK(std::abs(r.V0 - 1.726) < 0.02);
  const auto spec = solve_static_spectrum(g, well(r.V0, 3.2));
  CHECK(std::abs(spec.energy(*spec.ground_index()) + 0.4) < 1e-4);
  CHECK_THROWS_AS(tune_well_depth(3.2, 0.3, 1.5, g), ConfigError);
  TuneOptions narrow;
  narrow.v_max = 0.5;
  CHECK_THROWS_AS(tune_well_depth(3.2, 0.3, -0.4, g, narrow), ConvergenceError);
}

TEST_CASE("quasibound state of supercritical wells") {
  const Grid g = make_grid(40.0, 512);
  for (auto [V0, D] : {std::pair{2.383, 4.0}, std::pair{2.522, 3.2}}) {
    CAPTURE(D);
    const auto spec = solve_static_spectrum(g, well(V0, D));
    const auto qb = locate_quasibound(spec, well(V0, D));
    CHECK(std::abs(qb.energy + 1.1) < 0.03);
  }
  const auto sub = solve_static_spectrum(make_grid(40.0, 128), well(1.726, 3.2));
  CHECK_THROWS_AS(locate_quasibound(sub, well(1.726, 3.2)), ConfigError);
}
