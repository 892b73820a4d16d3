#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cqft/errors.hpp"
#include "cqft/fields.hpp"
#include "cqft/grid.hpp"

using namespace cqft;
using doctest::Approx;

TEST_CASE("momentum lattice in Fourier ordering") {
  const Grid g = make_grid(2.0 * std::numbers::pi, 4);
  CHECK(g.p(0) == Approx(0.0));
  CHECK(g.p(1) == Approx(1.0));
  CHECK(g.p(2) == Approx(-2.0));
  CHECK(g.p(3) == Approx(-1.0));
  CHECK(g.x(0) == Approx(-std::numbers::pi));
  CHECK(g.dx() == Approx(std::numbers::pi / 2.0));
  CHECK(make_grid(100.0, 512).dp() == Approx(0.06283).epsilon(1e-4));
}

TEST_CASE("grid rejects bad sizes") {
  CHECK_THROWS_AS(make_grid(10.0, 100), ConfigError);
  CHECK_THROWS_AS(make_grid(-1.0, 64), ConfigError);
  CHECK_THROWS_AS(make_grid(10.0, 1), ConfigError);
}

TEST_CASE("free dispersion") {
  CHECK(free_energy(0.0) == 1.0);
  CHECK(free_energy(0.71) == Approx(1.225).epsilon(1e-3));
  CHECK(free_energy(-0.71) == free_energy(0.71));
}

TEST_CASE("sauter step") {
  CHECK(sauter_step(0.0, 0.3) == 0.5);
  CHECK(sauter_step(0.3, 0.3) == Approx(0.88080).epsilon(1e-5));
  for (double x : {-2.0, -0.1, 0.4, 5.0}) CHECK(sauter_step(x, 0.3) + sauter_step(-x, 0.3) == Approx(1.0));
}

TEST_CASE("envelope segments") {
  FieldConfig f;
  f.T = 50.0;
  f.dT = 10.0;
  CHECK(envelope(-10.0, f) == Approx(0.0));
  CHECK(envelope(0.0, f) == Approx(1.0));
  CHECK(envelope(50.0, f) == Approx(1.0));
  CHECK(envelope(60.0, f) == Approx(0.0));
  CHECK(envelope(-5.0, f) == Approx(0.5));
  CHECK(envelope(55.0, f) == Approx(0.5));
  CHECK(envelope(-20.0, f) == 0.0);
  CHECK(envelope(80.0, f) == 0.0);
  // Bounded derivative.
  const double h = 1e-4;
  double worst = 0.0;
  for (double t = -10.0; t < 60.0; t += 0.37)
    worst = std::max(worst, std::abs(envelope(t + h, f) - envelope(t - h, f)) / (2 * h));
  CHECK(worst <= std::numbers::pi / (2.0 * f.dT) + 1e-6);
}

TEST_CASE("well profile") {
  FieldConfig f;
  f.V0 = 1.5;
  f.D = 20.0;
  f.W = 0.3;
  f.T = 10.0;
  f.dT = 5.0;
  CHECK(well_potential(0.0, 1.0, f) == Approx(-1.5));
  CHECK(well_potential(10.0, 1.0, f) == Approx(-0.75));
  CHECK(well_potential(0.3, -5.0, f) == Approx(0.0));
  for (double x : {0.2, 1.0, 9.7}) CHECK(well_profile(x, f) == Approx(well_profile(-x, f)));
}

TEST_CASE("laser vector potential") {
  FieldConfig f;
  f.laser_on = true;
  f.omega = 0.45;
  f.A0 = laser_amplitude_for_field(0.3, 0.45);
  f.T = 100.0;
  f.dT = 10.0;
  CHECK(f.A0 == Approx(2.0 / 3.0));
  CHECK(f.peak_field() == Approx(0.3));
  CHECK(laser_vector_potential(3.0, 3.0, f) == Approx(0.0));
  CHECK(laser_vector_potential(1.0, -10.0, f) == Approx(0.0));
  const double t = 20.0, x = 1.3;
  CHECK(laser_vector_potential(x, t, f) == Approx(f.A0 * std::sin(0.45 * (t - x))));
  FieldConfig off;
  CHECK_THROWS(laser_vector_potential(0.0, 0.0, off));
}
