#include "cqft/fields.hpp"

#include <numbers>
#include <stdexcept>

#include "cqft/errors.hpp"

namespace cqft {

void FieldConfig::validate() const {
  if (!(V0 >= 0.0)) throw ConfigError("well depth V0 must be >= 0");
  if (!(D > 0.0)) throw ConfigError("well width D must be > 0");
  if (!(W > 0.0)) throw ConfigError("edge extent W must be > 0");
  if (!(T >= 0.0)) throw ConfigError("plateau duration T must be >= 0");
  if (!(dT >= 0.0)) throw ConfigError("ramp duration dT must be >= 0");
  if (laser_on && !(omega > 0.0)) throw ConfigError("laser frequency omega must be > 0");
}

double envelope(double t, const FieldConfig& cfg) {
  constexpr double pi = std::numbers::pi;
  const double dT = cfg.dT;
  if (t < -dT || t > cfg.T + dT) return 0.0;
  if (t < 0.0) {
    const double s = std::sin(pi * (t - dT) / (2.0 * dT));
    return s * s;
  }
  if (t <= cfg.T) return 1.0;
  const double c = std::cos(pi * (t - cfg.T) / (2.0 * dT));
  return c * c;
}

double well_profile(double x, const FieldConfig& cfg) {
  return -cfg.V0 * (sauter_step(x + 0.5 * cfg.D, cfg.W) - sauter_step(x - 0.5 * cfg.D, cfg.W));
}

double laser_vector_potential(double x, double t, const FieldConfig& cfg) {
  if (!cfg.laser_on) throw std::logic_error("laser_vector_potential called with the laser off");
  return cfg.A0 * envelope(t, cfg) * std::sin(cfg.omega * (t - x));
}

double ramp_down(double t, double t0, double dT) {
  if (t <= t0) return 1.0;
  if (t >= t0 + dT) return 0.0;
  const double c = std::cos(std::numbers::pi * (t - t0) / (2.0 * dT));
  return c * c;
}

}  // namespace cqft
