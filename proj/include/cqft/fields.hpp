#pragma once

#include <cmath>

namespace cqft {

/// External field configuration: a Sauter-edged scalar well plus an optional
/// traveling-wave laser polarized along y, both switched with the same
/// sin^2 / plateau / cos^2 envelope.
struct FieldConfig {
  double V0 = 0.0;     ///< well depth [m_e c^2]
  double D = 1.0;      ///< well width parameter [lambda_c]
  double W = 0.3;      ///< edge extent of the Sauter steps [lambda_c]
  double A0 = 0.0;     ///< laser vector-potential amplitude; peak field E0 = A0 * omega
  double omega = 0.0;  ///< laser angular frequency [m_e c^2 / hbar]
  double T = 0.0;      ///< plateau duration [t_pl]
  double dT = 0.0;     ///< turn-on / turn-off duration [t_pl]
  bool laser_on = false;

  /// Throws ConfigError when a field invariant is violated.
  void validate() const;

  double peak_field() const { return laser_on ? A0 * omega : 0.0; }
};

/// Smooth unit step S(x) = (1 + tanh(x / W)) / 2.
inline double sauter_step(double x, double W) { return 0.5 * (1.0 + std::tanh(x / W)); }

/// Turn-on / plateau / turn-off envelope; 0 outside [-dT, T + dT].
double envelope(double t, const FieldConfig& cfg);

/// Shape of the well at full strength: -V0 [S(x + D/2) - S(x - D/2)].
double well_profile(double x, const FieldConfig& cfg);

/// Potential energy q*phi(x, t) of an electron (q = -e) in the well.
inline double well_potential(double x, double t, const FieldConfig& cfg) {
  return well_profile(x, cfg) * envelope(t, cfg);
}

/// A_y(x, t) = A0 f(t) sin(omega (t - x)). Throws std::logic_error when the
/// laser is off.
double laser_vector_potential(double x, double t, const FieldConfig& cfg);

/// Vector-potential amplitude giving peak electric field `E0` at `omega`.
inline double laser_amplitude_for_field(double E0, double omega) { return E0 / omega; }

/// cos^2 switch-off starting at `t0` and lasting `dT`; 1 before t0, 0 after.
double ramp_down(double t, double t0, double dT);

}  // namespace cqft
