#pragma once

// Natural units throughout: hbar = c = m_e = 1. Lengths are in reduced
// Compton wavelengths lambda_c, times in t_pl = lambda_c / c, energies in
// m_e c^2 and field strengths in E_cr = m_e^2 c^3 / (e hbar).

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace cqft {

using cplx = std::complex<double>;

/// Periodic position lattice x_j = -L/2 + j dx and its conjugate momentum
/// lattice in discrete-Fourier ordering {0, dp, ..., -N/2 dp, ..., -dp}.
class Grid {
 public:
  Grid(double length, std::size_t points);

  double length() const { return length_; }
  std::size_t size() const { return points_; }
  double dx() const { return dx_; }
  double dp() const { return dp_; }

  double x(std::size_t j) const { return x_[j]; }
  double p(std::size_t k) const { return p_[k]; }
  const std::vector<double>& positions() const { return x_; }
  const std::vector<double>& momenta() const { return p_; }

  /// Index of the mode whose momentum is closest to `p`.
  std::size_t nearest_mode(double p) const;

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.length_ == b.length_ && a.points_ == b.points_;
  }

 private:
  double length_;
  std::size_t points_;
  double dx_;
  double dp_;
  std::vector<double> x_;
  std::vector<double> p_;
};

/// Throws ConfigError unless N is a power of two >= 2 and L > 0.
Grid make_grid(double length, std::size_t points);

/// Positive branch of the free dispersion, sqrt(1 + p^2).
inline double free_energy(double p) { return std::sqrt(1.0 + p * p); }

}  // namespace cqft
