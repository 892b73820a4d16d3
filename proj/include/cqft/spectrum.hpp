#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cqft/fft.hpp"
#include "cqft/fields.hpp"
#include "cqft/grid.hpp"
#include "cqft/spinor.hpp"

namespace cqft {

/// Dense Hermitian matrix, column-major.
struct HermitianMatrix {
  std::size_t n = 0;
  std::vector<cplx> a;
  cplx& operator()(std::size_t r, std::size_t c) { return a[c * n + r]; }
  cplx operator()(std::size_t r, std::size_t c) const { return a[c * n + r]; }
};

/// Static (plateau, laser-free) Dirac Hamiltonian sigma_1 p + sigma_3 + well(x)
/// on the 2N-dimensional basis [upper(x_j); lower(x_j)]. The derivative is
/// spectral, so the same momenta as in the propagator's kinetic factor.
HermitianMatrix build_static_hamiltonian(const Grid& grid, const FieldConfig& cfg);

enum class Band { negative_continuum, gap, positive_continuum };
std::string_view band_name(Band b);
Band classify_energy(double e);

/// Eigenpairs of the static Hamiltonian, energies ascending. Eigenvector i
/// is column i of `vectors` with the SpinorField layout.
class StaticSpectrum {
 public:
  StaticSpectrum(Grid grid, FieldConfig cfg, std::vector<double> energies, AlignedComplex vectors);

  const Grid& grid() const { return grid_; }
  const FieldConfig& config() const { return cfg_; }
  std::size_t size() const { return energies_.size(); }
  std::size_t dimension() const { return 2 * grid_.size(); }
  const std::vector<double>& energies() const { return energies_; }
  double energy(std::size_t i) const { return energies_[i]; }
  Band band(std::size_t i) const { return classify_energy(energies_[i]); }
  const cplx* vector(std::size_t i) const { return vectors_.data() + i * dimension(); }
  SpinorField state(std::size_t i) const;

  /// Probability inside |x| < D/2 + 2W for eigenvector i.
  double localization(std::size_t i) const;

  /// Index of the lowest gap eigenvalue, if any.
  std::optional<std::size_t> ground_index() const;

 private:
  Grid grid_;
  FieldConfig cfg_;
  std::vector<double> energies_;
  AlignedComplex vectors_;
};

/// All eigenvalues of a Hermitian matrix, ascending.
std::vector<double> hermitian_eigenvalues(HermitianMatrix h);

/// Full eigendecomposition (LAPACK zheevr).
StaticSpectrum solve_static_spectrum(const Grid& grid, const FieldConfig& cfg);

/// Eigenvalues inside (lo, hi) only, ascending; no eigenvectors.
std::vector<double> static_energies_in(const Grid& grid, const FieldConfig& cfg, double lo,
                                       double hi);

struct BoundState {
  double energy;
  SpinorField psi;
  double width;
};

/// Gap eigenpairs with -1 + 1e-6 < E < 1 - 1e-6, ascending, widths attached.
std::vector<BoundState> bound_states(const StaticSpectrum& spec);

/// W_b = 2 sqrt(<x^2> - <x>^2). Throws InvariantError if |norm - 1| > 1e-6.
double state_width(const SpinorField& psi, const Grid& grid);

/// <x> of a normalized state.
double mean_position(const SpinorField& psi, const Grid& grid);

struct TuneResult {
  double V0;
  double value;  ///< achieved ground energy (or level spacing)
  int evaluations;
};

struct TuneOptions {
  double v_min = 0.0;
  double v_max = 4.0;
  double scan_step = 0.25;
  double tolerance = 1e-5;  ///< on the tuned quantity
};

/// Bisection on V0 so that the ground-state energy equals `E_target`.
/// Throws ConvergenceError when no bracket exists in [v_min, v_max] and
/// InvariantError if E_g(V0) is found to be non-monotone inside the bracket.
TuneResult tune_well_depth(double D, double W, double E_target, const Grid& grid,
                           const TuneOptions& opts = {});

/// Bisection on V0 so that E_1 - E_0 of the two lowest gap states equals
/// `spacing`. Throws ConvergenceError when no bracket exists.
TuneResult tune_level_spacing(double D, double W, double spacing, const Grid& grid,
                              const TuneOptions& opts = {});

struct Quasibound {
  double energy;
  double localization;
  std::size_t index;
};

/// Negative-continuum eigenstate in the embedding window (1 - V0, -1) with
/// the largest probability inside the well. Throws ConfigError for a
/// subcritical well (V0 <= 2).
Quasibound locate_quasibound(const StaticSpectrum& spec, const FieldConfig& cfg);

}  // namespace cqft
