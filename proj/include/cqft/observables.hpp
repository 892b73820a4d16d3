#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cqft/fft.hpp"
#include "cqft/grid.hpp"
#include "cqft/spectrum.hpp"
#include "cqft/spinor.hpp"

namespace cqft {

enum class Sign { positive, negative };

/// Free plane-wave spinors psi^{+-}_k(x_j) = u_{+-}(p_k) e^{2 pi i jk/N} / sqrt(N).
/// u_+ = (sqrt((E+1)/2E), p / sqrt(2E(E+1))), u_- = (-p / sqrt(2E(E+1)), sqrt((E+1)/2E)),
/// so at p = 0 they are (1, 0) and (0, 1). The phase reference is the left
/// box edge; it only enters off-diagonal elements of the S matrix.
/// One spin block is simulated; 3D totals carry an extra spin degeneracy.
class FreeBasis {
 public:
  explicit FreeBasis(const Grid& grid);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }

  /// Spinor components of u_sign(p_k).
  double upper(Sign s, std::size_t k) const { return s == Sign::positive ? plus_up_[k] : minus_up_[k]; }
  double lower(Sign s, std::size_t k) const { return s == Sign::positive ? plus_lo_[k] : minus_lo_[k]; }
  const double* upper_data(Sign s) const { return s == Sign::positive ? plus_up_.data() : minus_up_.data(); }
  const double* lower_data(Sign s) const { return s == Sign::positive ? plus_lo_.data() : minus_lo_.data(); }

  /// Energy of psi^sign_k: +-sqrt(1 + p_k^2).
  double energy(Sign s, std::size_t k) const;

  SpinorField state(std::size_t k, Sign s) const;
  void fill_state(std::size_t k, Sign s, SpinorField& out) const;

  /// plus[k] = <psi^+_k|psi>, minus[k] = <psi^-_k|psi>. `work` is resized
  /// to 2N and clobbered.
  void amplitudes(const SpinorField& psi, cplx* plus, cplx* minus, AlignedComplex& work) const;

  /// Mode indices with |p_k| <= p_max, ascending in k.
  std::vector<std::size_t> modes_within(double p_max) const;

  /// Inverse of amplitudes() restricted to one sign:
  /// out = sum_k coeff[k] psi^sign_k. `out` must be sized to the grid.
  void synthesize(Sign s, const cplx* coeff, SpinorField& out) const;

 private:
  Grid grid_;
  SpinorFft fft_;
  std::vector<double> plus_up_, plus_lo_, minus_up_, minus_lo_;
};

struct EvolvedLabel {
  std::size_t mode;
  Sign sign;
};

/// G(nu; nu')_{k, m} = <psi^nu_k | psi_m(t)> for every grid mode k and every
/// evolved state m, stored column-major (N rows, one column per state).
struct AmplitudeSet {
  double time = 0.0;
  std::size_t modes = 0;
  std::vector<double> momenta;  ///< p_k per row
  std::vector<EvolvedLabel> labels;
  std::vector<cplx> plus;   ///< G(+; nu')
  std::vector<cplx> minus;  ///< G(-; nu')

  cplx g_plus(std::size_t k, std::size_t m) const { return plus[m * modes + k]; }
  cplx g_minus(std::size_t k, std::size_t m) const { return minus[m * modes + k]; }
  bool has(Sign s) const;
};

AmplitudeSet transition_amplitudes(std::span<const SpinorField> states,
                                   std::span<const EvolvedLabel> labels, const FreeBasis& basis,
                                   double time);

/// S_{k,k'} = sum_{m in negative set} conj(G(+;-)_{k,m}) G(+;-)_{k',m}; Hermitian, PSD.
struct SMatrix {
  std::size_t n = 0;
  std::vector<cplx> s;  ///< column-major
  cplx operator()(std::size_t r, std::size_t c) const { return s[c * n + r]; }
  double trace() const;
};

SMatrix s_matrix(const AmplitudeSet& amps);

/// N(t) = sum |G(+;-)|^2.
double particle_number(const AmplitudeSet& amps);

/// Created-electron density rho(x_j) [1/lambda_c]; integrates (sum * dx) to trace(S).
std::vector<double> spatial_density(const SMatrix& s, const FreeBasis& basis);

/// Momentum distribution on the grid, sorted by momentum.
struct MomentumSpectrum {
  std::vector<double> p;
  std::vector<double> weight;  ///< particles per mode
  double total() const;
};

/// chi^-(p_k) = S_{kk}.
MomentumSpectrum electron_momentum_spectrum(const AmplitudeSet& amps);

/// chi^+ from the evolved positive set: sum_m |G(-;+)_{k,m}|^2, reported at
/// the physical positron momentum -p_k (a hole in psi^-_k carries -p_k).
/// Throws std::invalid_argument when no positive state was evolved.
MomentumSpectrum positron_momentum_spectrum(const AmplitudeSet& amps);

struct EnergyBinning {
  double e_min = 1.0;
  double e_max = 3.0;
  std::size_t bins = 200;
  double width() const { return (e_max - e_min) / static_cast<double>(bins); }
};

struct EnergySpectrum {
  std::vector<double> energy;   ///< bin centers
  std::vector<double> density;  ///< particles per unit energy
  double bin_width = 0.0;
  double integral() const;
};

/// Maps chi^+(p) to S^+(E), E = sqrt(1 + p^2), combining both signs of p.
/// Each bin holds the average of chi^+(p(E)) |dp/dE| over the bin, where
/// chi^+(p) is the piecewise-linear density through the mode weights / dp.
/// Throws std::invalid_argument for an empty spectrum.
EnergySpectrum positron_energy_spectrum(const MomentumSpectrum& chi_plus,
                                        const EnergyBinning& binning = {});

struct Occupation {
  std::vector<double> energy;
  std::vector<double> occupation;
  /// Occupation by the same evolved sea without the laser. The truncated sea
  /// does not fill deep levels, so depletion is measured against this.
  std::vector<double> reference;
  /// reference - occupation below the gap, occupation - reference above it.
  /// Without a reference, a fully filled sea (1) and an empty one (0) are assumed.
  std::vector<double> depletion() const;
};

/// O(n) = sum_m |<n|psi_m(t)>|^2 over the evolved Dirac-sea states.
Occupation instantaneous_occupation(std::span<const SpinorField> sea, const StaticSpectrum& spec);

struct BoundContinuum {
  double bound;      ///< N_b: occupation of the lowest gap state
  double continuum;  ///< N_c: summed occupation of states with E > 1
};

/// Throws std::invalid_argument when the spectrum has no gap state.
BoundContinuum bound_and_continuum_numbers(std::span<const SpinorField> sea,
                                           const StaticSpectrum& spec);
BoundContinuum bound_and_continuum_numbers(const Occupation& occ);

struct OverlapTable {
  std::vector<double> energy;  ///< +-E_k, ascending
  std::vector<double> weight;  ///< |<psi^nu_k|psi>|^2
  double negative_mass = 0.0;
  double total = 0.0;
};

OverlapTable bound_free_overlap(const SpinorField& psi, const FreeBasis& basis);

}  // namespace cqft
