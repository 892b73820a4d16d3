#pragma once

#include <cstddef>
#include <span>

#include "cqft/fft.hpp"
#include "cqft/grid.hpp"

namespace cqft {

/// Two-component amplitude on the position grid, stored [upper(N), lower(N)].
/// Discrete normalization: sum_j |upper_j|^2 + |lower_j|^2 = 1, so the
/// position density is |psi_j|^2 / dx.
class SpinorField {
 public:
  SpinorField() = default;
  explicit SpinorField(std::size_t points) : points_(points), amp_(2 * points) {}

  std::size_t points() const { return points_; }
  cplx* upper() { return amp_.data(); }
  cplx* lower() { return amp_.data() + points_; }
  const cplx* upper() const { return amp_.data(); }
  const cplx* lower() const { return amp_.data() + points_; }
  std::span<cplx> data() { return {amp_.data(), amp_.size()}; }
  std::span<const cplx> data() const { return {amp_.data(), amp_.size()}; }

  /// <psi|psi>
  double norm() const;

 private:
  std::size_t points_ = 0;
  AlignedComplex amp_;
};

/// <a|b>
cplx inner(const SpinorField& a, const SpinorField& b);

}  // namespace cqft
