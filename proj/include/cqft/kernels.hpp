#pragma once

// Data-parallel inner loops of the propagator and of the observable
// reductions. Every kernel has a scalar reference implementation; wider
// variants are picked at runtime and must agree with it to rounding.
// Two-component fields are stored split: `up` and `lo` point at the upper and
// lower component arrays of the same length.

#include <cstddef>
#include <string_view>

#include "cqft/grid.hpp"

namespace cqft::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  std::string_view name;

  /// up <- d*up - o*lo, lo <- o*up + d*lo per point. With d = e^{-ia h} cos(bh)
  /// and o = e^{-ia h} sin(bh) this is exp(-i h (a + b sigma_2)).
  void (*rotate_sigma2)(cplx* up, cplx* lo, const cplx* d, const cplx* o, std::size_t n);

  /// General 2x2 complex matrix per point: [up; lo] <- [[m00, m01]; [m10, m11]] [up; lo].
  void (*apply_2x2)(cplx* up, cplx* lo, const cplx* m00, const cplx* m01, const cplx* m10,
                    const cplx* m11, std::size_t n);

  /// out = w0*up + w1*lo with real weights (projection on a real spinor).
  void (*project_real)(const cplx* up, const cplx* lo, const double* w0, const double* w1,
                       cplx* out, std::size_t n);

  /// sum |a|^2
  double (*norm2)(const cplx* a, std::size_t n);

  /// sum conj(a) * b
  cplx (*dot)(const cplx* a, const cplx* b, std::size_t n);

  /// acc += |a|^2 elementwise
  void (*accumulate_abs2)(const cplx* a, double* acc, std::size_t n);
};

const KernelTable& scalar_kernels();

/// Null when the build has no AVX2 variant or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();

/// Best table for this machine, fixed on first use. Setting the environment
/// variable CQFT_SIMD=scalar forces the reference kernels.
const KernelTable& active_kernels();

}  // namespace cqft::simd
