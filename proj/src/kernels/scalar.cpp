#include "variants.hpp"

// Complex products are spelled out in real arithmetic: std::complex's
// operator* carries Annex G NaN recovery that does not vectorize.

namespace cqft::simd::detail {
namespace {

inline cplx mul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

void rotate_sigma2(cplx* up, cplx* lo, const cplx* d, const cplx* o, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const cplx u = up[i];
    const cplx l = lo[i];
    up[i] = mul(d[i], u) - mul(o[i], l);
    lo[i] = mul(o[i], u) + mul(d[i], l);
  }
}

void apply_2x2(cplx* up, cplx* lo, const cplx* m00, const cplx* m01, const cplx* m10,
               const cplx* m11, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const cplx u = up[i];
    const cplx l = lo[i];
    up[i] = mul(m00[i], u) + mul(m01[i], l);
    lo[i] = mul(m10[i], u) + mul(m11[i], l);
  }
}

void project_real(const cplx* up, const cplx* lo, const double* w0, const double* w1, cplx* out,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = w0[i] * up[i] + w1[i] * lo[i];
}

double norm2(const cplx* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
  return s;
}

cplx dot(const cplx* a, const cplx* b, std::size_t n) {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
  }
  return {re, im};
}

void accumulate_abs2(const cplx* a, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
}

}  // namespace

const KernelTable kScalarTable{
    Isa::scalar, "scalar", rotate_sigma2, apply_2x2, project_real, norm2, dot, accumulate_abs2,
};

}  // namespace cqft::simd::detail
