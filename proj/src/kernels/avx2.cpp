// Built with -mavx2 -mfma; only reached through the dispatch table after a
// runtime CPU check. Two complex doubles per __m256d, interleaved re/im.

#include <immintrin.h>

#include "variants.hpp"

namespace cqft::simd::detail {
namespace {

inline __m256d load(const cplx* p) { return _mm256_loadu_pd(reinterpret_cast<const double*>(p)); }
inline void store(cplx* p, __m256d v) { _mm256_storeu_pd(reinterpret_cast<double*>(p), v); }

// (ar*br - ai*bi, ai*br + ar*bi) per complex lane
inline __m256d cmul(__m256d a, __m256d b) {
  const __m256d b_re = _mm256_movedup_pd(b);
  const __m256d b_im = _mm256_permute_pd(b, 0xF);
  const __m256d a_sw = _mm256_permute_pd(a, 0x5);
  return _mm256_fmaddsub_pd(a, b_re, _mm256_mul_pd(a_sw, b_im));
}

// (w0, w0, w1, w1) from two consecutive reals
inline __m256d widen(const double* w) {
  return _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(w)), 0x50);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void rotate_sigma2(cplx* up, cplx* lo, const cplx* d, const cplx* o, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d u = load(up + i);
    const __m256d l = load(lo + i);
    const __m256d dv = load(d + i);
    const __m256d ov = load(o + i);
    store(up + i, _mm256_sub_pd(cmul(dv, u), cmul(ov, l)));
    store(lo + i, _mm256_add_pd(cmul(ov, u), cmul(dv, l)));
  }
  if (i < n) kScalarTable.rotate_sigma2(up + i, lo + i, d + i, o + i, n - i);
}

void apply_2x2(cplx* up, cplx* lo, const cplx* m00, const cplx* m01, const cplx* m10,
               const cplx* m11, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d u = load(up + i);
    const __m256d l = load(lo + i);
    store(up + i, _mm256_add_pd(cmul(load(m00 + i), u), cmul(load(m01 + i), l)));
    store(lo + i, _mm256_add_pd(cmul(load(m10 + i), u), cmul(load(m11 + i), l)));
  }
  if (i < n) kScalarTable.apply_2x2(up + i, lo + i, m00 + i, m01 + i, m10 + i, m11 + i, n - i);
}

void project_real(const cplx* up, const cplx* lo, const double* w0, const double* w1, cplx* out,
                  std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d r = _mm256_fmadd_pd(widen(w0 + i), load(up + i),
                                      _mm256_mul_pd(widen(w1 + i), load(lo + i)));
    store(out + i, r);
  }
  if (i < n) kScalarTable.project_real(up + i, lo + i, w0 + i, w1 + i, out + i, n - i);
}

double norm2(const cplx* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = load(a + i);
    const __m256d y = load(a + i + 2);
    acc0 = _mm256_fmadd_pd(x, x, acc0);
    acc1 = _mm256_fmadd_pd(y, y, acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  if (i < n) s += kScalarTable.norm2(a + i, n - i);
  return s;
}

cplx dot(const cplx* a, const cplx* b, std::size_t n) {
  // re: sum (ar br + ai bi); im: sum (ar bi - ai br)
  __m256d acc_re = _mm256_setzero_pd();
  __m256d acc_im = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d x = load(a + i);
    const __m256d y = load(b + i);
    acc_re = _mm256_fmadd_pd(x, y, acc_re);
    acc_im = _mm256_fmadd_pd(_mm256_permute_pd(x, 0x5), y, acc_im);
  }
  // acc_im lanes hold (ai br, ar bi) pairs
  alignas(32) double im[4];
  _mm256_store_pd(im, acc_im);
  cplx s{hsum(acc_re), (im[1] - im[0]) + (im[3] - im[2])};
  if (i < n) s += kScalarTable.dot(a + i, b + i, n - i);
  return s;
}

void accumulate_abs2(const cplx* a, double* acc, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = load(a + i);
    const __m256d y = load(a + i + 2);
    const __m256d sx = _mm256_mul_pd(x, x);
    const __m256d sy = _mm256_mul_pd(y, y);
    // (x0r^2 + x0i^2, x1r^2 + x1i^2, y0.., y1..) after horizontal add and lane fix
    const __m256d h = _mm256_hadd_pd(sx, sy);  // (x0, y0, x1, y1)
    const __m256d ordered = _mm256_permute4x64_pd(h, 0xD8);  // (x0, x1, y0, y1)
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), ordered));
  }
  if (i < n) kScalarTable.accumulate_abs2(a + i, acc + i, n - i);
}

}  // namespace

const KernelTable kAvx2Table{
    Isa::avx2, "avx2", rotate_sigma2, apply_2x2, project_real, norm2, dot, accumulate_abs2,
};

}  // namespace cqft::simd::detail
