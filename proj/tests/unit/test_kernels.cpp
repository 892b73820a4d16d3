#include <doctest.h>

#include <complex>
#include <random>
#include <vector>

#include "cqft/kernels.hpp"

using namespace cqft;

namespace {

std::vector<cplx> random_field(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<cplx> v(n);
  for (auto& z : v) z = {g(rng), g(rng)};
  return v;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("vector kernels agree with the scalar reference") {
  const simd::KernelTable* wide = simd::avx2_kernels();
  if (!wide) {
    MESSAGE("no AVX2 variant on this machine");
    return;
  }
  const auto& ref = simd::scalar_kernels();
  for (std::size_t n : {1u, 3u, 8u, 67u, 512u}) {
    CAPTURE(n);
    auto up = random_field(n, 1), lo = random_field(n, 2);
    const auto d = random_field(n, 3), o = random_field(n, 4);
    const auto m00 = random_field(n, 5), m01 = random_field(n, 6), m10 = random_field(n, 7), m11 = random_field(n, 8);

    auto up2 = up, lo2 = lo;
    ref.rotate_sigma2(up.data(), lo.data(), d.data(), o.data(), n);
    wide->rotate_sigma2(up2.data(), lo2.data(), d.data(), o.data(), n);
    CHECK(max_diff(up, up2) < 1e-12);
    CHECK(max_diff(lo, lo2) < 1e-12);

    ref.apply_2x2(up.data(), lo.data(), m00.data(), m01.data(), m10.data(), m11.data(), n);
    wide->apply_2x2(up2.data(), lo2.data(), m00.data(), m01.data(), m10.data(), m11.data(), n);
    CHECK(max_diff(up, up2) < 1e-11);
    CHECK(max_diff(lo, lo2) < 1e-11);

    std::vector<double> w0(n), w1(n);
    for (std::size_t i = 0; i < n; ++i) {
      w0[i] = std::cos(0.1 * i);
      w1[i] = std::sin(0.3 * i);
    }
    std::vector<cplx> p1(n), p2(n);
    ref.project_real(up.data(), lo.data(), w0.data(), w1.data(), p1.data(), n);
    wide->project_real(up.data(), lo.data(), w0.data(), w1.data(), p2.data(), n);
    CHECK(max_diff(p1, p2) < 1e-11);

    CHECK(std::abs(ref.norm2(up.data(), n) - wide->norm2(up.data(), n)) < 1e-9);
    CHECK(std::abs(ref.dot(up.data(), lo.data(), n) - wide->dot(up.data(), lo.data(), n)) < 1e-9);

    std::vector<double> a1(n, 1.0), a2(n, 1.0);
    ref.accumulate_abs2(up.data(), a1.data(), n);
    wide->accumulate_abs2(up.data(), a2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(a1[i] == doctest::Approx(a2[i]).epsilon(1e-14));
  }
}
