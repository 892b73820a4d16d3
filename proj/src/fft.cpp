#include "cqft/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace cqft {

namespace detail {
void* fft_alloc(std::size_t bytes) { return fftw_malloc(bytes); }
void fft_free(void* ptr) noexcept { fftw_free(ptr); }
}  // namespace detail

namespace {
// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct SpinorFft::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

SpinorFft::SpinorFft(std::size_t points) : points_(points), plans_(std::make_unique<Plans>()) {
  AlignedComplex scratch(2 * points_);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  const int n = static_cast<int>(points_);
  std::lock_guard lock(planner_mutex());
  plans_->forward = fftw_plan_many_dft(1, &n, 2, buf, nullptr, 1, n, buf, nullptr, 1, n,
                                       FFTW_FORWARD, FFTW_ESTIMATE);
  plans_->backward = fftw_plan_many_dft(1, &n, 2, buf, nullptr, 1, n, buf, nullptr, 1, n,
                                        FFTW_BACKWARD, FFTW_ESTIMATE);
}

SpinorFft::~SpinorFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plans_->forward);
  fftw_destroy_plan(plans_->backward);
}

void SpinorFft::forward(cplx* data) const {
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plans_->forward, buf, buf);
}

void SpinorFft::backward(cplx* data) const {
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plans_->backward, buf, buf);
}

}  // namespace cqft
