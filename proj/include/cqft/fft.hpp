#pragma once

#include <cstddef>
#include <memory>
#include <new>
#include <vector>

#include "cqft/grid.hpp"

namespace cqft {

namespace detail {
void* fft_alloc(std::size_t bytes);
void fft_free(void* ptr) noexcept;
}  // namespace detail

/// Allocator handing out FFTW-aligned storage, so any buffer built with it can
/// be passed to a plan created on a different buffer of the same layout.
template <class T>
struct FftAllocator {
  using value_type = T;
  FftAllocator() = default;
  template <class U>
  FftAllocator(const FftAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    if (auto* p = detail::fft_alloc(n * sizeof(T))) return static_cast<T*>(p);
    throw std::bad_alloc();
  }
  void deallocate(T* p, std::size_t) noexcept { detail::fft_free(p); }
  template <class U>
  bool operator==(const FftAllocator<U>&) const noexcept { return true; }
};

using AlignedComplex = std::vector<cplx, FftAllocator<cplx>>;

/// In-place forward/backward DFT of a two-component field stored as
/// [upper(N), lower(N)]. Unnormalized in both directions (backward(forward(x))
/// = N x). Plans are built once with FFTW_ESTIMATE, which keeps the chosen
/// algorithm and therefore the rounding identical from run to run; execution
/// is safe from any number of threads.
class SpinorFft {
 public:
  explicit SpinorFft(std::size_t points);
  ~SpinorFft();
  SpinorFft(const SpinorFft&) = delete;
  SpinorFft& operator=(const SpinorFft&) = delete;

  std::size_t size() const { return points_; }
  void forward(cplx* data) const;
  void backward(cplx* data) const;

 private:
  struct Plans;
  std::size_t points_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace cqft
