#include <cstdlib>
#include <string_view>

#include "variants.hpp"

namespace cqft::simd {

const KernelTable& scalar_kernels() { return detail::kScalarTable; }

const KernelTable* avx2_kernels() {
#if defined(CQFT_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &detail::kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active_kernels() {
  static const KernelTable& table = []() -> const KernelTable& {
    const char* env = std::getenv("CQFT_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar_kernels();
    if (const auto* t = avx2_kernels()) return *t;
    return scalar_kernels();
  }();
  return table;
}

}  // namespace cqft::simd
