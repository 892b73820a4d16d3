#pragma once

#include "cqft/kernels.hpp"

namespace cqft::simd::detail {

extern const KernelTable kScalarTable;
#if defined(CQFT_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

}  // namespace cqft::simd::detail
