#pragma once

#include "pescourse/simd/kernels.hpp"

namespace pescourse::simd::detail {

// Defined in avx2.cpp when the build compiles it, otherwise returns null.
const KernelTable* avx2_table();

}  // namespace pescourse::simd::detail
