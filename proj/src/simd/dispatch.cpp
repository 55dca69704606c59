#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace pescourse::simd {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable& select_kernels() {
    if (const char* forced = std::getenv("PESCOURSE_SIMD"); forced && std::string_view(forced) == "scalar") {
        return scalar_kernels();
    }
    if (const auto* avx2 = avx2_kernels()) return *avx2;
    return scalar_kernels();
}

}  // namespace

const KernelTable* avx2_kernels() {
    static const KernelTable* table = cpu_has_avx2() ? detail::avx2_table() : nullptr;
    return table;
}

const KernelTable& active_kernels() {
    static const KernelTable& table = select_kernels();
    return table;
}

}  // namespace pescourse::simd
