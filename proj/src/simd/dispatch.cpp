#include <cstdlib>
#include <cstring>

#include "ms/simd.hpp"

namespace ms::simd {

#ifdef MS_HAVE_AVX2_BUILD
const Kernels* avx2_kernels_impl();
#endif

const Kernels* avx2_kernels_if_supported() {
#ifdef MS_HAVE_AVX2_BUILD
    if (__builtin_cpu_supports("avx2")) {
        return avx2_kernels_impl();
    }
#endif
    return nullptr;
}

namespace {

const Kernels* select() {
    const char* mode = std::getenv("MOTIONSTITCH_SIMD");
    if (mode != nullptr && std::strcmp(mode, "scalar") == 0) {
        return &scalar_kernels();
    }
    const Kernels* avx2 = avx2_kernels_if_supported();
    if (mode != nullptr && std::strcmp(mode, "avx2") == 0) {
        // Explicit request; fall back to scalar only if the CPU lacks AVX2.
        return avx2 != nullptr ? avx2 : &scalar_kernels();
    }
    return avx2 != nullptr ? avx2 : &scalar_kernels();
}

}  // namespace

const Kernels& kernels() {
    static const Kernels* active = select();
    return *active;
}

}  // namespace ms::simd
