#include "mhpsc/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace mhpsc::kernels {

// Defined in kernels_avx2.cpp; returns nullptr when built without AVX2.
const KernelTable* avx2_kernels_impl();

const KernelTable* avx2_kernels() {
#if defined(__x86_64__) || defined(__i386__)
    if (!__builtin_cpu_supports("avx2")) return nullptr;
    return avx2_kernels_impl();
#else
    return nullptr;
#endif
}

const KernelTable& active_kernels() {
    static const KernelTable* selected = [] {
        const char* force = std::getenv("MHPSC_KERNELS");
        if (force && std::strcmp(force, "scalar") == 0) return &scalar_kernels();
        const KernelTable* avx2 = avx2_kernels();
        if (force && std::strcmp(force, "avx2") == 0) {
            if (!avx2) throw std::runtime_error("MHPSC_KERNELS=avx2: AVX2 not available");
            return avx2;
        }
        return avx2 ? avx2 : &scalar_kernels();
    }();
    return *selected;
}

}  // namespace mhpsc::kernels
