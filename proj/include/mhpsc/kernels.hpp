#pragma once

#include <cstddef>

namespace mhpsc::kernels {

// Hot elementwise/reduction loops used by the image and channel modules.
// Two implementations exist: a scalar reference and an AVX2 variant compiled
// in its own translation unit. Both follow the same per-element operation
// order and the same reduction contract (four stride-4 accumulators combined
// as (a0+a1)+(a2+a3)), so their results are bit-identical; tests assert this.
//
// Complex arrays are interleaved (re, im) pairs; `n` counts complex elements
// for the complex kernels and doubles for the real ones.
struct KernelTable {
    const char* name;

    // out[i] = a[i] - b[i]
    void (*sub)(const double* a, const double* b, double* out, size_t n);
    // out[i] = clamp(a[i] + b[i], 0, 1)
    void (*add_clamp01)(const double* a, const double* b, double* out, size_t n);
    // out[i] = x[i] * s
    void (*scale)(const double* x, double s, double* out, size_t n);
    // sum of x[i]^2
    double (*sum_sq)(const double* x, size_t n);
    // sum of (a[i]-b[i])^2
    double (*sum_sq_diff)(const double* a, const double* b, size_t n);
    // out = h*x + noise (complex, interleaved); noise may be null
    void (*cmul_add)(const double* h, const double* x, const double* noise, double* out, size_t n);
    // out = conj(h)*z / (|h|^2 + sigma2) (complex, interleaved)
    void (*mmse)(const double* h, const double* z, double sigma2, double* out, size_t n);
};

const KernelTable& scalar_kernels();

// Returns nullptr when the build or the running CPU lacks AVX2.
const KernelTable* avx2_kernels();

// Dispatched table: AVX2 when available, else scalar. The environment
// variable MHPSC_KERNELS=scalar|avx2 forces a specific variant.
const KernelTable& active_kernels();

}  // namespace mhpsc::kernels
