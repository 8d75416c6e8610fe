// AVX2 variants of the kernel table. Compiled with -mavx2 in this translation
// unit only; dispatch guards execution behind a runtime CPU check. Each kernel
// performs the same per-element operations in the same order as the scalar
// reference so results are bit-identical (the build disables FP contraction).
#include "mhpsc/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

namespace mhpsc::kernels {
namespace {

void k_sub(const double* a, const double* b, double* out, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void k_add_clamp01(const double* a, const double* b, double* out, size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d t = _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        t = _mm256_max_pd(t, zero);
        t = _mm256_min_pd(t, one);
        _mm256_storeu_pd(out + i, t);
    }
    for (; i < n; ++i) {
        double t = a[i] + b[i];
        t = t > 0.0 ? t : 0.0;
        t = t < 1.0 ? t : 1.0;
        out[i] = t;
    }
}

void k_scale(const double* x, double s, double* out, size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), vs));
    }
    for (; i < n; ++i) out[i] = x[i] * s;
}

double k_sum_sq(const double* x, size_t n) {
    __m256d vacc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        vacc = _mm256_add_pd(vacc, _mm256_mul_pd(v, v));
    }
    alignas(32) double acc[4];
    _mm256_store_pd(acc, vacc);
    for (; i < n; ++i) acc[i & 3] += x[i] * x[i];
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double k_sum_sq_diff(const double* a, const double* b, size_t n) {
    __m256d vacc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        vacc = _mm256_add_pd(vacc, _mm256_mul_pd(d, d));
    }
    alignas(32) double acc[4];
    _mm256_store_pd(acc, vacc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        acc[i & 3] += d * d;
    }
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

void k_cmul_add(const double* h, const double* x, const double* noise, double* out, size_t n) {
    size_t i = 0;  // complex index
    for (; i + 2 <= n; i += 2) {
        const __m256d vh = _mm256_loadu_pd(h + 2 * i);
        const __m256d vx = _mm256_loadu_pd(x + 2 * i);
        const __m256d hr = _mm256_movedup_pd(vh);          // (hr0,hr0,hr1,hr1)
        const __m256d hi = _mm256_permute_pd(vh, 0b1111);  // (hi0,hi0,hi1,hi1)
        const __m256d xs = _mm256_permute_pd(vx, 0b0101);  // (xi0,xr0,xi1,xr1)
        // (hr*xr - hi*xi, hr*xi + hi*xr)
        __m256d r = _mm256_addsub_pd(_mm256_mul_pd(hr, vx), _mm256_mul_pd(hi, xs));
        if (noise) r = _mm256_add_pd(r, _mm256_loadu_pd(noise + 2 * i));
        _mm256_storeu_pd(out + 2 * i, r);
    }
    for (; i < n; ++i) {
        const double hr = h[2 * i], hi = h[2 * i + 1];
        const double xr = x[2 * i], xi = x[2 * i + 1];
        double re = hr * xr - hi * xi;
        double im = hr * xi + hi * xr;
        if (noise) {
            re += noise[2 * i];
            im += noise[2 * i + 1];
        }
        out[2 * i] = re;
        out[2 * i + 1] = im;
    }
}

void k_mmse(const double* h, const double* z, double sigma2, double* out, size_t n) {
    const __m256d vs2 = _mm256_set1_pd(sigma2);
    const __m256d zero = _mm256_setzero_pd();
    size_t i = 0;  // complex index
    for (; i + 2 <= n; i += 2) {
        const __m256d vh = _mm256_loadu_pd(h + 2 * i);
        const __m256d vz = _mm256_loadu_pd(z + 2 * i);
        const __m256d hr = _mm256_movedup_pd(vh);
        const __m256d nhi = _mm256_sub_pd(zero, _mm256_permute_pd(vh, 0b1111));  // (-hi,-hi,...)
        const __m256d zs = _mm256_permute_pd(vz, 0b0101);
        // (hr*zr + hi*zi, hr*zi - hi*zr) via addsub with negated hi
        const __m256d num = _mm256_addsub_pd(_mm256_mul_pd(hr, vz), _mm256_mul_pd(nhi, zs));
        const __m256d hh = _mm256_mul_pd(vh, vh);
        const __m256d den =
            _mm256_add_pd(_mm256_add_pd(hh, _mm256_permute_pd(hh, 0b0101)), vs2);
        _mm256_storeu_pd(out + 2 * i, _mm256_div_pd(num, den));
    }
    for (; i < n; ++i) {
        const double hr = h[2 * i], hi = h[2 * i + 1];
        const double zr = z[2 * i], zi = z[2 * i + 1];
        const double d = (hr * hr + hi * hi) + sigma2;
        out[2 * i] = (hr * zr - (-hi) * zi) / d;
        out[2 * i + 1] = (hr * zi + (-hi) * zr) / d;
    }
}

}  // namespace

const KernelTable* avx2_kernels_impl() {
    static const KernelTable table = {
        "avx2", k_sub, k_add_clamp01, k_scale, k_sum_sq, k_sum_sq_diff, k_cmul_add, k_mmse,
    };
    return &table;
}

}  // namespace mhpsc::kernels

#else

namespace mhpsc::kernels {
const KernelTable* avx2_kernels_impl() { return nullptr; }
}  // namespace mhpsc::kernels

#endif
