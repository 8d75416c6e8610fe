#include "mhpsc/kernels.hpp"

namespace mhpsc::kernels {
namespace {

void k_sub(const double* a, const double* b, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void k_add_clamp01(const double* a, const double* b, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        double t = a[i] + b[i];
        t = t > 0.0 ? t : 0.0;
        t = t < 1.0 ? t : 1.0;
        out[i] = t;
    }
}

void k_scale(const double* x, double s, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = x[i] * s;
}

double k_sum_sq(const double* x, size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    for (size_t i = 0; i < n; ++i) acc[i & 3] += x[i] * x[i];
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double k_sum_sq_diff(const double* a, const double* b, size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    for (size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc[i & 3] += d * d;
    }
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

void k_cmul_add(const double* h, const double* x, const double* noise, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) {
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
    for (size_t i = 0; i < n; ++i) {
        const double hr = h[2 * i], hi = h[2 * i + 1];
        const double zr = z[2 * i], zi = z[2 * i + 1];
        const double d = (hr * hr + hi * hi) + sigma2;
        // Written as a - (-b) so the AVX2 addsub form is bit-identical.
        out[2 * i] = (hr * zr - (-hi) * zi) / d;
        out[2 * i + 1] = (hr * zi + (-hi) * zr) / d;
    }
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table = {
        "scalar", k_sub, k_add_clamp01, k_scale, k_sum_sq, k_sum_sq_diff, k_cmul_add, k_mmse,
    };
    return table;
}

}  // namespace mhpsc::kernels
