#include "mhpsc/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mhpsc/kernels.hpp"

namespace mhpsc::metrics {

double mse(const image::ImageTensor& a, const image::ImageTensor& b) {
    if (!a.same_shape(b)) throw std::runtime_error("mse: image sizes differ");
    const double s = kernels::active_kernels().sum_sq_diff(a.data.data(), b.data.data(),
                                                           a.data.size());
    return s / static_cast<double>(a.data.size());
}

double psnr(const image::ImageTensor& a, const image::ImageTensor& b) {
    const double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / m);
}

namespace {

constexpr int kWin = 11;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr double kWeights5[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

struct Plane {
    int h = 0, w = 0;
    std::vector<double> v;
    double at(int i, int j) const { return v[static_cast<size_t>(i) * w + j]; }
};

std::vector<double> gaussian_window() {
    std::vector<double> g(kWin);
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double x = i - (kWin - 1) / 2.0;
        g[i] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
        sum += g[i];
    }
    for (auto& x : g) x /= sum;
    return g;
}

// Separable valid-mode convolution with the 11-tap Gaussian.
Plane blur(const Plane& p, const std::vector<double>& g) {
    const int oh = p.h - kWin + 1, ow = p.w - kWin + 1;
    Plane tmp{oh, p.w, std::vector<double>(static_cast<size_t>(oh) * p.w)};
    for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < p.w; ++j) {
            double s = 0.0;
            for (int t = 0; t < kWin; ++t) s += g[t] * p.at(i + t, j);
            tmp.v[static_cast<size_t>(i) * p.w + j] = s;
        }
    }
    Plane out{oh, ow, std::vector<double>(static_cast<size_t>(oh) * ow)};
    for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
            double s = 0.0;
            for (int t = 0; t < kWin; ++t) s += g[t] * tmp.at(i, j + t);
            out.v[static_cast<size_t>(i) * ow + j] = s;
        }
    }
    return out;
}

Plane mul(const Plane& a, const Plane& b) {
    Plane out = a;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
    return out;
}

// 2x2 average pooling; odd trailing row/col dropped.
Plane downsample(const Plane& p) {
    const int oh = p.h / 2, ow = p.w / 2;
    Plane out{oh, ow, std::vector<double>(static_cast<size_t>(oh) * ow)};
    for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
            out.v[static_cast<size_t>(i) * ow + j] =
                0.25 * (p.at(2 * i, 2 * j) + p.at(2 * i, 2 * j + 1) + p.at(2 * i + 1, 2 * j) +
                        p.at(2 * i + 1, 2 * j + 1));
        }
    }
    return out;
}

// Returns mean contrast-structure term and mean luminance term at one scale.
void ssim_terms(const Plane& x, const Plane& y, const std::vector<double>& g, double& mean_cs,
                double& mean_l) {
    const Plane mu1 = blur(x, g), mu2 = blur(y, g);
    const Plane x2 = blur(mul(x, x), g), y2 = blur(mul(y, y), g), xy = blur(mul(x, y), g);
    double cs = 0.0, l = 0.0;
    for (size_t i = 0; i < mu1.v.size(); ++i) {
        const double m1 = mu1.v[i], m2 = mu2.v[i];
        const double s1 = x2.v[i] - m1 * m1;
        const double s2 = y2.v[i] - m2 * m2;
        const double s12 = xy.v[i] - m1 * m2;
        cs += (2.0 * s12 + kC2) / (s1 + s2 + kC2);
        l += (2.0 * m1 * m2 + kC1) / (m1 * m1 + m2 * m2 + kC1);
    }
    mean_cs = cs / static_cast<double>(mu1.v.size());
    mean_l = l / static_cast<double>(mu1.v.size());
}

}  // namespace

double ms_ssim(const image::ImageTensor& a, const image::ImageTensor& b) {
    if (!a.same_shape(b)) throw std::runtime_error("ms_ssim: image sizes differ");
    const int minside = a.height < a.width ? a.height : a.width;
    int scales = 0;
    while (scales < 5 && (minside >> scales) >= kWin) ++scales;
    if (scales == 0) throw std::runtime_error("ms_ssim: image smaller than 11x11");

    double wsum = 0.0;
    for (int s = 0; s < scales; ++s) wsum += kWeights5[s];

    const auto g = gaussian_window();
    double result = 0.0;
    for (int c = 0; c < 3; ++c) {
        Plane x{a.height, a.width, {}}, y{a.height, a.width, {}};
        const size_t plane = a.plane();
        x.v.assign(a.data.begin() + c * plane, a.data.begin() + (c + 1) * plane);
        y.v.assign(b.data.begin() + c * plane, b.data.begin() + (c + 1) * plane);
        double chan = 1.0;
        for (int s = 0; s < scales; ++s) {
            double mcs, ml;
            ssim_terms(x, y, g, mcs, ml);
            if (mcs < 0.0) mcs = 0.0;
            if (ml < 0.0) ml = 0.0;
            const double w = kWeights5[s] / wsum;
            chan *= std::pow(s + 1 == scales ? mcs * ml : mcs, w);
            if (s + 1 < scales) {
                x = downsample(x);
                y = downsample(y);
            }
        }
        result += chan;
    }
    return result / 3.0;
}

}  // namespace mhpsc::metrics
