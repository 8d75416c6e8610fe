#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mhpsc/image.hpp"

namespace mhpsc::entropy {

constexpr double kSigmaMin = 1e-3;
constexpr double kPmfFloor = 1.0 / 16777216.0;  // 2^-24, the coder-side minimum mass

// Quantized residual symbols in [0, q-1], shape (3, u, v), plane-major.
struct SymbolGrid {
    int q = 0;
    int u = 0;
    int v = 0;
    std::vector<int32_t> sym;

    static SymbolGrid zeros(int q, int u, int v);
    int32_t& at(int c, int uu, int vv) { return sym[(c * u + uu) * v + vv]; }
    int32_t at(int c, int uu, int vv) const { return sym[(c * u + uu) * v + vv]; }
    size_t size() const { return sym.size(); }
};

// Integer symbol s in [0, q-1] mapped to the centered real value
// (2s - (q-1)) / (q-1) in [-1, 1].
double centered_value(int32_t s, int q);

// Mixture-of-logistics parameters per channel c, site (u,v), component k.
// pi/mu/sigma are indexed [(c*u + uu)*v + vv)*k_ + k]; the autoregression
// coefficients lambda do not vary with c and are indexed
// [(j*u*v + site)*k_ + k] with j in {0,1,2} for the three cross-channel taps.
struct MixtureParams {
    int k = 0;
    int u = 0;
    int v = 0;
    std::vector<double> pi;      // simplex over k at each (c,site)
    std::vector<double> mu;      // symbol units (centered scale)
    std::vector<double> sigma;   // logistic scales, >= kSigmaMin
    std::vector<double> lambda;  // 3 taps per (site, k)

    static MixtureParams zeros(int k, int u, int v);
    size_t cuvk(int c, int uu, int vv, int kk) const {
        return (static_cast<size_t>(c * u + uu) * v + vv) * k + kk;
    }
    size_t juvk(int j, int uu, int vv, int kk) const {
        return (static_cast<size_t>(j * u + uu) * v + vv) * k + kk;
    }
};

// Unconstrained pre-activations: pi via softmax over k, sigma via
// softplus + kSigmaMin, mu and lambda identity. Same layout as MixtureParams.
struct MixturePreact {
    int k = 0;
    int u = 0;
    int v = 0;
    std::vector<double> pi;
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> lambda;

    static MixturePreact zeros(int k, int u, int v);
};

MixtureParams activate(const MixturePreact& pre);

// Numerically stable 1 / (1 + exp(-(x - mu) / sigma)).
double logistic_cdf(double x, double mu, double sigma);

// CDF difference over the centered bin of `symbol`, edge bins folded so the
// alphabet sums to 1 exactly.
double discretized_logistic_pmf(int32_t symbol, double mu, double sigma, int q);

// Autoregressive means: c=0 uses mu as-is; c=1 adds lambda0 * t(r0);
// c=2 adds lambda1 * t(r0) + lambda2 * t(r1), with t the centered value of
// the earlier-channel symbols at the same site. Indexed like pi/mu/sigma.
std::vector<double> conditioned_means(const MixtureParams& params, const SymbolGrid& grid);

// Probability of grid[c,u,v] under the mixture with conditioned means.
double mixture_pmf(const MixtureParams& params, const SymbolGrid& grid, int c, int uu, int vv);

// Full-alphabet pmf at a site (depends only on earlier-channel symbols there).
std::vector<double> site_pmf(const MixtureParams& params, const SymbolGrid& grid, int c, int uu,
                             int vv);

// -sum log mixture_pmf over all sites, each term floored at kPmfFloor. Nats.
double joint_nll(const MixtureParams& params, const SymbolGrid& grid);
double joint_nll_bits(const MixtureParams& params, const SymbolGrid& grid);

// Analytic d(joint_nll)/d(pre-activation), same layout as the input.
MixturePreact nll_gradients(const MixturePreact& pre, const SymbolGrid& grid);

// Shallow trainable map from per-block condition features to mixture
// pre-activations: one affine row per (channel, component, parameter), the
// lambda rows driven by channel-averaged features.
struct ResidualEstimator {
    static constexpr int kFeatures = 4;  // block mean, stddev, h/v gradient energy

    int block = 0;  // downsample factor d of the residual grid
    int q = 0;      // symbol alphabet size
    int k = 0;      // mixture components

    // Affine rows of kFeatures weights + bias: w_pi/w_mu/w_sigma indexed
    // [(c*k + kk)*(kFeatures+1) + i], w_lambda indexed [(j*k + kk)*(...) + i].
    std::vector<double> w_pi;
    std::vector<double> w_mu;
    std::vector<double> w_sigma;
    std::vector<double> w_lambda;

    static ResidualEstimator init(int block, int q, int k);
    size_t weight_count() const;
};

// Per-block features of the full-resolution condition image, evaluated on the
// residual grid (u = ceil(h/block), v = ceil(w/block)); partial edge blocks
// use the pixels present. Layout [(c*u + uu)*v + vv)*kFeatures + f].
std::vector<double> block_features(const image::ImageTensor& img, int block);

MixturePreact estimator_forward_preact(const ResidualEstimator& est,
                                       const image::ImageTensor& condition);
MixtureParams estimator_forward(const ResidualEstimator& est,
                                const image::ImageTensor& condition);

// Flat little-endian doubles after a 16-byte header
// (magic u32, version u16, feature count u16, K u16, Q u16, count u32).
// The grid block size is configuration, not weights, so loading takes it.
void save_estimator(const ResidualEstimator& est, const std::string& path);
ResidualEstimator load_estimator(const std::string& path, int block);

}  // namespace mhpsc::entropy
