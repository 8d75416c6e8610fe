#include "mhpsc/entropy_model.hpp"

#include <cmath>
#include <stdexcept>

#include "mhpsc/detail/wire.hpp"

namespace mhpsc::entropy {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double softplus(double b) { return b > 0.0 ? b + std::log1p(std::exp(-b)) : std::log1p(std::exp(b)); }

// Logistic density at z times sigma: F(z) * (1 - F(z)).
double fdens(double z) {
    const double f = sigmoid(z);
    return f * (1.0 - f);
}

// Bin edge between symbols s-1 and s in centered units; shared bitwise by
// adjacent bins so the alphabet telescopes to exactly 1.
double bin_edge(int32_t s, int q) { return (2.0 * s - q) / (q - 1.0); }

void check_grid(const MixtureParams& params, const SymbolGrid& grid) {
    if (params.u != grid.u || params.v != grid.v)
        throw std::runtime_error("mixture: params grid " + std::to_string(params.u) + "x" +
                                 std::to_string(params.v) + " vs symbols " +
                                 std::to_string(grid.u) + "x" + std::to_string(grid.v));
}

// Per-bin CDF arguments with edge folding. Folded sides report density 0.
struct Bin {
    double zlo = 0.0, zhi = 0.0;
    bool lo_folded = false, hi_folded = false;
};

Bin make_bin(int32_t s, double mu, double sigma, int q) {
    Bin b;
    b.lo_folded = (s == 0);
    b.hi_folded = (s == q - 1);
    if (!b.lo_folded) b.zlo = (bin_edge(s, q) - mu) / sigma;
    if (!b.hi_folded) b.zhi = (bin_edge(s + 1, q) - mu) / sigma;
    return b;
}

double bin_mass(const Bin& b) {
    if (b.lo_folded && b.hi_folded) return 1.0;
    if (b.lo_folded) return sigmoid(b.zhi);
    if (b.hi_folded) return sigmoid(-b.zlo);
    if (b.zlo > 0.0) return sigmoid(-b.zlo) - sigmoid(-b.zhi);  // both tails positive
    return sigmoid(b.zhi) - sigmoid(b.zlo);
}

}  // namespace

SymbolGrid SymbolGrid::zeros(int q, int u, int v) {
    SymbolGrid g;
    g.q = q;
    g.u = u;
    g.v = v;
    g.sym.assign(static_cast<size_t>(3) * u * v, 0);
    return g;
}

double centered_value(int32_t s, int q) {
    if (q < 2) return 0.0;
    return (2.0 * s - (q - 1)) / (q - 1);
}

MixtureParams MixtureParams::zeros(int k, int u, int v) {
    MixtureParams p;
    p.k = k;
    p.u = u;
    p.v = v;
    const size_t n = static_cast<size_t>(3) * u * v * k;
    p.pi.assign(n, 0.0);
    p.mu.assign(n, 0.0);
    p.sigma.assign(n, 0.0);
    p.lambda.assign(n, 0.0);
    return p;
}

MixturePreact MixturePreact::zeros(int k, int u, int v) {
    MixturePreact p;
    p.k = k;
    p.u = u;
    p.v = v;
    const size_t n = static_cast<size_t>(3) * u * v * k;
    p.pi.assign(n, 0.0);
    p.mu.assign(n, 0.0);
    p.sigma.assign(n, 0.0);
    p.lambda.assign(n, 0.0);
    return p;
}

MixtureParams activate(const MixturePreact& pre) {
    MixtureParams out = MixtureParams::zeros(pre.k, pre.u, pre.v);
    const int k = pre.k;
    const size_t groups = pre.pi.size() / k;
    for (size_t g = 0; g < groups; ++g) {
        double mx = pre.pi[g * k];
        for (int kk = 1; kk < k; ++kk) mx = std::max(mx, pre.pi[g * k + kk]);
        double sum = 0.0;
        for (int kk = 0; kk < k; ++kk) {
            out.pi[g * k + kk] = std::exp(pre.pi[g * k + kk] - mx);
            sum += out.pi[g * k + kk];
        }
        for (int kk = 0; kk < k; ++kk) out.pi[g * k + kk] /= sum;
    }
    for (size_t i = 0; i < pre.mu.size(); ++i) {
        out.mu[i] = pre.mu[i];
        out.sigma[i] = softplus(pre.sigma[i]) + kSigmaMin;
        out.lambda[i] = pre.lambda[i];
    }
    return out;
}

double logistic_cdf(double x, double mu, double sigma) {
    if (sigma <= 0.0) throw std::runtime_error("logistic_cdf: sigma must be positive");
    return sigmoid((x - mu) / sigma);
}

double discretized_logistic_pmf(int32_t symbol, double mu, double sigma, int q) {
    if (symbol < 0 || symbol >= q)
        throw std::runtime_error("discretized pmf: symbol " + std::to_string(symbol) +
                                 " outside [0, " + std::to_string(q) + ")");
    if (q == 1) return 1.0;
    return bin_mass(make_bin(symbol, mu, sigma, q));
}

std::vector<double> conditioned_means(const MixtureParams& params, const SymbolGrid& grid) {
    check_grid(params, grid);
    std::vector<double> out = params.mu;
    const int k = params.k;
    for (int uu = 0; uu < params.u; ++uu) {
        for (int vv = 0; vv < params.v; ++vv) {
            const double t0 = centered_value(grid.at(0, uu, vv), grid.q);
            const double t1 = centered_value(grid.at(1, uu, vv), grid.q);
            for (int kk = 0; kk < k; ++kk) {
                out[params.cuvk(1, uu, vv, kk)] += params.lambda[params.juvk(0, uu, vv, kk)] * t0;
                out[params.cuvk(2, uu, vv, kk)] +=
                    params.lambda[params.juvk(1, uu, vv, kk)] * t0 +
                    params.lambda[params.juvk(2, uu, vv, kk)] * t1;
            }
        }
    }
    return out;
}

namespace {
// Conditioned component means for one (c, site).
void site_means(const MixtureParams& p, const SymbolGrid& g, int c, int uu, int vv, double* m) {
    const double t0 = centered_value(g.at(0, uu, vv), g.q);
    const double t1 = centered_value(g.at(1, uu, vv), g.q);
    for (int kk = 0; kk < p.k; ++kk) {
        double mt = p.mu[p.cuvk(c, uu, vv, kk)];
        if (c == 1) mt += p.lambda[p.juvk(0, uu, vv, kk)] * t0;
        if (c == 2)
            mt += p.lambda[p.juvk(1, uu, vv, kk)] * t0 + p.lambda[p.juvk(2, uu, vv, kk)] * t1;
        m[kk] = mt;
    }
}
}  // namespace

double mixture_pmf(const MixtureParams& params, const SymbolGrid& grid, int c, int uu, int vv) {
    check_grid(params, grid);
    std::vector<double> m(params.k);
    site_means(params, grid, c, uu, vv, m.data());
    double p = 0.0;
    for (int kk = 0; kk < params.k; ++kk) {
        const size_t i = params.cuvk(c, uu, vv, kk);
        p += params.pi[i] * discretized_logistic_pmf(grid.at(c, uu, vv), m[kk], params.sigma[i],
                                                     grid.q);
    }
    return p;
}

std::vector<double> site_pmf(const MixtureParams& params, const SymbolGrid& grid, int c, int uu,
                             int vv) {
    check_grid(params, grid);
    std::vector<double> m(params.k);
    site_means(params, grid, c, uu, vv, m.data());
    std::vector<double> pmf(grid.q, 0.0);
    for (int kk = 0; kk < params.k; ++kk) {
        const size_t i = params.cuvk(c, uu, vv, kk);
        for (int32_t s = 0; s < grid.q; ++s)
            pmf[s] += params.pi[i] * discretized_logistic_pmf(s, m[kk], params.sigma[i], grid.q);
    }
    return pmf;
}

double joint_nll(const MixtureParams& params, const SymbolGrid& grid) {
    check_grid(params, grid);
    double nll = 0.0;
    for (int c = 0; c < 3; ++c)
        for (int uu = 0; uu < grid.u; ++uu)
            for (int vv = 0; vv < grid.v; ++vv)
                nll -= std::log(std::max(mixture_pmf(params, grid, c, uu, vv), kPmfFloor));
    return nll;
}

double joint_nll_bits(const MixtureParams& params, const SymbolGrid& grid) {
    return joint_nll(params, grid) / M_LN2;
}

MixturePreact nll_gradients(const MixturePreact& pre, const SymbolGrid& grid) {
    const MixtureParams params = activate(pre);
    check_grid(params, grid);
    MixturePreact grad = MixturePreact::zeros(pre.k, pre.u, pre.v);
    const int k = pre.k;
    std::vector<double> m(k), pk(k), dmu(k), dsg(k);

    for (int c = 0; c < 3; ++c) {
        for (int uu = 0; uu < grid.u; ++uu) {
            for (int vv = 0; vv < grid.v; ++vv) {
                site_means(params, grid, c, uu, vv, m.data());
                const int32_t s = grid.at(c, uu, vv);
                double p = 0.0;
                for (int kk = 0; kk < k; ++kk) {
                    const size_t i = params.cuvk(c, uu, vv, kk);
                    const double sg = params.sigma[i];
                    const Bin b = make_bin(s, m[kk], sg, grid.q);
                    pk[kk] = bin_mass(b);
                    const double flo = b.lo_folded ? 0.0 : fdens(b.zlo);
                    const double fhi = b.hi_folded ? 0.0 : fdens(b.zhi);
                    dmu[kk] = (flo - fhi) / sg;
                    dsg[kk] = ((b.lo_folded ? 0.0 : b.zlo * flo) -
                               (b.hi_folded ? 0.0 : b.zhi * fhi)) /
                              sg;
                    p += params.pi[i] * pk[kk];
                }
                if (p < kPmfFloor) continue;  // floored terms carry no gradient
                const double dldp = -1.0 / p;

                // Softmax: dL/da_k = pi_k (g_k - sum_j pi_j g_j), g = dL/dpi.
                double grot = 0.0;
                for (int kk = 0; kk < k; ++kk)
                    grot += params.pi[params.cuvk(c, uu, vv, kk)] * (dldp * pk[kk]);
                const double t0 = centered_value(grid.at(0, uu, vv), grid.q);
                const double t1 = centered_value(grid.at(1, uu, vv), grid.q);
                for (int kk = 0; kk < k; ++kk) {
                    const size_t i = params.cuvk(c, uu, vv, kk);
                    grad.pi[i] += params.pi[i] * (dldp * pk[kk] - grot);
                    const double dldmu = dldp * params.pi[i] * dmu[kk];
                    grad.mu[i] += dldmu;
                    // Softplus chain for sigma.
                    grad.sigma[i] += dldp * params.pi[i] * dsg[kk] * sigmoid(pre.sigma[i]);
                    if (c == 1) grad.lambda[params.juvk(0, uu, vv, kk)] += dldmu * t0;
                    if (c == 2) {
                        grad.lambda[params.juvk(1, uu, vv, kk)] += dldmu * t0;
                        grad.lambda[params.juvk(2, uu, vv, kk)] += dldmu * t1;
                    }
                }
            }
        }
    }
    return grad;
}

ResidualEstimator ResidualEstimator::init(int block, int q, int k) {
    if (block < 1 || q < 2 || k < 1)
        throw std::runtime_error("estimator: need block >= 1, q >= 2, k >= 1");
    ResidualEstimator e;
    e.block = block;
    e.q = q;
    e.k = k;
    const size_t row = kFeatures + 1;
    e.w_pi.assign(static_cast<size_t>(3) * k * row, 0.0);
    e.w_mu.assign(static_cast<size_t>(3) * k * row, 0.0);
    e.w_sigma.assign(static_cast<size_t>(3) * k * row, 0.0);
    e.w_lambda.assign(static_cast<size_t>(3) * k * row, 0.0);
    return e;
}

size_t ResidualEstimator::weight_count() const {
    return w_pi.size() + w_mu.size() + w_sigma.size() + w_lambda.size();
}

std::vector<double> block_features(const image::ImageTensor& img, int block) {
    const int h = img.height, w = img.width;
    const int u = (h + block - 1) / block, v = (w + block - 1) / block;
    const int f = ResidualEstimator::kFeatures;
    std::vector<double> out(static_cast<size_t>(3) * u * v * f, 0.0);
    for (int c = 0; c < 3; ++c) {
        for (int uu = 0; uu < u; ++uu) {
            for (int vv = 0; vv < v; ++vv) {
                const int r0 = uu * block, r1 = std::min(h, r0 + block);
                const int c0 = vv * block, c1 = std::min(w, c0 + block);
                const int n = (r1 - r0) * (c1 - c0);
                double sum = 0.0;
                for (int r = r0; r < r1; ++r)
                    for (int cc = c0; cc < c1; ++cc) sum += img.at(c, r, cc);
                const double mean = sum / n;
                double var = 0.0, hg = 0.0, vg = 0.0;
                int hn = 0, vn = 0;
                for (int r = r0; r < r1; ++r) {
                    for (int cc = c0; cc < c1; ++cc) {
                        const double d = img.at(c, r, cc) - mean;
                        var += d * d;
                        if (cc + 1 < c1) {
                            const double g = img.at(c, r, cc + 1) - img.at(c, r, cc);
                            hg += g * g;
                            ++hn;
                        }
                        if (r + 1 < r1) {
                            const double g = img.at(c, r + 1, cc) - img.at(c, r, cc);
                            vg += g * g;
                            ++vn;
                        }
                    }
                }
                double* dst = &out[(static_cast<size_t>(c * u + uu) * v + vv) * f];
                dst[0] = mean;
                dst[1] = std::sqrt(var / n);
                dst[2] = hn ? hg / hn : 0.0;
                dst[3] = vn ? vg / vn : 0.0;
            }
        }
    }
    return out;
}

MixturePreact estimator_forward_preact(const ResidualEstimator& est,
                                       const image::ImageTensor& condition) {
    const int f = ResidualEstimator::kFeatures;
    const int u = (condition.height + est.block - 1) / est.block;
    const int v = (condition.width + est.block - 1) / est.block;
    const std::vector<double> feat = block_features(condition, est.block);
    MixturePreact pre = MixturePreact::zeros(est.k, u, v);
    const size_t row = f + 1;

    auto dot = [&](const std::vector<double>& wm, int head, int kk, const double* x) {
        const double* wr = &wm[(static_cast<size_t>(head) * est.k + kk) * row];
        double a = wr[f];  // bias
        for (int i = 0; i < f; ++i) a += wr[i] * x[i];
        return a;
    };

    std::vector<double> favg(f);
    for (int uu = 0; uu < u; ++uu) {
        for (int vv = 0; vv < v; ++vv) {
            const size_t site = static_cast<size_t>(uu) * v + vv;
            for (int i = 0; i < f; ++i) favg[i] = 0.0;
            for (int c = 0; c < 3; ++c) {
                const double* x = &feat[(static_cast<size_t>(c * u + uu) * v + vv) * f];
                for (int i = 0; i < f; ++i) favg[i] += x[i] / 3.0;
                for (int kk = 0; kk < est.k; ++kk) {
                    const size_t i = (static_cast<size_t>(c * u + uu) * v + vv) * est.k + kk;
                    pre.pi[i] = dot(est.w_pi, c, kk, x);
                    pre.mu[i] = dot(est.w_mu, c, kk, x);
                    pre.sigma[i] = dot(est.w_sigma, c, kk, x);
                }
            }
            for (int j = 0; j < 3; ++j)
                for (int kk = 0; kk < est.k; ++kk)
                    pre.lambda[(static_cast<size_t>(j) * u * v + site) * est.k + kk] =
                        dot(est.w_lambda, j, kk, favg.data());
        }
    }
    return pre;
}

MixtureParams estimator_forward(const ResidualEstimator& est, const image::ImageTensor& condition) {
    return activate(estimator_forward_preact(est, condition));
}

namespace {
constexpr uint32_t kWeightMagic = 0x4D485245u;  // "MHRE"
constexpr uint16_t kWeightVersion = 1;
}  // namespace

void save_estimator(const ResidualEstimator& est, const std::string& path) {
    std::vector<uint8_t> buf;
    wire::put_u32(buf, kWeightMagic);
    wire::put_u16(buf, kWeightVersion);
    wire::put_u16(buf, static_cast<uint16_t>(ResidualEstimator::kFeatures));
    wire::put_u16(buf, static_cast<uint16_t>(est.k));
    wire::put_u16(buf, static_cast<uint16_t>(est.q));
    wire::put_u32(buf, static_cast<uint32_t>(est.weight_count()));
    for (const auto* w : {&est.w_pi, &est.w_mu, &est.w_sigma, &est.w_lambda})
        for (double v : *w) wire::put_f64(buf, v);
    wire::write_file(path, buf);
}

ResidualEstimator load_estimator(const std::string& path, int block) {
    using namespace wire;
    const std::vector<uint8_t> buf = read_file(path);
    if (buf.size() < 16) throw std::runtime_error("estimator weights " + path + ": truncated header");
    if (get_u32(&buf[0]) != kWeightMagic)
        throw std::runtime_error("estimator weights " + path + ": bad magic");
    if (get_u16(&buf[4]) != kWeightVersion)
        throw std::runtime_error("estimator weights " + path + ": unsupported version");
    const int features = get_u16(&buf[6]);
    if (features != ResidualEstimator::kFeatures)
        throw std::runtime_error("estimator weights " + path + ": feature count mismatch");
    const int k = get_u16(&buf[8]);
    const int q = get_u16(&buf[10]);
    const uint32_t count = get_u32(&buf[12]);

    ResidualEstimator est = ResidualEstimator::init(block, q, k);
    if (count != est.weight_count())
        throw std::runtime_error("estimator weights " + path + ": weight count mismatch");
    if (buf.size() != 16 + static_cast<size_t>(count) * 8)
        throw std::runtime_error("estimator weights " + path + ": truncated payload");

    const uint8_t* p = &buf[16];
    for (auto* w : {&est.w_pi, &est.w_mu, &est.w_sigma, &est.w_lambda})
        for (double& v : *w) {
            v = get_f64(p);
            p += 8;
        }
    return est;
}

}  // namespace mhpsc::entropy
