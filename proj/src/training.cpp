#include "mhpsc/training.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "mhpsc/channel.hpp"
#include "mhpsc/metrics.hpp"
#include "mhpsc/pipeline.hpp"
#include "mhpsc/rng.hpp"

namespace mhpsc::train {
namespace {

using codec::CodecDescriptor;
using codec::ResidualCompressorDescriptor;
using entropy::ResidualEstimator;
using entropy::SymbolGrid;
using image::ImageTensor;

// One sampled link: after MMSE equalization and unscaling, code entry e maps
// to gain[e]*y[e] + alpha*beta[e] with alpha the (stop-gradient) power scale.
struct AffineLink {
    std::vector<double> gain;
    std::vector<double> beta;
};

AffineLink make_link(int l, const ChannelTrainConfig& ch, uint64_t seed) {
    size_t nsym = static_cast<size_t>(l) / 2;
    auto cr = ch.awgn ? channel::ChannelRealization::awgn(nsym, ch.snr_db, seed, ch.noiseless)
                      : channel::ChannelRealization::rayleigh(nsym, ch.snr_db, seed, ch.noiseless);
    AffineLink link;
    link.gain.resize(static_cast<size_t>(l));
    link.beta.assign(static_cast<size_t>(l), 0.0);
    double s2 = cr.noiseless ? 0.0 : cr.noise_variance;
    for (size_t i = 0; i < nsym; ++i) {
        double h2 = std::norm(cr.gains[i]);
        double g = (h2 + s2) > 0.0 ? h2 / (h2 + s2) : 0.0;
        link.gain[2 * i] = g;
        link.gain[2 * i + 1] = g;
    }
    if (!cr.noiseless) {
        // Equalizing a silent transmission isolates the additive term.
        channel::SymbolVector zeros(nsym, std::complex<double>(0.0, 0.0));
        auto b = channel::mmse_equalize(channel::rayleigh_transmit(zeros, cr), cr);
        for (size_t i = 0; i < nsym; ++i) {
            link.beta[2 * i] = b[i].real();
            link.beta[2 * i + 1] = b[i].imag();
        }
    }
    return link;
}

double power_scale(const std::vector<double>& y) {
    double ss = 0.0;
    for (double v : y) ss += v * v;
    return ss > 0.0 ? std::sqrt(ss / (static_cast<double>(y.size()) / 2.0)) : 0.0;
}

void apply_link(const AffineLink& link, const std::vector<double>& y, std::vector<double>& out) {
    double alpha = power_scale(y);
    out.resize(y.size());
    for (size_t e = 0; e < y.size(); ++e) out[e] = link.gain[e] * y[e] + alpha * link.beta[e];
}

// Block gather/scatter matching the trainable codec's flatten layout:
// dst[(c*block + r)*block + cc], blocks row-major.
void gather_blocks(const ImageTensor& img, int block, std::vector<double>& out) {
    int by = img.height / block, bx = img.width / block, dim = 3 * block * block;
    out.resize(static_cast<size_t>(by) * bx * dim);
    size_t blk = 0;
    for (int y = 0; y < by; ++y)
        for (int x = 0; x < bx; ++x, ++blk) {
            double* dst = out.data() + blk * dim;
            for (int c = 0; c < 3; ++c)
                for (int r = 0; r < block; ++r)
                    for (int cc = 0; cc < block; ++cc)
                        dst[(c * block + r) * block + cc] =
                            img.at(c, y * block + r, x * block + cc);
        }
}

void scatter_blocks(const std::vector<double>& in, int block, ImageTensor& img) {
    int by = img.height / block, bx = img.width / block, dim = 3 * block * block;
    size_t blk = 0;
    for (int y = 0; y < by; ++y)
        for (int x = 0; x < bx; ++x, ++blk) {
            const double* src = in.data() + blk * dim;
            for (int c = 0; c < 3; ++c)
                for (int r = 0; r < block; ++r)
                    for (int cc = 0; cc < block; ++cc)
                        img.at(c, y * block + r, x * block + cc) =
                            src[(c * block + r) * block + cc];
        }
}

// Per-block GEMVs over all blocks. xb is (B x dim) block-major, y is (B x m).
void enc_forward(const CodecDescriptor& c, const std::vector<double>& xb, std::vector<double>& y) {
    int dim = c.block_dim(), m = c.per_block(), nb = c.blocks();
    y.assign(static_cast<size_t>(nb) * m, 0.0);
    for (int b = 0; b < nb; ++b) {
        const double* x = xb.data() + static_cast<size_t>(b) * dim;
        double* yo = y.data() + static_cast<size_t>(b) * m;
        for (int i = 0; i < m; ++i) {
            const double* row = c.w_enc.data() + static_cast<size_t>(i) * dim;
            double acc = 0.0;
            for (int t = 0; t < dim; ++t) acc += row[t] * x[t];
            yo[i] = acc;
        }
    }
}

void dec_forward(const CodecDescriptor& c, const std::vector<double>& y, std::vector<double>& xb) {
    int dim = c.block_dim(), m = c.per_block(), nb = c.blocks();
    xb.assign(static_cast<size_t>(nb) * dim, 0.0);
    for (int b = 0; b < nb; ++b) {
        const double* yi = y.data() + static_cast<size_t>(b) * m;
        double* x = xb.data() + static_cast<size_t>(b) * dim;
        for (int t = 0; t < dim; ++t) {
            const double* row = c.w_dec.data() + static_cast<size_t>(t) * m;
            double acc = 0.0;
            for (int i = 0; i < m; ++i) acc += row[i] * yi[i];
            x[t] = acc;
        }
    }
}

// out = W_dec^T v, (B x m).
void dec_transpose(const CodecDescriptor& c, const std::vector<double>& v,
                   std::vector<double>& out) {
    int dim = c.block_dim(), m = c.per_block(), nb = c.blocks();
    out.assign(static_cast<size_t>(nb) * m, 0.0);
    for (int b = 0; b < nb; ++b) {
        const double* vb = v.data() + static_cast<size_t>(b) * dim;
        double* o = out.data() + static_cast<size_t>(b) * m;
        for (int t = 0; t < dim; ++t) {
            const double* row = c.w_dec.data() + static_cast<size_t>(t) * m;
            double vt = vb[t];
            for (int i = 0; i < m; ++i) o[i] += row[i] * vt;
        }
    }
}

// out = W_enc^T u, (B x dim).
void enc_transpose(const CodecDescriptor& c, const std::vector<double>& u,
                   std::vector<double>& out) {
    int dim = c.block_dim(), m = c.per_block(), nb = c.blocks();
    out.assign(static_cast<size_t>(nb) * dim, 0.0);
    for (int b = 0; b < nb; ++b) {
        const double* ub = u.data() + static_cast<size_t>(b) * m;
        double* o = out.data() + static_cast<size_t>(b) * dim;
        for (int i = 0; i < m; ++i) {
            const double* row = c.w_enc.data() + static_cast<size_t>(i) * dim;
            double ui = ub[i];
            for (int t = 0; t < dim; ++t) o[t] += row[t] * ui;
        }
    }
}

void check_dataset(const std::vector<ImageTensor>& images, int h, int w, const char* who) {
    if (images.empty()) throw std::invalid_argument(std::string(who) + ": empty dataset");
    for (const auto& im : images)
        if (im.height != h || im.width != w)
            throw std::invalid_argument(std::string(who) + ": dataset image shape mismatch");
}

void check_cfg(const TrainConfig& cfg, const ChannelTrainConfig& ch, const char* who) {
    if (cfg.hops < 1) throw std::invalid_argument(std::string(who) + ": hops must be >= 1");
    if (!(cfg.gamma > 0.0)) throw std::invalid_argument(std::string(who) + ": gamma must be > 0");
    if (cfg.steps < 0) throw std::invalid_argument(std::string(who) + ": steps must be >= 0");
    if (!(cfg.lr >= 0.0)) throw std::invalid_argument(std::string(who) + ": lr must be >= 0");
    if (ch.realizations < 1)
        throw std::invalid_argument(std::string(who) + ": realizations must be >= 1");
}

uint64_t link_seed(const ChannelTrainConfig& ch, size_t img, int rep, int hop) {
    uint64_t a = rng::derive_stream(ch.seed, 0xA100 + img);
    uint64_t b = rng::derive_stream(a, 0xB1 + static_cast<uint64_t>(rep));
    return rng::derive_stream(b, static_cast<uint64_t>(hop));
}

// ---- stage 1 ----------------------------------------------------------

// Deterministic full-batch objective: the channel draws are fixed for the
// whole run, so descent with backtracking is well defined.
struct Stage1Problem {
    const std::vector<ImageTensor>* images = nullptr;
    std::vector<std::vector<double>> xs;    // gathered input blocks per image
    std::vector<AffineLink> links;          // [(img*R + rep)*N + hop]
    int n_hops = 0;
    int reps = 0;
    double gamma = 1.0;
    double norm = 0.0;  // 1 / (N * I * R * 3HW)

    void build(const std::vector<ImageTensor>& imgs, const CodecDescriptor& cdc,
               const TrainConfig& cfg, const ChannelTrainConfig& ch) {
        images = &imgs;
        n_hops = cfg.hops;
        reps = ch.realizations;
        gamma = cfg.gamma;
        size_t px = static_cast<size_t>(3) * cdc.height * cdc.width;
        norm = 1.0 / (static_cast<double>(n_hops) * imgs.size() * reps * px);
        xs.resize(imgs.size());
        for (size_t i = 0; i < imgs.size(); ++i) gather_blocks(imgs[i], cdc.block, xs[i]);
        links.reserve(imgs.size() * reps * n_hops);
        for (size_t i = 0; i < imgs.size(); ++i)
            for (int r = 0; r < reps; ++r)
                for (int n = 0; n < n_hops; ++n) links.push_back(make_link(cdc.l, ch, link_seed(ch, i, r, n)));
    }

    double eval(const CodecDescriptor& cdc, std::vector<double>* g_enc,
                std::vector<double>* g_dec) const {
        if (g_enc) {
            g_enc->assign(cdc.w_enc.size(), 0.0);
            g_dec->assign(cdc.w_dec.size(), 0.0);
        }
        int dim = cdc.block_dim(), m = cdc.per_block(), nb = cdc.blocks();
        double loss = 0.0;
        std::vector<std::vector<double>> tx(n_hops + 1), tyh(n_hops);
        std::vector<double> y, g, gyh, gy, gx, carry;
        for (size_t i = 0; i < xs.size(); ++i) {
            for (int r = 0; r < reps; ++r) {
                const AffineLink* lk = &links[(i * reps + r) * n_hops];
                tx[0] = xs[i];
                for (int n = 0; n < n_hops; ++n) {
                    enc_forward(cdc, tx[n], y);
                    apply_link(lk[n], y, tyh[n]);
                    dec_forward(cdc, tyh[n], tx[n + 1]);
                    double w = std::pow(gamma, n_hops - 1 - n) * norm;
                    double ss = 0.0;
                    for (size_t e = 0; e < tx[n].size(); ++e) {
                        double d = tx[n + 1][e] - tx[n][e];
                        ss += d * d;
                    }
                    loss += w * ss;
                }
                if (!g_enc) continue;
                carry.assign(tx[0].size(), 0.0);
                for (int n = n_hops - 1; n >= 0; --n) {
                    double w = std::pow(gamma, n_hops - 1 - n) * norm;
                    const std::vector<double>&x = tx[n], &xh = tx[n + 1], &yh = tyh[n];
                    g.resize(x.size());
                    for (size_t e = 0; e < x.size(); ++e)
                        g[e] = 2.0 * w * (xh[e] - x[e]) + carry[e];
                    for (int b = 0; b < nb; ++b) {
                        const double* gb = g.data() + static_cast<size_t>(b) * dim;
                        const double* yb = yh.data() + static_cast<size_t>(b) * m;
                        for (int t = 0; t < dim; ++t) {
                            double* row = g_dec->data() + static_cast<size_t>(t) * m;
                            double gt = gb[t];
                            for (int ii = 0; ii < m; ++ii) row[ii] += gt * yb[ii];
                        }
                    }
                    dec_transpose(cdc, g, gyh);
                    gy.resize(gyh.size());
                    for (size_t e = 0; e < gyh.size(); ++e) gy[e] = lk[n].gain[e] * gyh[e];
                    for (int b = 0; b < nb; ++b) {
                        const double* gyb = gy.data() + static_cast<size_t>(b) * m;
                        const double* xb = x.data() + static_cast<size_t>(b) * dim;
                        for (int ii = 0; ii < m; ++ii) {
                            double* row = g_enc->data() + static_cast<size_t>(ii) * dim;
                            double gi = gyb[ii];
                            for (int t = 0; t < dim; ++t) row[t] += gi * xb[t];
                        }
                    }
                    enc_transpose(cdc, gy, gx);
                    carry.resize(gx.size());
                    for (size_t e = 0; e < gx.size(); ++e)
                        carry[e] = gx[e] - 2.0 * w * (xh[e] - x[e]);
                }
            }
        }
        return loss;
    }
};

void check_stage1_inputs(const CodecDescriptor& cdc, const std::vector<ImageTensor>& images,
                         const char* who) {
    if (cdc.kind != codec::CodecKind::trainable_linear)
        throw std::invalid_argument(std::string(who) + ": codec must be trainable_linear");
    check_dataset(images, cdc.height, cdc.width, who);
}

// ---- stage 2 ----------------------------------------------------------

ImageTensor through_link(const CodecDescriptor& cdc, const AffineLink& lk, const ImageTensor& x) {
    auto code = codec::codec_encode(cdc, x);
    std::vector<double> rx;
    apply_link(lk, code, rx);
    return codec::codec_decode_raw(cdc, rx);
}

// v -> A^T v for A = decode . diag(gain) . encode; the orthonormal DCT path
// is self-adjoint, the linear pair transposes its weights.
ImageTensor adjoint_link(const CodecDescriptor& cdc, const AffineLink& lk, const ImageTensor& v) {
    if (cdc.kind == codec::CodecKind::block_dct) {
        auto code = codec::codec_encode(cdc, v);
        for (size_t e = 0; e < code.size(); ++e) code[e] *= lk.gain[e];
        return codec::codec_decode_raw(cdc, code);
    }
    std::vector<double> vb, t1, t3;
    gather_blocks(v, cdc.block, vb);
    dec_transpose(cdc, vb, t1);
    for (size_t e = 0; e < t1.size(); ++e) t1[e] *= lk.gain[e];
    enc_transpose(cdc, t1, t3);
    ImageTensor out = ImageTensor::zeros(v.height, v.width);
    scatter_blocks(t3, cdc.block, out);
    return out;
}

struct Stage2Problem {
    const std::vector<ImageTensor>* images = nullptr;
    const CodecDescriptor* cdc = nullptr;
    std::vector<AffineLink> links;  // [(img*R + rep)*N + hop]
    int n_hops = 0;
    int reps = 0;
    double gamma = 1.0;
    double norm = 0.0;

    void build(const CodecDescriptor& frozen, const std::vector<ImageTensor>& imgs,
               const TrainConfig& cfg, const ChannelTrainConfig& ch) {
        cdc = &frozen;
        images = &imgs;
        n_hops = cfg.hops;
        reps = ch.realizations;
        gamma = cfg.gamma;
        size_t px = static_cast<size_t>(3) * frozen.height * frozen.width;
        norm = 1.0 / (static_cast<double>(n_hops) * imgs.size() * reps * px);
        links.reserve(imgs.size() * reps * n_hops);
        for (size_t i = 0; i < imgs.size(); ++i)
            for (int r = 0; r < reps; ++r)
                for (int n = 0; n < n_hops; ++n)
                    links.push_back(make_link(frozen.l, ch, link_seed(ch, i, r, n)));
    }

    double eval(const ResidualCompressorDescriptor& rc, std::vector<double>* g_pre,
                std::vector<double>* g_post) const {
        if (g_pre) {
            g_pre->assign(rc.pre_w.size(), 0.0);
            g_post->assign(rc.post_w.size(), 0.0);
        }
        int d = rc.block, gu = rc.gu(), gv = rc.gv();
        size_t grid_n = static_cast<size_t>(3) * gu * gv;
        double loss = 0.0;
        // per-hop traces
        std::vector<ImageTensor> tx(n_hops + 1);
        std::vector<std::vector<double>> tr(n_hops), tcval(n_hops), tval(n_hops);
        for (size_t i = 0; i < images->size(); ++i) {
            for (int rep = 0; rep < reps; ++rep) {
                const AffineLink* lk = &links[(i * reps + rep) * n_hops];
                tx[0] = (*images)[i];
                for (int n = 0; n < n_hops; ++n) {
                    ImageTensor shat = through_link(*cdc, lk[n], tx[n]);
                    tr[n].resize(tx[n].data.size());
                    for (size_t e = 0; e < tr[n].size(); ++e)
                        tr[n][e] = tx[n].data[e] - shat.data[e];
                    tcval[n].assign(grid_n, 0.0);
                    tval[n].assign(grid_n, 0.0);
                    ImageTensor stilde = shat;
                    for (int c = 0; c < 3; ++c)
                        for (int uu = 0; uu < gu; ++uu)
                            for (int vv = 0; vv < gv; ++vv) {
                                size_t gi = (static_cast<size_t>(c) * gu + uu) * gv + vv;
                                double dot = 0.0;
                                for (int r = 0; r < d; ++r)
                                    for (int cc = 0; cc < d; ++cc)
                                        dot += rc.pre_w[r * d + cc] *
                                               tr[n][(static_cast<size_t>(c) * cdc->height +
                                                      uu * d + r) *
                                                         cdc->width +
                                                     vv * d + cc];
                                tcval[n][gi] = dot;
                                double val = codec::dequantize_level(
                                    codec::quantize_level(dot, rc.q, rc.range), rc.q, rc.range);
                                tval[n][gi] = val;
                                for (int r = 0; r < d; ++r)
                                    for (int cc = 0; cc < d; ++cc)
                                        stilde.at(c, uu * d + r, vv * d + cc) +=
                                            rc.post_w[r * d + cc] * val;
                            }
                    double w = std::pow(gamma, n_hops - 1 - n) * norm;
                    double ss = 0.0;
                    for (size_t e = 0; e < stilde.data.size(); ++e) {
                        double df = stilde.data[e] - tx[n].data[e];
                        ss += df * df;
                    }
                    loss += w * ss;
                    tx[n + 1] = std::move(stilde);
                }
                if (!g_pre) continue;
                ImageTensor carry = ImageTensor::zeros(cdc->height, cdc->width);
                for (int n = n_hops - 1; n >= 0; --n) {
                    double w = std::pow(gamma, n_hops - 1 - n) * norm;
                    const ImageTensor&x = tx[n], &st = tx[n + 1];
                    ImageTensor g = ImageTensor::zeros(x.height, x.width);
                    for (size_t e = 0; e < g.data.size(); ++e)
                        g.data[e] = 2.0 * w * (st.data[e] - x.data[e]) + carry.data[e];
                    // residual-path gradients; straight-through inside the
                    // quantizer's unsaturated range
                    ImageTensor gr = ImageTensor::zeros(x.height, x.width);
                    for (int c = 0; c < 3; ++c)
                        for (int uu = 0; uu < gu; ++uu)
                            for (int vv = 0; vv < gv; ++vv) {
                                size_t gi = (static_cast<size_t>(c) * gu + uu) * gv + vv;
                                double gv_acc = 0.0;
                                for (int r = 0; r < d; ++r)
                                    for (int cc = 0; cc < d; ++cc) {
                                        double ge = g.at(c, uu * d + r, vv * d + cc);
                                        gv_acc += ge * rc.post_w[r * d + cc];
                                        (*g_post)[r * d + cc] += ge * tval[n][gi];
                                    }
                                double gc =
                                    std::fabs(tcval[n][gi]) <= rc.range ? gv_acc : 0.0;
                                for (int r = 0; r < d; ++r)
                                    for (int cc = 0; cc < d; ++cc) {
                                        size_t pe = (static_cast<size_t>(c) * cdc->height +
                                                     uu * d + r) *
                                                        cdc->width +
                                                    vv * d + cc;
                                        (*g_pre)[r * d + cc] += gc * tr[n][pe];
                                        gr.data[pe] = gc * rc.pre_w[r * d + cc];
                                    }
                            }
                    ImageTensor gshat = ImageTensor::zeros(x.height, x.width);
                    for (size_t e = 0; e < g.data.size(); ++e)
                        gshat.data[e] = g.data[e] - gr.data[e];
                    ImageTensor through = adjoint_link(*cdc, lk[n], gshat);
                    for (size_t e = 0; e < carry.data.size(); ++e)
                        carry.data[e] = through.data[e] + gr.data[e] -
                                        2.0 * w * (st.data[e] - x.data[e]);
                }
            }
        }
        return loss;
    }
};

void check_stage2_inputs(const CodecDescriptor& cdc, const ResidualCompressorDescriptor& rc,
                         const std::vector<ImageTensor>& images, const char* who) {
    check_dataset(images, cdc.height, cdc.width, who);
    if (rc.height != cdc.height || rc.width != cdc.width)
        throw std::invalid_argument(std::string(who) + ": compressor shape mismatch");
    if (cdc.height % cdc.block != 0 || cdc.width % cdc.block != 0 ||
        cdc.height % rc.block != 0 || cdc.width % rc.block != 0)
        throw std::invalid_argument(std::string(who) +
                                    ": image dims must be multiples of both block sizes");
}

// ---- stage 3 ----------------------------------------------------------

struct Stage3Problem {
    const std::vector<ImageTensor>* conditions = nullptr;
    const std::vector<SymbolGrid>* grids = nullptr;
    std::vector<std::vector<double>> feats;  // block_features per pair
    double norm = 0.0;                       // 1 / (pairs * sites)

    void build(const std::vector<ImageTensor>& conds, const std::vector<SymbolGrid>& gs,
               int block) {
        if (conds.empty() || conds.size() != gs.size())
            throw std::invalid_argument("train_stage3: empty or mismatched dataset");
        conditions = &conds;
        grids = &gs;
        feats.resize(conds.size());
        for (size_t i = 0; i < conds.size(); ++i) feats[i] = entropy::block_features(conds[i], block);
        norm = 1.0 / (static_cast<double>(conds.size()) * gs[0].size());
    }

    double eval(const ResidualEstimator& est, ResidualEstimator* grad) const {
        constexpr int F = ResidualEstimator::kFeatures;
        if (grad) {
            grad->w_pi.assign(est.w_pi.size(), 0.0);
            grad->w_mu.assign(est.w_mu.size(), 0.0);
            grad->w_sigma.assign(est.w_sigma.size(), 0.0);
            grad->w_lambda.assign(est.w_lambda.size(), 0.0);
        }
        double loss = 0.0;
        for (size_t p = 0; p < conditions->size(); ++p) {
            const SymbolGrid& grid = (*grids)[p];
            auto pre = entropy::estimator_forward_preact(est, (*conditions)[p]);
            if (!grad) {
                loss += entropy::joint_nll(entropy::activate(pre), grid) * norm;
                continue;
            }
            loss += entropy::joint_nll(entropy::activate(pre), grid) * norm;
            auto g = entropy::nll_gradients(pre, grid);
            const std::vector<double>& fv = feats[p];
            int U = grid.u, V = grid.v, K = est.k;
            for (int c = 0; c < 3; ++c)
                for (int uu = 0; uu < U; ++uu)
                    for (int vv = 0; vv < V; ++vv) {
                        const double* f = fv.data() + ((static_cast<size_t>(c) * U + uu) * V + vv) * F;
                        for (int kk = 0; kk < K; ++kk) {
                            size_t pi_i = ((static_cast<size_t>(c) * U + uu) * V + vv) * K + kk;
                            size_t row = (static_cast<size_t>(c) * K + kk) * (F + 1);
                            double gp = g.pi[pi_i] * norm, gm = g.mu[pi_i] * norm,
                                   gs = g.sigma[pi_i] * norm;
                            for (int ff = 0; ff < F; ++ff) {
                                grad->w_pi[row + ff] += gp * f[ff];
                                grad->w_mu[row + ff] += gm * f[ff];
                                grad->w_sigma[row + ff] += gs * f[ff];
                            }
                            grad->w_pi[row + F] += gp;
                            grad->w_mu[row + F] += gm;
                            grad->w_sigma[row + F] += gs;
                        }
                    }
            // lambda rows are driven by the channel-averaged features
            for (int uu = 0; uu < U; ++uu)
                for (int vv = 0; vv < V; ++vv) {
                    double favg[F + 1];
                    for (int ff = 0; ff < F; ++ff) {
                        double s = 0.0;
                        for (int c = 0; c < 3; ++c)
                            s += fv[((static_cast<size_t>(c) * U + uu) * V + vv) * F + ff];
                        favg[ff] = s / 3.0;
                    }
                    favg[F] = 1.0;
                    for (int j = 0; j < 3; ++j)
                        for (int kk = 0; kk < est.k; ++kk) {
                            size_t gi = ((static_cast<size_t>(j) * U + uu) * V + vv) * est.k + kk;
                            size_t row = (static_cast<size_t>(j) * est.k + kk) * (F + 1);
                            double gl = g.lambda[gi] * norm;
                            for (int ff = 0; ff <= F; ++ff) grad->w_lambda[row + ff] += gl * favg[ff];
                        }
                }
        }
        return loss;
    }
};

// ---- shared descent loop ----------------------------------------------

// Full-batch descent with backtracking: a step that would raise the loss (or
// make it non-finite) halves the rate and retries; the shrunken rate sticks.
template <typename Weights, typename LossFn, typename GradFn, typename StepFn>
Weights descend(const char* who, Weights w, const TrainConfig& cfg, LossFn&& loss_of,
                GradFn&& grad_at, StepFn&& stepped, std::vector<double>* curve) {
    double cur = loss_of(w);
    if (!std::isfinite(cur)) throw std::runtime_error(std::string(who) + ": non-finite initial loss");
    double initial = cur;
    if (curve) curve->push_back(cur);
    if (cfg.lr == 0.0 || cfg.steps == 0) {
        if (curve) curve->insert(curve->end(), static_cast<size_t>(cfg.steps), cur);
        return w;
    }
    for (int step = 0; step < cfg.steps; ++step) {
        auto grads = grad_at(w);
        double lr = cfg.lr;  // fresh line search every step
        for (int halvings = 0;; ++halvings) {
            if (halvings > 120 || lr < 1e-300) break;  // flat: keep current weights
            Weights cand = stepped(w, grads, lr);
            double cl = loss_of(cand);
            if (std::isfinite(cl) && cl <= cur) {
                w = std::move(cand);
                cur = cl;
                break;
            }
            lr *= 0.5;
        }
        if (curve) curve->push_back(cur);
        if (cur > 10.0 * initial)
            throw std::runtime_error(std::string(who) + ": diverged at step " +
                                     std::to_string(step + 1) + " (loss " + std::to_string(cur) +
                                     " > 10x initial " + std::to_string(initial) + ")");
    }
    return w;
}

}  // namespace

double weighted_hop_loss(const std::vector<double>& per_hop_mse, double gamma) {
    if (per_hop_mse.empty()) throw std::invalid_argument("weighted_hop_loss: no hops");
    if (!(gamma > 0.0)) throw std::invalid_argument("weighted_hop_loss: gamma must be > 0");
    size_t n = per_hop_mse.size();
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += std::pow(gamma, static_cast<double>(n - 1 - i)) * per_hop_mse[i];
    return acc / static_cast<double>(n);
}

double recursive_loss(const std::vector<ImageTensor>& images, const CodecDescriptor& cdc,
                      const ChannelTrainConfig& ch, int hops, double gamma) {
    if (hops < 1) throw std::invalid_argument("recursive_loss: hops must be >= 1");
    check_dataset(images, cdc.height, cdc.width, "recursive_loss");
    size_t nsym = static_cast<size_t>(cdc.l) / 2;
    double total = 0.0;
    std::vector<double> hop_mse(static_cast<size_t>(hops));
    for (size_t i = 0; i < images.size(); ++i) {
        ImageTensor cur = images[i];
        for (int n = 0; n < hops; ++n) {
            uint64_t seed = link_seed(ch, i, 0, n);
            auto cr = ch.awgn
                          ? channel::ChannelRealization::awgn(nsym, ch.snr_db, seed, ch.noiseless)
                          : channel::ChannelRealization::rayleigh(nsym, ch.snr_db, seed,
                                                                  ch.noiseless);
            ImageTensor out = pipeline::semantic_hop(cur, cdc, cr);
            hop_mse[static_cast<size_t>(n)] = metrics::mse(cur, out);
            cur = std::move(out);
        }
        total += weighted_hop_loss(hop_mse, gamma);
    }
    return total / static_cast<double>(images.size());
}

double stage1_objective(const CodecDescriptor& cdc, const std::vector<ImageTensor>& images,
                        const TrainConfig& cfg, const ChannelTrainConfig& ch) {
    check_stage1_inputs(cdc, images, "stage1_objective");
    check_cfg(cfg, ch, "stage1_objective");
    Stage1Problem prob;
    prob.build(images, cdc, cfg, ch);
    return prob.eval(cdc, nullptr, nullptr);
}

codec::CodecDescriptor train_stage1(const CodecDescriptor& init,
                                    const std::vector<ImageTensor>& images, const TrainConfig& cfg,
                                    const ChannelTrainConfig& ch, std::vector<double>* loss_curve) {
    check_stage1_inputs(init, images, "train_stage1");
    check_cfg(cfg, ch, "train_stage1");
    Stage1Problem prob;
    prob.build(images, init, cfg, ch);
    struct Grads {
        std::vector<double> enc, dec;
    };
    return descend(
        "train_stage1", init, cfg, [&](const CodecDescriptor& c) { return prob.eval(c, nullptr, nullptr); },
        [&](const CodecDescriptor& c) {
            Grads g;
            prob.eval(c, &g.enc, &g.dec);
            return g;
        },
        [](const CodecDescriptor& c, const Grads& g, double lr) {
            CodecDescriptor n = c;
            for (size_t e = 0; e < n.w_enc.size(); ++e) n.w_enc[e] -= lr * g.enc[e];
            for (size_t e = 0; e < n.w_dec.size(); ++e) n.w_dec[e] -= lr * g.dec[e];
            return n;
        },
        loss_curve);
}

double stage2_objective(const CodecDescriptor& frozen, const ResidualCompressorDescriptor& rc,
                        const std::vector<ImageTensor>& images, const TrainConfig& cfg,
                        const ChannelTrainConfig& ch) {
    check_stage2_inputs(frozen, rc, images, "stage2_objective");
    check_cfg(cfg, ch, "stage2_objective");
    Stage2Problem prob;
    prob.build(frozen, images, cfg, ch);
    return prob.eval(rc, nullptr, nullptr);
}

codec::ResidualCompressorDescriptor train_stage2(const CodecDescriptor& frozen,
                                                 const ResidualCompressorDescriptor& init,
                                                 const std::vector<ImageTensor>& images,
                                                 const TrainConfig& cfg,
                                                 const ChannelTrainConfig& ch,
                                                 std::vector<double>* loss_curve) {
    check_stage2_inputs(frozen, init, images, "train_stage2");
    check_cfg(cfg, ch, "train_stage2");
    Stage2Problem prob;
    prob.build(frozen, images, cfg, ch);
    struct Grads {
        std::vector<double> pre, post;
    };
    return descend(
        "train_stage2", init, cfg,
        [&](const ResidualCompressorDescriptor& r) { return prob.eval(r, nullptr, nullptr); },
        [&](const ResidualCompressorDescriptor& r) {
            Grads g;
            prob.eval(r, &g.pre, &g.post);
            return g;
        },
        [](const ResidualCompressorDescriptor& r, const Grads& g, double lr) {
            ResidualCompressorDescriptor n = r;
            for (size_t e = 0; e < n.pre_w.size(); ++e) n.pre_w[e] -= lr * g.pre[e];
            for (size_t e = 0; e < n.post_w.size(); ++e) n.post_w[e] -= lr * g.post[e];
            return n;
        },
        loss_curve);
}

void stage3_dataset(const CodecDescriptor& frozen, const ResidualCompressorDescriptor& frozen_rc,
                    const std::vector<ImageTensor>& images, const ChannelTrainConfig& ch,
                    std::vector<ImageTensor>* conditions, std::vector<SymbolGrid>* grids) {
    check_dataset(images, frozen.height, frozen.width, "stage3_dataset");
    if (frozen_rc.height != frozen.height || frozen_rc.width != frozen.width)
        throw std::invalid_argument("stage3_dataset: compressor shape mismatch");
    conditions->clear();
    grids->clear();
    size_t nsym = static_cast<size_t>(frozen.l) / 2;
    for (size_t i = 0; i < images.size(); ++i) {
        for (int rep = 0; rep < ch.realizations; ++rep) {
            uint64_t seed = link_seed(ch, i, rep, 0);
            auto cr = ch.awgn
                          ? channel::ChannelRealization::awgn(nsym, ch.snr_db, seed, ch.noiseless)
                          : channel::ChannelRealization::rayleigh(nsym, ch.snr_db, seed,
                                                                  ch.noiseless);
            ImageTensor recon = pipeline::semantic_hop(images[i], frozen, cr);
            auto grid = codec::residual_compress(frozen_rc, image::residual(images[i], recon));
            conditions->push_back(std::move(recon));
            grids->push_back(std::move(grid));
        }
    }
}

double stage3_objective(const ResidualEstimator& est, const std::vector<ImageTensor>& conditions,
                        const std::vector<SymbolGrid>& grids) {
    Stage3Problem prob;
    prob.build(conditions, grids, est.block);
    return prob.eval(est, nullptr);
}

entropy::ResidualEstimator train_stage3(const CodecDescriptor& frozen,
                                        const ResidualCompressorDescriptor& frozen_rc,
                                        const ResidualEstimator& init,
                                        const std::vector<ImageTensor>& images,
                                        const TrainConfig& cfg, const ChannelTrainConfig& ch,
                                        std::vector<double>* loss_curve) {
    check_cfg(cfg, ch, "train_stage3");
    if (init.block != frozen_rc.block || init.q != frozen_rc.q)
        throw std::invalid_argument("train_stage3: estimator grid/alphabet mismatch");
    std::vector<ImageTensor> conditions;
    std::vector<SymbolGrid> grids;
    stage3_dataset(frozen, frozen_rc, images, ch, &conditions, &grids);
    Stage3Problem prob;
    prob.build(conditions, grids, init.block);
    return descend(
        "train_stage3", init, cfg, [&](const ResidualEstimator& e) { return prob.eval(e, nullptr); },
        [&](const ResidualEstimator& e) {
            ResidualEstimator g = e;
            prob.eval(e, &g);
            return g;
        },
        [](const ResidualEstimator& e, const ResidualEstimator& g, double lr) {
            ResidualEstimator n = e;
            for (size_t i = 0; i < n.w_pi.size(); ++i) n.w_pi[i] -= lr * g.w_pi[i];
            for (size_t i = 0; i < n.w_mu.size(); ++i) n.w_mu[i] -= lr * g.w_mu[i];
            for (size_t i = 0; i < n.w_sigma.size(); ++i) n.w_sigma[i] -= lr * g.w_sigma[i];
            for (size_t i = 0; i < n.w_lambda.size(); ++i) n.w_lambda[i] -= lr * g.w_lambda[i];
            return n;
        },
        loss_curve);
}

}  // namespace mhpsc::train
