#include "mhpsc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <thread>

#include "mhpsc/accoder.hpp"
#include "mhpsc/framing.hpp"
#include "mhpsc/metrics.hpp"
#include "mhpsc/rng.hpp"

namespace mhpsc::pipeline {

namespace {

// Zero-power codes (degenerate but legal inputs) transmit as silence.
std::pair<channel::SymbolVector, double> normalize_or_silence(const channel::SymbolVector& x) {
    double p = 0.0;
    for (const auto& s : x) p += std::norm(s);
    if (p == 0.0) return {x, 1.0};
    return channel::power_normalize(x);
}

channel::ChannelRealization make_channel(size_t n, double snr_db, uint64_t seed, bool noiseless,
                                         bool awgn) {
    return awgn ? channel::ChannelRealization::awgn(n, snr_db, seed, noiseless)
                : channel::ChannelRealization::rayleigh(n, snr_db, seed, noiseless);
}

}  // namespace

channel::ChannelRealization make_semantic_channel(const codec::CodecDescriptor& cdc,
                                                  const HopConfig& cfg) {
    return make_channel(static_cast<size_t>(cdc.l) / 2, cfg.snr_db, cfg.semantic_seed,
                        cfg.noiseless, cfg.awgn);
}

image::ImageTensor semantic_hop(const image::ImageTensor& img, const codec::CodecDescriptor& cdc,
                                const channel::ChannelRealization& ch) {
    const std::vector<double> code = codec::codec_encode(cdc, img);
    const channel::SymbolVector packed = channel::pack_complex(code);
    auto [norm, scale] = normalize_or_silence(packed);
    const channel::SymbolVector z = channel::rayleigh_transmit(norm, ch);
    channel::SymbolVector eq = channel::mmse_equalize(z, ch);
    for (auto& s : eq) s *= scale;
    return codec::codec_decode(cdc, channel::unpack_complex(eq));
}

image::ImageTensor run_hop_common(const image::ImageTensor& img, const codec::CodecDescriptor& cdc,
                                  const HopConfig& cfg) {
    return semantic_hop(img, cdc, make_semantic_channel(cdc, cfg));
}

namespace {

// Coder-table source over the plane-major (c, u, v) traversal; symbols seen
// so far condition the later channels exactly as on the encoder side.
accoder::PmfProvider make_provider(const entropy::MixtureParams& params, int q, int u, int v) {
    auto working = std::make_shared<entropy::SymbolGrid>(entropy::SymbolGrid::zeros(q, u, v));
    auto filled = std::make_shared<size_t>(0);
    const entropy::MixtureParams* pp = &params;
    return [pp, working, filled, u, v](size_t t, const std::vector<uint32_t>& prefix) {
        for (size_t i = *filled; i < prefix.size(); ++i)
            working->sym[i] = static_cast<int32_t>(prefix[i]);
        *filled = prefix.size();
        const int plane = u * v;
        const int c = static_cast<int>(t) / plane;
        const int uu = (static_cast<int>(t) % plane) / v;
        const int vv = static_cast<int>(t) % v;
        return accoder::quantize_pmf(entropy::site_pmf(*pp, *working, c, uu, vv));
    };
}

}  // namespace

CompensatedHop run_hop_compensated(const image::ImageTensor& img,
                                   const codec::CodecDescriptor& cdc, const ResidualStack& rs,
                                   const HopConfig& cfg) {
    CompensatedHop out;
    const channel::ChannelRealization ch = make_semantic_channel(cdc, cfg);
    out.recon = semantic_hop(img, cdc, ch);

    // Transmitter side: predict the receiver's reconstruction by replaying the
    // channel, then compress the true residual against that prediction.
    const image::ImageTensor sh = semantic_hop(img, cdc, channel::emulated_channel(ch));
    const image::ResidualTensor r = image::residual(img, sh);
    const entropy::SymbolGrid grid = codec::residual_compress(rs.compressor, r);
    const entropy::MixtureParams tx_params = entropy::estimator_forward(rs.estimator, sh);

    std::vector<uint32_t> syms(grid.sym.begin(), grid.sym.end());
    const accoder::Bitstream stream =
        accoder::ac_encode(syms, make_provider(tx_params, grid.q, grid.u, grid.v));

    const std::vector<uint8_t> frame = modem::frame_build(stream.bytes, stream.bit_length);
    std::vector<uint8_t> frame_bits = modem::bytes_to_bits(frame);
    out.residual_payload_bits = static_cast<int64_t>(frame_bits.size());

    // Channel coding: fill whole LDPC blocks, zero-padding the tail.
    const int k = rs.ldpc.k(), n = rs.ldpc.n;
    const size_t blocks = (frame_bits.size() + k - 1) / k;
    frame_bits.resize(blocks * k, 0);
    std::vector<uint8_t> coded;
    coded.reserve(blocks * n);
    for (size_t b = 0; b < blocks; ++b) {
        const std::vector<uint8_t> info(frame_bits.begin() + b * k, frame_bits.begin() + (b + 1) * k);
        const std::vector<uint8_t> cw = modem::ldpc_encode(rs.ldpc, info);
        coded.insert(coded.end(), cw.begin(), cw.end());
    }
    if (cfg.corrupt_coded_bits > 0) {
        const size_t stride = std::max<size_t>(1, coded.size() / cfg.corrupt_coded_bits);
        for (size_t i = 0, done = 0; i < coded.size() && done < static_cast<size_t>(cfg.corrupt_coded_bits);
             i += stride, ++done)
            coded[i] ^= 1;
    }

    const channel::SymbolVector tx = modem::qam_modulate(coded, rs.qam);
    out.residual_channel_symbols = static_cast<int64_t>(tx.size());
    const channel::ChannelRealization rch = make_channel(tx.size(), cfg.residual_snr_db,
                                                         cfg.residual_seed, cfg.residual_noiseless,
                                                         cfg.residual_awgn);
    const channel::SymbolVector z = channel::rayleigh_transmit(tx, rch);
    const channel::SymbolVector eq = channel::mmse_equalize(z, rch);
    channel::SymbolVector obs;
    std::vector<double> nv;
    channel::mmse_effective(rch, eq, obs, nv);
    const std::vector<double> llr = modem::qam_demodulate_llr(obs, nv, rs.qam);

    // Receiver side: decode blocks, gate on CRC, rebuild tables from its own
    // reconstruction (bit-identical to sh by the shared-seed replay).
    std::vector<uint8_t> info_bits;
    info_bits.reserve(blocks * k);
    for (size_t b = 0; b < blocks; ++b) {
        const std::vector<double> bl(llr.begin() + b * n, llr.begin() + (b + 1) * n);
        const modem::LdpcDecodeResult dec = modem::ldpc_decode(rs.ldpc, bl);
        const std::vector<uint8_t> info = modem::ldpc_extract_info(rs.ldpc, dec.codeword);
        info_bits.insert(info_bits.end(), info.begin(), info.end());
    }
    const auto parsed = modem::frame_parse(modem::bits_to_bytes(info_bits));
    if (!parsed) {
        out.frame_status = "crc_failed";
        out.compensated = out.recon;
        return out;
    }
    try {
        accoder::Bitstream rx_stream;
        rx_stream.bytes = parsed->payload;
        rx_stream.bit_length = parsed->payload_bits;
        const entropy::MixtureParams rx_params = entropy::estimator_forward(rs.estimator, out.recon);
        const std::vector<uint32_t> rx_syms =
            accoder::ac_decode(rx_stream, make_provider(rx_params, grid.q, grid.u, grid.v),
                               static_cast<size_t>(3) * grid.u * grid.v);
        entropy::SymbolGrid rx_grid = entropy::SymbolGrid::zeros(grid.q, grid.u, grid.v);
        for (size_t i = 0; i < rx_syms.size(); ++i) rx_grid.sym[i] = static_cast<int32_t>(rx_syms[i]);
        const image::ResidualTensor r_hat = codec::residual_decompress(rs.compressor, rx_grid);
        out.compensated = image::compensate(out.recon, r_hat);
        out.frame_status = "delivered";
    } catch (const std::exception&) {
        // A stream the CRC admitted but the coder cannot finish decodes to
        // nothing; treat like a lost frame.
        out.frame_status = "crc_failed";
        out.compensated = out.recon;
    }
    return out;
}

double cbr(int64_t semantic_reals, int64_t residual_channel_symbols,
           int64_t residual_payload_bits, int qam_bits_per_symbol, int height, int width,
           bool payload_only) {
    const double lr = payload_only
                          ? 2.0 * std::ceil(static_cast<double>(residual_payload_bits) /
                                            qam_bits_per_symbol)
                          : 2.0 * static_cast<double>(residual_channel_symbols);
    return (static_cast<double>(semantic_reals) + lr) / (3.0 * height * width);
}

RunResult run_multihop(const image::ImageTensor& s, const RunConfig& cfg) {
    if (cfg.hops < 1) throw std::runtime_error("run_multihop: need at least one hop");
    for (int h : cfg.schedule)
        if (h < 1 || h > cfg.hops)
            throw std::runtime_error("run_multihop: schedule entry " + std::to_string(h) +
                                     " outside 1.." + std::to_string(cfg.hops));
    RunResult res;
    image::ImageTensor current = s;
    double cbr_sum = 0.0;
    for (int hop = 1; hop <= cfg.hops; ++hop) {
        HopConfig hc;
        hc.snr_db = cfg.snr_db;
        hc.noiseless = cfg.noiseless;
        hc.awgn = cfg.awgn;
        hc.semantic_seed = rng::derive_stream(cfg.trial_seed, 2 * static_cast<uint64_t>(hop));
        hc.residual_snr_db = cfg.residual_snr_db;
        hc.residual_noiseless = cfg.residual_noiseless;
        hc.residual_awgn = cfg.residual_awgn;
        hc.residual_seed = rng::derive_stream(cfg.trial_seed, 2 * static_cast<uint64_t>(hop) + 1);
        hc.corrupt_coded_bits = cfg.corrupt_coded_bits;

        const bool scheduled =
            cfg.has_residual &&
            std::find(cfg.schedule.begin(), cfg.schedule.end(), hop) != cfg.schedule.end();

        HopReport rep;
        rep.hop = hop;
        rep.semantic_reals = cfg.codec.l;
        image::ImageTensor recon, comp;
        if (scheduled) {
            hc.residual_enabled = true;
            CompensatedHop ch = run_hop_compensated(current, cfg.codec, cfg.residual, hc);
            recon = std::move(ch.recon);
            comp = std::move(ch.compensated);
            rep.frame_status = ch.frame_status;
            rep.residual_payload_bits = ch.residual_payload_bits;
            rep.residual_channel_symbols = ch.residual_channel_symbols;
        } else {
            recon = run_hop_common(current, cfg.codec, hc);
            comp = recon;
            rep.frame_status = "disabled";
        }
        rep.psnr_recon_db = metrics::psnr(s, recon);
        rep.psnr_comp_db = metrics::psnr(s, comp);
        rep.msssim_recon = metrics::ms_ssim(s, recon);
        rep.msssim_comp = metrics::ms_ssim(s, comp);
        const int qb = cfg.has_residual ? cfg.residual.qam.bits_per_symbol : 2;
        rep.cbr_hop = cbr(rep.semantic_reals, rep.residual_channel_symbols,
                          rep.residual_payload_bits, qb, s.height, s.width, cfg.payload_only_cbr);
        cbr_sum += rep.cbr_hop;
        rep.cbr_cumulative = cbr_sum;
        res.reports.push_back(std::move(rep));
        current = std::move(comp);
    }
    res.final_image = std::move(current);
    return res;
}

std::string csv_header() {
    return "# mhpsc csv schema v1\n"
           "experiment_id,grid_value,trial_seed,hop,psnr_recon_db,psnr_comp_db,msssim_recon,"
           "msssim_comp,semantic_reals,residual_channel_symbols,residual_payload_bits,cbr,"
           "frame_status\n";
}

namespace {

RunConfig config_for_point(const SweepConfig& cfg, double g) {
    RunConfig rc = cfg.tmpl;
    switch (cfg.kind) {
        case SweepKind::snr:
            rc.snr_db = g;
            rc.residual_snr_db = g;
            break;
        case SweepKind::hops: {
            rc.hops = static_cast<int>(g);
            std::vector<int> sched;
            for (int h : rc.schedule)
                if (h <= rc.hops) sched.push_back(h);
            rc.schedule = std::move(sched);
            break;
        }
        case SweepKind::cbr: {
            if (rc.codec.kind != codec::CodecKind::block_dct)
                throw std::runtime_error("cbr sweep supports the block_dct codec only");
            int l = static_cast<int>(std::lround(g * 3.0 * rc.codec.height * rc.codec.width));
            l = std::max(2, l - (l % 2));
            rc.codec = codec::make_block_dct(rc.codec.height, rc.codec.width, l, rc.codec.block);
            break;
        }
    }
    return rc;
}

}  // namespace

void append_csv_rows(std::string& out, const std::string& experiment_id, double grid_value,
                     uint64_t trial_seed, const std::vector<HopReport>& reports) {
    char buf[512];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof(buf),
                      "%s,%g,%llu,%d,%.4f,%.4f,%.6f,%.6f,%lld,%lld,%lld,%.8f,%s\n",
                      experiment_id.c_str(), grid_value,
                      static_cast<unsigned long long>(trial_seed), r.hop, r.psnr_recon_db,
                      r.psnr_comp_db, r.msssim_recon, r.msssim_comp,
                      static_cast<long long>(r.semantic_reals),
                      static_cast<long long>(r.residual_channel_symbols),
                      static_cast<long long>(r.residual_payload_bits), r.cbr_cumulative,
                      r.frame_status.c_str());
        out += buf;
    }
}

std::string sweep_csv(const SweepConfig& cfg, const std::vector<image::ImageTensor>& images) {
    if (cfg.grid.empty()) throw std::runtime_error("sweep: empty grid");
    if (cfg.trials < 1) throw std::runtime_error("sweep: need at least one trial");
    if (images.empty()) throw std::runtime_error("sweep: no input images");

    struct Task {
        size_t gi;
        int trial;
        uint64_t seed;
    };
    std::vector<Task> tasks;
    for (size_t gi = 0; gi < cfg.grid.size(); ++gi)
        for (int t = 0; t < cfg.trials; ++t)
            tasks.push_back({gi, t, rng::derive_stream(cfg.base_seed, 1000 + t)});

    std::vector<std::vector<HopReport>> results(tasks.size());
    std::vector<std::string> errors(tasks.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& tk = tasks[i];
            try {
                RunConfig rc = config_for_point(cfg, cfg.grid[tk.gi]);
                rc.trial_seed = tk.seed;
                const image::ImageTensor& img = images[tk.trial % images.size()];
                results[i] = run_multihop(img, rc).reports;
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (!e.empty()) throw std::runtime_error("sweep: " + e);

    std::string out = csv_header();
    for (size_t i = 0; i < tasks.size(); ++i)
        append_csv_rows(out, cfg.experiment_id, cfg.grid[tasks[i].gi], tasks[i].seed, results[i]);
    return out;
}

}  // namespace mhpsc::pipeline
