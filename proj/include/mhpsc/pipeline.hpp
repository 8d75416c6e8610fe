#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mhpsc/channel.hpp"
#include "mhpsc/codec.hpp"
#include "mhpsc/entropy_model.hpp"
#include "mhpsc/image.hpp"
#include "mhpsc/ldpc.hpp"
#include "mhpsc/qam.hpp"

namespace mhpsc::pipeline {

// Per-hop link settings. The semantic and residual links draw independent
// channel realizations from their own seeds.
struct HopConfig {
    double snr_db = 10.0;
    bool noiseless = false;
    bool awgn = false;  // unit gains instead of Rayleigh fading
    uint64_t semantic_seed = 0;

    bool residual_enabled = false;
    double residual_snr_db = 10.0;
    bool residual_noiseless = false;
    bool residual_awgn = false;
    uint64_t residual_seed = 0;

    // Fault injection: flip this many evenly spaced coded bits on the
    // residual link before modulation (0 = off).
    int corrupt_coded_bits = 0;
};

// Everything the residual-compensation link needs, loaded once.
struct ResidualStack {
    codec::ResidualCompressorDescriptor compressor;
    entropy::ResidualEstimator estimator;
    modem::LdpcCode ldpc;
    modem::QamConstellation qam;
};

struct HopReport {
    int hop = 0;
    double psnr_recon_db = 0.0;
    double psnr_comp_db = 0.0;
    double msssim_recon = 0.0;
    double msssim_comp = 0.0;
    int64_t semantic_reals = 0;
    int64_t residual_channel_symbols = 0;  // complex symbols on the residual link
    int64_t residual_payload_bits = 0;     // frame bits before channel coding
    double cbr_hop = 0.0;
    double cbr_cumulative = 0.0;
    std::string frame_status = "disabled";  // delivered | crc_failed | disabled
};

// Semantic hop with an explicit channel realization:
// encode -> pack -> power-normalize -> fade -> MMSE -> unscale -> unpack -> decode.
image::ImageTensor semantic_hop(const image::ImageTensor& img, const codec::CodecDescriptor& cdc,
                                const channel::ChannelRealization& ch);

channel::ChannelRealization make_semantic_channel(const codec::CodecDescriptor& cdc,
                                                  const HopConfig& cfg);

// Main link only.
image::ImageTensor run_hop_common(const image::ImageTensor& img, const codec::CodecDescriptor& cdc,
                                  const HopConfig& cfg);

struct CompensatedHop {
    image::ImageTensor recon;        // semantic output s_hat
    image::ImageTensor compensated;  // s_tilde (== recon when not delivered)
    std::string frame_status;
    int64_t residual_payload_bits = 0;
    int64_t residual_channel_symbols = 0;
};

// Main link plus the parallel digital residual link: the transmitter emulates
// the receiver's reconstruction via the shared-seed channel replay, compresses
// the residual, entropy-codes it with estimator-driven tables, and ships it
// through frame/CRC -> LDPC -> QAM -> fading -> BP. CRC failure degrades to
// the uncompensated output.
CompensatedHop run_hop_compensated(const image::ImageTensor& img,
                                   const codec::CodecDescriptor& cdc, const ResidualStack& rs,
                                   const HopConfig& cfg);

// CBR per the (L + L_r) / (3 H W) convention; L_r counts channel symbols
// (x2 real-equivalent) by default, or modulated payload-only symbols when
// payload_only is set.
double cbr(int64_t semantic_reals, int64_t residual_channel_symbols,
           int64_t residual_payload_bits, int qam_bits_per_symbol, int height, int width,
           bool payload_only);

struct RunConfig {
    int hops = 20;
    std::vector<int> schedule;  // 1-based hop indices with the residual link on
    double snr_db = 10.0;
    double residual_snr_db = 10.0;
    bool noiseless = false;
    bool awgn = false;
    bool residual_noiseless = false;
    bool residual_awgn = false;
    uint64_t trial_seed = 1;
    bool payload_only_cbr = false;
    int corrupt_coded_bits = 0;

    codec::CodecDescriptor codec;
    bool has_residual = false;  // residual stack loaded
    ResidualStack residual;
};

struct RunResult {
    image::ImageTensor final_image;
    std::vector<HopReport> reports;
};

// Chains hops; hop n's input is hop n-1's final output. Per-hop seeds are
// derived from the trial seed, independent of the schedule, so unscheduled
// prefixes match a compensation-free run bit for bit.
RunResult run_multihop(const image::ImageTensor& s, const RunConfig& cfg);

enum class SweepKind { snr, cbr, hops };

struct SweepConfig {
    SweepKind kind = SweepKind::snr;
    std::vector<double> grid;
    int trials = 1;
    uint64_t base_seed = 1;
    std::string experiment_id = "exp";
    int jobs = 1;
    RunConfig tmpl;
};

// One row per (grid value, trial, hop); deterministic order and formatting.
std::string sweep_csv(const SweepConfig& cfg, const std::vector<image::ImageTensor>& images);

// The schema comment + header emitted at the top of every CSV.
std::string csv_header();

// Appends one formatted row per report; sweep_csv and the CLI's single-run
// path share this so identical results are byte-identical on disk.
void append_csv_rows(std::string& out, const std::string& experiment_id, double grid_value,
                     uint64_t trial_seed, const std::vector<HopReport>& reports);

}  // namespace mhpsc::pipeline
