#include "mhpsc/setup.hpp"

#include <algorithm>
#include <filesystem>
#include <stdexcept>

#include "mhpsc/corpus.hpp"

namespace mhpsc::setup {
namespace {

using config::Config;
using config::ConfigError;

void require_file(const std::string& path, const char* what) {
    if (!std::filesystem::exists(path))
        throw ConfigError(std::string("config error: missing ") + what + " file: " + path);
}

std::vector<int> resolve_schedule(const Config& cfg, int hops) {
    if (cfg.schedule_mode == "none") return {};
    if (cfg.schedule_mode == "all") {
        std::vector<int> s(static_cast<size_t>(hops));
        for (int i = 0; i < hops; ++i) s[static_cast<size_t>(i)] = i + 1;
        return s;
    }
    return cfg.schedule;
}

}  // namespace

codec::CodecDescriptor build_codec(const Config& cfg) {
    try {
        if (cfg.codec_kind == "block_dct")
            return codec::make_block_dct(cfg.image_height, cfg.image_width, cfg.codec_l,
                                         cfg.codec_block);
        if (!cfg.codec_weights.empty()) {
            require_file(cfg.codec_weights, "codec weights");
            return codec::load_codec(cfg.codec_weights);
        }
        return codec::make_trainable_linear(cfg.image_height, cfg.image_width, cfg.codec_l,
                                            cfg.codec_block, cfg.codec_seed);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config error: codec: ") + e.what());
    }
}

pipeline::ResidualStack build_residual_stack(const Config& cfg) {
    pipeline::ResidualStack rs;
    require_file(cfg.ldpc_path, "LDPC alist");
    try {
        rs.ldpc = modem::ldpc_load_alist(cfg.ldpc_path);
        rs.qam = modem::QamConstellation::make(cfg.qam_order);
        if (!cfg.comp_weights.empty()) {
            require_file(cfg.comp_weights, "compressor weights");
            rs.compressor =
                codec::load_compressor(cfg.comp_weights, cfg.image_height, cfg.image_width);
            if (rs.compressor.block != cfg.comp_block || rs.compressor.q != cfg.comp_q)
                throw ConfigError(
                    "config error: residual.compressor weights disagree with configured "
                    "block/q: " +
                    cfg.comp_weights);
        } else {
            rs.compressor = codec::make_residual_compressor(cfg.image_height, cfg.image_width,
                                                            cfg.comp_block, cfg.comp_q,
                                                            cfg.comp_range);
        }
        if (!cfg.est_weights.empty()) {
            require_file(cfg.est_weights, "estimator weights");
            rs.estimator = entropy::load_estimator(cfg.est_weights, cfg.comp_block);
            if (rs.estimator.q != cfg.comp_q)
                throw ConfigError(
                    "config error: residual.estimator weights disagree with compressor "
                    "alphabet: " +
                    cfg.est_weights);
        } else {
            rs.estimator = entropy::ResidualEstimator::init(cfg.comp_block, cfg.comp_q, cfg.est_k);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config error: residual stack: ") + e.what());
    }
    return rs;
}

pipeline::RunConfig build_run_config(const Config& cfg) {
    pipeline::RunConfig rc;
    rc.hops = cfg.hops;
    rc.snr_db = cfg.snr_db;
    rc.residual_snr_db = cfg.residual_has_snr ? cfg.residual_snr_db : cfg.snr_db;
    rc.noiseless = cfg.noiseless;
    rc.awgn = cfg.awgn;
    rc.residual_noiseless = cfg.residual_noiseless;
    rc.residual_awgn = cfg.residual_awgn;
    rc.trial_seed = cfg.seed;
    rc.payload_only_cbr = cfg.payload_only_cbr;
    rc.codec = build_codec(cfg);
    int schedule_hops = cfg.hops;
    if (cfg.exp_kind == "hops" && !cfg.grid.empty())
        schedule_hops = static_cast<int>(*std::max_element(cfg.grid.begin(), cfg.grid.end()));
    rc.schedule = resolve_schedule(cfg, std::max(cfg.hops, schedule_hops));
    if (cfg.residual_enabled && !rc.schedule.empty()) {
        rc.has_residual = true;
        rc.residual = build_residual_stack(cfg);
    } else {
        rc.schedule.clear();
    }
    return rc;
}

pipeline::SweepConfig build_sweep_config(const Config& cfg) {
    pipeline::SweepConfig sc;
    if (cfg.exp_kind == "snr")
        sc.kind = pipeline::SweepKind::snr;
    else if (cfg.exp_kind == "cbr")
        sc.kind = pipeline::SweepKind::cbr;
    else if (cfg.exp_kind == "hops")
        sc.kind = pipeline::SweepKind::hops;
    else
        throw ConfigError("config error: experiment.kind 'single' is not a sweep");
    sc.grid = cfg.grid;
    sc.trials = cfg.trials;
    sc.base_seed = cfg.seed;
    sc.experiment_id = cfg.exp_id;
    sc.jobs = cfg.jobs;
    sc.tmpl = build_run_config(cfg);
    return sc;
}

std::vector<image::ImageTensor> load_input_images(const Config& cfg) {
    std::vector<image::ImageTensor> imgs;
    if (cfg.input.empty()) {
        imgs = corpus::synth_corpus(cfg.corpus_seed, cfg.corpus_count, cfg.image_height,
                                    cfg.image_width);
    } else {
        try {
            imgs = corpus::load_dataset(cfg.input);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config error: input: ") + e.what());
        }
    }
    for (const auto& im : imgs)
        if (im.height != cfg.image_height || im.width != cfg.image_width)
            throw ConfigError("config error: input image geometry does not match image.height/width");
    return imgs;
}

}  // namespace mhpsc::setup
