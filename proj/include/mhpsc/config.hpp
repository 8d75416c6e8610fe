#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mhpsc::config {

// Configuration problems (bad file, unknown key, wrong type, missing
// referenced file) — the CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parsed and validated configuration document. Unknown keys are rejected with
// the offending dotted path; every field below has a documented default, so an
// empty JSON object is a valid config.
struct Config {
    // image geometry every loaded/synthesized image must match
    int image_height = 128;
    int image_width = 128;

    // dataset: path to an image file or a directory of .ppm files; empty
    // means "generate corpus.count synthetic images from corpus.seed"
    std::string input;
    uint64_t corpus_seed = 7;
    int corpus_count = 4;

    std::string output_csv = "out/run.csv";

    // multi-hop run
    int hops = 20;
    double snr_db = 10.0;
    bool noiseless = false;
    bool awgn = false;
    uint64_t seed = 1;
    std::string schedule_mode = "all";  // all | none | list
    std::vector<int> schedule;          // used when schedule_mode == "list"
    bool payload_only_cbr = false;

    // semantic codec
    std::string codec_kind = "block_dct";  // block_dct | trainable_linear
    int codec_l = 6144;
    int codec_block = 8;
    std::string codec_weights;  // trainable_linear: load these instead of random init
    uint64_t codec_seed = 9;

    // residual link
    bool residual_enabled = true;
    bool residual_has_snr = false;  // when false, the link reuses snr_db
    double residual_snr_db = 10.0;
    bool residual_noiseless = false;
    bool residual_awgn = false;
    std::string ldpc_path = "data/ldpc/ldpc_n1024_k512.alist";
    int qam_order = 16;
    int comp_block = 8;
    int comp_q = 7;
    double comp_range = 0.8;
    std::string comp_weights;
    int est_k = 5;
    std::string est_weights = "data/weights/estimator.bin";

    // experiment sweep
    std::string exp_kind = "single";  // single | snr | cbr | hops
    std::vector<double> grid;
    int trials = 1;
    std::string exp_id = "run";
    int jobs = 1;

    // training
    std::string train_dataset;  // empty => synthetic corpus of train_corpus_count
    int train_corpus_count = 32;
    std::string train_out = "out/weights";
    int train_steps = 200;
    double train_lr = 0.05;
    int train_hops = 4;
    double train_gamma = 1.15;
    int train_realizations = 4;
    double train_snr_db = 10.0;
    bool train_noiseless = false;
    bool train_awgn = false;
    uint64_t train_seed = 1;
};

// Loads, applies dotted-path `key=value` overrides, validates keys and types.
Config load_config(const std::string& path, const std::vector<std::string>& overrides);

// Same pipeline on an in-memory JSON document (tests, defaults).
Config parse_config(const std::string& json_text, const std::vector<std::string>& overrides);

// $MHPSC_CONFIG_DIR (default "data/config"); used to resolve bare config
// names that don't exist relative to the working directory.
std::string resolve_config_path(const std::string& arg);

}  // namespace mhpsc::config
