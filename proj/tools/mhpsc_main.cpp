// Command-line frontend: multi-hop runs and sweeps, the three training
// stages, CSV-to-SVG plots, synthetic corpus generation, and the release
// acceptance suite. Exit codes: 0 ok, 1 runtime failure, 2 config error.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mhpsc/acceptance.hpp"
#include "mhpsc/codec.hpp"
#include "mhpsc/config.hpp"
#include "mhpsc/corpus.hpp"
#include "mhpsc/entropy_model.hpp"
#include "mhpsc/pipeline.hpp"
#include "mhpsc/rng.hpp"
#include "mhpsc/setup.hpp"
#include "mhpsc/svgplot.hpp"
#include "mhpsc/training.hpp"
#include "mhpsc/detail/wire.hpp"

namespace {

using mhpsc::config::Config;
using mhpsc::config::ConfigError;

void write_text(const std::string& path, const std::string& text) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    mhpsc::wire::write_file(path, std::vector<uint8_t>(text.begin(), text.end()));
}

// ---- csv reading (plot + run summary) --------------------------------------

struct CsvTable {
    std::vector<std::string> cols;
    std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config error: cannot open csv: " + path);
    CsvTable t;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (t.cols.empty()) {
            t.cols = split_csv_line(line);
        } else {
            auto row = split_csv_line(line);
            if (row.size() != t.cols.size())
                throw ConfigError("config error: csv schema error: ragged row in " + path);
            t.rows.push_back(std::move(row));
        }
    }
    if (t.cols.empty()) throw ConfigError("config error: csv schema error: no header in " + path);
    if (t.rows.empty())
        throw ConfigError("config error: csv schema error: no data rows in " + path);
    return t;
}

size_t col_index(const CsvTable& t, const std::string& name) {
    const auto it = std::find(t.cols.begin(), t.cols.end(), name);
    if (it == t.cols.end())
        throw ConfigError("config error: csv schema error: missing column " + name);
    return static_cast<size_t>(it - t.cols.begin());
}

// Mean of `metric` over each group's final hop, keyed (experiment_id, grid).
std::map<std::string, std::map<double, double>> final_hop_means(const CsvTable& t,
                                                                const std::string& metric) {
    const size_t ce = col_index(t, "experiment_id");
    const size_t cg = col_index(t, "grid_value");
    const size_t ch = col_index(t, "hop");
    const size_t cm = col_index(t, metric);
    struct Acc {
        int max_hop = 0;
        double sum = 0.0;
        int n = 0;
    };
    std::map<std::string, std::map<double, Acc>> acc;
    for (const auto& row : t.rows) {
        const int hop = std::stoi(row[ch]);
        Acc& a = acc[row[ce]][std::stod(row[cg])];
        if (hop > a.max_hop) {
            a.max_hop = hop;
            a.sum = 0.0;
            a.n = 0;
        }
        if (hop == a.max_hop) {
            a.sum += std::stod(row[cm]);
            ++a.n;
        }
    }
    std::map<std::string, std::map<double, double>> out;
    for (const auto& [exp, grids] : acc)
        for (const auto& [g, a] : grids) out[exp][g] = a.sum / a.n;
    return out;
}

// ---- run --------------------------------------------------------------------

int cmd_run(const Config& cfg) {
    const auto images = mhpsc::setup::load_input_images(cfg);
    std::string csv;
    if (cfg.exp_kind == "single") {
        const auto rc = mhpsc::setup::build_run_config(cfg);
        csv = mhpsc::pipeline::csv_header();
        for (int t = 0; t < cfg.trials; ++t) {
            auto trc = rc;
            trc.trial_seed = mhpsc::rng::derive_stream(cfg.seed, 1000 + static_cast<uint64_t>(t));
            const auto& img = images[static_cast<size_t>(t) % images.size()];
            const auto rr = mhpsc::pipeline::run_multihop(img, trc);
            mhpsc::pipeline::append_csv_rows(csv, cfg.exp_id, cfg.snr_db, trc.trial_seed,
                                             rr.reports);
        }
    } else {
        auto sc = mhpsc::setup::build_sweep_config(cfg);
        csv = mhpsc::pipeline::sweep_csv(sc, images);
    }
    write_text(cfg.output_csv, csv);

    std::istringstream is(csv);
    CsvTable t;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (t.cols.empty())
            t.cols = split_csv_line(line);
        else
            t.rows.push_back(split_csv_line(line));
    }
    std::printf("wrote %s (%zu rows, %d trials)\n", cfg.output_csv.c_str(), t.rows.size(),
                cfg.trials);
    const auto psnr = final_hop_means(t, "psnr_comp_db");
    const auto ssim = final_hop_means(t, "msssim_comp");
    const auto cbr = final_hop_means(t, "cbr");
    for (const auto& [exp, grids] : psnr)
        for (const auto& [g, v] : grids)
            std::printf("  %s @ %g: final-hop mean psnr %.2f dB, ms-ssim %.4f, cbr %.4f\n",
                        exp.c_str(), g, v, ssim.at(exp).at(g), cbr.at(exp).at(g));
    return 0;
}

// ---- train --------------------------------------------------------------------

std::vector<mhpsc::image::ImageTensor> train_images(const Config& cfg) {
    if (cfg.train_dataset.empty())
        return mhpsc::corpus::synth_corpus(cfg.corpus_seed, cfg.train_corpus_count,
                                           cfg.image_height, cfg.image_width);
    auto imgs = mhpsc::corpus::load_dataset(cfg.train_dataset);
    for (const auto& im : imgs)
        if (im.height != cfg.image_height || im.width != cfg.image_width)
            throw ConfigError(
                "config error: training image geometry does not match image.height/width");
    return imgs;
}

mhpsc::train::TrainConfig train_config(const Config& cfg) {
    mhpsc::train::TrainConfig tc;
    tc.hops = cfg.train_hops;
    tc.gamma = cfg.train_gamma;
    tc.steps = cfg.train_steps;
    tc.lr = cfg.train_lr;
    tc.seed = cfg.train_seed;
    return tc;
}

mhpsc::train::ChannelTrainConfig channel_config(const Config& cfg) {
    mhpsc::train::ChannelTrainConfig ch;
    ch.snr_db = cfg.train_snr_db;
    ch.noiseless = cfg.train_noiseless;
    ch.awgn = cfg.train_awgn;
    ch.seed = cfg.train_seed;
    ch.realizations = cfg.train_realizations;
    return ch;
}

void write_loss_curve(const std::string& path, const std::vector<double>& curve) {
    std::string csv = "# mhpsc csv schema v1\nstep,loss\n";
    char buf[64];
    for (size_t i = 0; i < curve.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.10g\n", i, curve[i]);
        csv += buf;
    }
    write_text(path, csv);
}

// Stage 2/3 backbone: block_dct configs need no trained file; trainable
// configs require the stage-1 artifact.
mhpsc::codec::CodecDescriptor backbone_codec(const Config& cfg, int stage) {
    if (cfg.codec_kind != "trainable_linear") return mhpsc::setup::build_codec(cfg);
    const std::string path =
        cfg.codec_weights.empty() ? cfg.train_out + "/codec_stage1.bin" : cfg.codec_weights;
    if (!std::filesystem::exists(path))
        throw ConfigError("config error: stage " + std::to_string(stage) +
                          " requires the stage-1 codec weights at " + path +
                          "; run `mhpsc train --stage 1` first");
    auto desc = mhpsc::codec::load_codec(path);
    if (desc.height != cfg.image_height || desc.width != cfg.image_width)
        throw ConfigError("config error: codec weights geometry does not match image.height/width");
    return desc;
}

mhpsc::codec::ResidualCompressorDescriptor stage2_compressor(const Config& cfg) {
    const std::string path =
        cfg.comp_weights.empty() ? cfg.train_out + "/compressor_stage2.bin" : cfg.comp_weights;
    if (!std::filesystem::exists(path))
        throw ConfigError("config error: stage 3 requires the stage-2 compressor weights at " +
                          path + "; run `mhpsc train --stage 2` first");
    return mhpsc::codec::load_compressor(path, cfg.image_height, cfg.image_width);
}

int cmd_train(const Config& cfg, int stage) {
    const auto images = train_images(cfg);
    const auto tc = train_config(cfg);
    const auto ch = channel_config(cfg);
    std::filesystem::create_directories(cfg.train_out);
    std::vector<double> curve;
    std::string weights_path, curve_path;

    if (stage == 1) {
        if (cfg.codec_kind != "trainable_linear")
            throw ConfigError("config error: stage 1 trains the codec; set codec.kind to "
                              "trainable_linear");
        const auto init = mhpsc::codec::make_trainable_linear(
            cfg.image_height, cfg.image_width, cfg.codec_l, cfg.codec_block, cfg.codec_seed);
        const auto trained = mhpsc::train::train_stage1(init, images, tc, ch, &curve);
        weights_path = cfg.train_out + "/codec_stage1.bin";
        mhpsc::codec::save_codec(trained, weights_path);
        curve_path = cfg.train_out + "/stage1_loss.csv";
    } else if (stage == 2) {
        const auto frozen = backbone_codec(cfg, 2);
        const auto init = mhpsc::codec::make_residual_compressor(
            cfg.image_height, cfg.image_width, cfg.comp_block, cfg.comp_q, cfg.comp_range);
        const auto trained = mhpsc::train::train_stage2(frozen, init, images, tc, ch, &curve);
        weights_path = cfg.train_out + "/compressor_stage2.bin";
        mhpsc::codec::save_compressor(trained, weights_path);
        curve_path = cfg.train_out + "/stage2_loss.csv";
    } else {
        const auto frozen = backbone_codec(cfg, 3);
        const auto rc = stage2_compressor(cfg);
        const auto init = mhpsc::entropy::ResidualEstimator::init(rc.block, rc.q, cfg.est_k);
        const auto trained = mhpsc::train::train_stage3(frozen, rc, init, images, tc, ch, &curve);
        weights_path = cfg.train_out + "/estimator_stage3.bin";
        mhpsc::entropy::save_estimator(trained, weights_path);
        curve_path = cfg.train_out + "/stage3_loss.csv";
    }
    write_loss_curve(curve_path, curve);
    std::printf("stage %d: loss %.6g -> %.6g over %zu accepted steps\n", stage, curve.front(),
                curve.back(), curve.size() - 1);
    std::printf("wrote %s and %s\n", weights_path.c_str(), curve_path.c_str());
    return 0;
}

// ---- plot --------------------------------------------------------------------

int cmd_plot(const std::string& csv_path, const std::string& out_path, const std::string& kind,
             const std::string& metric) {
    const CsvTable t = read_csv(csv_path);
    const std::string column = metric == "msssim" ? "msssim_comp" : "psnr_comp_db";
    const std::string y_label = metric == "msssim" ? "MS-SSIM" : "PSNR (dB)";
    const std::string x_label = kind == "snr" ? "SNR (dB)" : (kind == "cbr" ? "CBR" : "hops");
    const auto means = final_hop_means(t, column);
    std::vector<mhpsc::svg::Series> series;
    for (const auto& [exp, grids] : means) {
        mhpsc::svg::Series s;
        s.label = exp;
        for (const auto& [g, v] : grids) {
            s.x.push_back(g);
            s.y.push_back(v);
        }
        series.push_back(std::move(s));
    }
    const std::string svg =
        mhpsc::svg::line_chart(series, "final-hop quality", x_label, y_label);
    const auto parent = std::filesystem::path(out_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    mhpsc::svg::write_svg(out_path, svg);
    std::printf("wrote %s (%zu series)\n", out_path.c_str(), series.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-hop image semantic communication simulator"};
    app.require_subcommand(1);

    std::string config_arg;
    std::vector<std::string> overrides;
    int jobs = 0;
    auto add_config_opts = [&](CLI::App* sub) {
        sub->add_option("--config", config_arg,
                        "config file; bare names resolve against $MHPSC_CONFIG_DIR "
                        "(default data/config), empty means the shipped base.json");
        sub->add_option("--set", overrides,
                        "dotted-path key=value override, e.g. --set snr_db=10 (repeatable)");
    };

    auto* run = app.add_subcommand("run", "execute a run or sweep and write the CSV");
    add_config_opts(run);
    auto* jobs_opt = run->add_option("--jobs", jobs, "parallel sweep workers (overrides config)");

    int stage = 1;
    auto* train = app.add_subcommand("train", "run one training stage, write weights + loss curve");
    add_config_opts(train);
    train->add_option("--stage", stage, "training stage")->required()->check(CLI::Range(1, 3));

    std::string csv_path, plot_out = "out/plot.svg", plot_kind, plot_metric = "psnr";
    auto* plot = app.add_subcommand("plot", "render a results CSV as an SVG line chart");
    plot->add_option("--csv", csv_path, "input results CSV")->required();
    plot->add_option("--out", plot_out, "output SVG path")->capture_default_str();
    plot->add_option("--kind", plot_kind, "x axis of the sweep")
        ->required()
        ->check(CLI::IsMember({"snr", "cbr", "hops"}));
    plot->add_option("--metric", plot_metric, "y axis metric")
        ->capture_default_str()
        ->check(CLI::IsMember({"psnr", "msssim"}));

    std::string corpus_out;
    int corpus_count = 8, corpus_h = 128, corpus_w = 128;
    uint64_t corpus_seed = 7;
    auto* gen = app.add_subcommand("gen-corpus", "write a synthetic PPM image corpus");
    gen->add_option("--out", corpus_out, "output directory")->required();
    gen->add_option("--count", corpus_count, "number of images")->capture_default_str();
    gen->add_option("--seed", corpus_seed, "corpus seed")->capture_default_str();
    gen->add_option("--height", corpus_h, "image height")->capture_default_str();
    gen->add_option("--width", corpus_w, "image width")->capture_default_str();

    std::string verify_data = "data", verify_work = "out/verify";
    auto* verify = app.add_subcommand("verify", "run the release acceptance suite");
    verify->add_option("--data", verify_data, "shipped data directory")->capture_default_str();
    verify->add_option("--work", verify_work, "scratch directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // bad flags are config errors
    }

    try {
        if (run->parsed() || train->parsed()) {
            Config cfg = mhpsc::config::load_config(mhpsc::config::resolve_config_path(config_arg),
                                                    overrides);
            if (run->parsed()) {
                if (jobs_opt->count() > 0) cfg.jobs = jobs;
                return cmd_run(cfg);
            }
            return cmd_train(cfg, stage);
        }
        if (plot->parsed()) return cmd_plot(csv_path, plot_out, plot_kind, plot_metric);
        if (gen->parsed()) {
            const auto paths =
                mhpsc::corpus::write_corpus(corpus_out, corpus_seed, corpus_count, corpus_h,
                                            corpus_w);
            std::printf("wrote %zu images to %s\n", paths.size(), corpus_out.c_str());
            return 0;
        }
        if (verify->parsed()) {
            const auto results = mhpsc::accept::run_all(verify_data, verify_work, std::cout);
            const bool ok = mhpsc::accept::all_passed(results);
            std::cout << (ok ? "all 9 criteria passed\n" : "acceptance suite FAILED\n");
            return ok ? 0 : 1;
        }
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
