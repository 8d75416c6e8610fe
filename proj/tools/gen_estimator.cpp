// Trains the shipped residual-entropy estimator weights against the stock
// configuration (block-DCT codec, block-mean residual compressor) on the
// synthetic corpus, so a fresh checkout works without running the training
// pipeline first.
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mhpsc/codec.hpp"
#include "mhpsc/corpus.hpp"
#include "mhpsc/entropy_model.hpp"
#include "mhpsc/training.hpp"

int main(int argc, char** argv) {
    CLI::App app{"train the shipped estimator weights"};
    std::string out = "data/weights/estimator.bin";
    int count = 24, steps = 1500, size = 128;
    double lr = 1.0, snr_db = 10.0;
    uint64_t corpus_seed = 100, channel_seed = 200;
    app.add_option("--out", out, "output weight file")->capture_default_str();
    app.add_option("--count", count, "training images")->capture_default_str();
    app.add_option("--steps", steps, "descent steps")->capture_default_str();
    app.add_option("--lr", lr, "initial step size")->capture_default_str();
    app.add_option("--size", size, "image height and width")->capture_default_str();
    app.add_option("--snr", snr_db, "training SNR in dB")->capture_default_str();
    app.add_option("--corpus-seed", corpus_seed, "corpus seed")->capture_default_str();
    app.add_option("--channel-seed", channel_seed, "channel seed")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    const auto images = mhpsc::corpus::synth_corpus(corpus_seed, count, size, size);
    const auto cdc = mhpsc::codec::make_block_dct(size, size, 6144 * size * size / (128 * 128), 8);
    const auto rc = mhpsc::codec::make_residual_compressor(size, size, 8, 7, 0.8);
    const auto init = mhpsc::entropy::ResidualEstimator::init(8, 7, 5);

    mhpsc::train::TrainConfig tc;
    tc.hops = 1;
    tc.steps = steps;
    tc.lr = lr;
    tc.seed = 1;
    mhpsc::train::ChannelTrainConfig ch;
    ch.snr_db = snr_db;
    ch.seed = channel_seed;
    ch.realizations = 1;

    std::vector<double> curve;
    const auto est = mhpsc::train::train_stage3(cdc, rc, init, images, tc, ch, &curve);
    std::filesystem::create_directories(std::filesystem::path(out).parent_path());
    mhpsc::entropy::save_estimator(est, out);
    std::printf("%s: nll %.4f -> %.4f nats/symbol over %d steps\n", out.c_str(), curve.front(),
                curve.back(), steps);
    return 0;
}
