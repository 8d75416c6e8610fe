#include <doctest.h>

#include <cmath>
#include <vector>

#include "mhpsc/codec.hpp"
#include "mhpsc/corpus.hpp"
#include "mhpsc/training.hpp"

using namespace mhpsc;

namespace {

std::vector<image::ImageTensor> tiny_images(int count) {
    return corpus::synth_corpus(19, count, 16, 16);
}

train::TrainConfig tiny_train(int steps, double lr) {
    train::TrainConfig tc;
    tc.hops = 2;
    tc.gamma = 1.15;
    tc.steps = steps;
    tc.lr = lr;
    tc.seed = 5;
    return tc;
}

train::ChannelTrainConfig tiny_channel() {
    train::ChannelTrainConfig ch;
    ch.snr_db = 10.0;
    ch.seed = 11;
    ch.realizations = 2;
    return ch;
}

}  // namespace

TEST_CASE("weighted hop loss matches the hand-evaluated recursion weights") {
    // (1.15^2 * 0.001 + 1.15 * 0.002 + 0.003) / 3
    CHECK(train::weighted_hop_loss({0.001, 0.002, 0.003}, 1.15) ==
          doctest::Approx(0.0022075).epsilon(1e-12));
    // gamma = 1 collapses to the plain mean
    CHECK(train::weighted_hop_loss({0.3, 0.5, 0.1}, 1.0) == doctest::Approx(0.3).epsilon(1e-12));
    // later hops are weighted less, so growing gamma grows the loss
    CHECK(train::weighted_hop_loss({0.1, 0.1}, 2.0) > train::weighted_hop_loss({0.1, 0.1}, 1.0));
}

TEST_CASE("recursive loss is deterministic and increases with gamma") {
    auto imgs = tiny_images(2);
    auto cdc = codec::make_trainable_linear(16, 16, 48, 8, 3);
    auto ch = tiny_channel();
    const double a = train::recursive_loss(imgs, cdc, ch, 3, 1.15);
    CHECK(a > 0.0);
    CHECK(a == train::recursive_loss(imgs, cdc, ch, 3, 1.15));
    CHECK(train::recursive_loss(imgs, cdc, ch, 3, 2.0) > a);
}

TEST_CASE("zero step size or zero steps leave stage-1 weights bit-identical") {
    auto imgs = tiny_images(2);
    auto init = codec::make_trainable_linear(16, 16, 48, 8, 3);
    auto ch = tiny_channel();

    std::vector<double> curve;
    auto w0 = train::train_stage1(init, imgs, tiny_train(4, 0.0), ch, &curve);
    CHECK(w0.w_enc == init.w_enc);
    CHECK(w0.w_dec == init.w_dec);
    REQUIRE(curve.size() == 5);  // initial + one entry per step
    for (double v : curve) CHECK(v == curve[0]);

    curve.clear();
    auto w1 = train::train_stage1(init, imgs, tiny_train(0, 0.5), ch, &curve);
    CHECK(w1.w_enc == init.w_enc);
    REQUIRE(curve.size() == 1);
    CHECK(curve[0] == train::stage1_objective(init, imgs, tiny_train(0, 0.5), ch));
}

TEST_CASE("stage-1 descent is monotone, effective, and seed-reproducible") {
    auto imgs = tiny_images(3);
    auto init = codec::make_trainable_linear(16, 16, 48, 8, 3);
    auto ch = tiny_channel();
    auto cfg = tiny_train(25, 0.5);

    std::vector<double> curve;
    auto trained = train::train_stage1(init, imgs, cfg, ch, &curve);
    REQUIRE(curve.size() == 26);
    for (size_t i = 1; i < curve.size(); ++i) CHECK(curve[i] <= curve[i - 1]);
    CHECK(curve.back() < curve.front());
    CHECK(curve.front() == doctest::Approx(train::stage1_objective(init, imgs, cfg, ch)));

    std::vector<double> curve2;
    auto again = train::train_stage1(init, imgs, cfg, ch, &curve2);
    CHECK(again.w_enc == trained.w_enc);
    CHECK(again.w_dec == trained.w_dec);
    CHECK(curve2 == curve);
}

TEST_CASE("stage-2 trains the compressor transforms around the frozen quantizer") {
    auto imgs = tiny_images(2);
    auto cdc = codec::make_trainable_linear(16, 16, 48, 8, 3);
    auto rc_init = codec::make_residual_compressor(16, 16, 4, 5, 0.8);
    auto ch = tiny_channel();
    auto cfg = tiny_train(10, 0.1);
    cfg.hops = 1;

    std::vector<double> curve;
    auto trained = train::train_stage2(cdc, rc_init, imgs, cfg, ch, &curve);
    REQUIRE(curve.size() == 11);
    for (size_t i = 1; i < curve.size(); ++i) CHECK(curve[i] <= curve[i - 1]);
    CHECK(curve.back() < curve.front());
    CHECK(curve.front() == doctest::Approx(train::stage2_objective(cdc, rc_init, imgs, cfg, ch)));
    CHECK((trained.pre_w != rc_init.pre_w || trained.post_w != rc_init.post_w));
    CHECK(trained.q == rc_init.q);  // the quantizer itself is not trainable
    CHECK(trained.range == rc_init.range);
}

TEST_CASE("stage-3 dataset pairs one reconstruction with one symbol grid per realization") {
    auto imgs = tiny_images(3);
    auto cdc = codec::make_block_dct(16, 16, 192, 8);
    auto rc = codec::make_residual_compressor(16, 16, 4, 5, 0.8);
    auto ch = tiny_channel();
    std::vector<image::ImageTensor> conditions;
    std::vector<entropy::SymbolGrid> grids;
    train::stage3_dataset(cdc, rc, imgs, ch, &conditions, &grids);
    REQUIRE(conditions.size() == imgs.size() * static_cast<size_t>(ch.realizations));
    REQUIRE(grids.size() == conditions.size());
    for (const auto& g : grids) {
        CHECK(g.q == 5);
        CHECK(g.u == 4);
        CHECK(g.v == 4);
        for (int32_t s : g.sym) {
            REQUIRE(s >= 0);
            REQUIRE(s < 5);
        }
    }
    for (const auto& c : conditions) {
        CHECK(c.height == 16);
        CHECK(c.width == 16);
    }
}

TEST_CASE("stage-3 descent lowers the estimator NLL monotonically") {
    auto imgs = tiny_images(3);
    auto cdc = codec::make_block_dct(16, 16, 192, 8);
    auto rc = codec::make_residual_compressor(16, 16, 4, 5, 0.8);
    auto init = entropy::ResidualEstimator::init(4, 5, 3);
    auto ch = tiny_channel();
    auto cfg = tiny_train(15, 1.0);

    std::vector<double> curve;
    auto trained = train::train_stage3(cdc, rc, init, imgs, cfg, ch, &curve);
    REQUIRE(curve.size() == 16);
    for (size_t i = 1; i < curve.size(); ++i) CHECK(curve[i] <= curve[i - 1]);
    CHECK(curve.back() < curve.front());
    CHECK(trained.w_sigma != init.w_sigma);

    // zero learning rate leaves the weights bit-identical here too
    std::vector<double> flat;
    auto frozen = train::train_stage3(cdc, rc, init, imgs, tiny_train(3, 0.0), ch, &flat);
    CHECK(frozen.w_pi == init.w_pi);
    CHECK(frozen.w_mu == init.w_mu);
    CHECK(frozen.w_sigma == init.w_sigma);
    CHECK(frozen.w_lambda == init.w_lambda);
}
