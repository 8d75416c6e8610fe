#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "mhpsc/corpus.hpp"
#include "mhpsc/metrics.hpp"
#include "mhpsc/pipeline.hpp"
#include "mhpsc/rng.hpp"

using namespace mhpsc;

namespace {

pipeline::ResidualStack small_stack() {
    pipeline::ResidualStack rs;
    rs.ldpc = modem::ldpc_load_alist("data/ldpc/ldpc_n96_k48.alist");
    rs.qam = modem::QamConstellation::make(4);
    rs.compressor = codec::make_residual_compressor(32, 32, 8, 7, 0.8);
    rs.estimator = entropy::ResidualEstimator::init(8, 7, 5);
    return rs;
}

pipeline::HopConfig noisy_hop(uint64_t seed) {
    pipeline::HopConfig hc;
    hc.snr_db = 8.0;
    hc.semantic_seed = rng::derive_stream(seed, 2);
    hc.residual_enabled = true;
    hc.residual_noiseless = true;  // clean digital link: frames always deliver
    hc.residual_seed = rng::derive_stream(seed, 3);
    return hc;
}

}  // namespace

TEST_CASE("a noiseless full-length hop is the identity") {
    auto cdc = codec::make_block_dct(32, 32, 3 * 64 * 16, 8);
    auto img = corpus::synth_image(1, 0, 32, 32);
    pipeline::HopConfig hc;
    hc.noiseless = true;
    hc.semantic_seed = 5;
    auto out = pipeline::run_hop_common(img, cdc, hc);
    for (size_t i = 0; i < img.data.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(img.data[i]).epsilon(1e-9));
}

TEST_CASE("a single-hop chain reduces to run_hop_common") {
    auto cdc = codec::make_block_dct(32, 32, 768, 8);
    auto img = corpus::synth_image(2, 0, 32, 32);
    pipeline::RunConfig rc;
    rc.hops = 1;
    rc.snr_db = 9.0;
    rc.trial_seed = 123;
    rc.codec = cdc;
    auto chain = pipeline::run_multihop(img, rc);

    pipeline::HopConfig hc;
    hc.snr_db = 9.0;
    hc.semantic_seed = rng::derive_stream(123, 2);  // hop 1's derived seed
    auto single = pipeline::run_hop_common(img, cdc, hc);
    CHECK(chain.final_image.data == single.data);
    REQUIRE(chain.reports.size() == 1);
    CHECK(chain.reports[0].frame_status == "disabled");
    CHECK(chain.reports[0].residual_channel_symbols == 0);
    CHECK(chain.reports[0].residual_payload_bits == 0);
    CHECK(chain.reports[0].semantic_reals == 768);
}

TEST_CASE("noiseless truncation reaches its fixed point after one hop") {
    auto cdc = codec::make_block_dct(32, 32, 768, 8);
    // keep the image away from 0/1 so the decoder clamp never engages
    auto img = corpus::synth_image(3, 0, 32, 32);
    for (auto& x : img.data) x = 0.25 + 0.5 * x;
    pipeline::RunConfig rc;
    rc.hops = 4;
    rc.noiseless = true;
    rc.trial_seed = 7;
    rc.codec = cdc;
    auto rr = pipeline::run_multihop(img, rc);
    const double first = rr.reports[0].psnr_recon_db;
    for (const auto& rep : rr.reports)
        CHECK(rep.psnr_recon_db == doctest::Approx(first).epsilon(1e-9));
}

TEST_CASE("compensation improves a noisy hop on average and reports the link cost") {
    auto cdc = codec::make_block_dct(32, 32, 768, 8);
    auto stack = small_stack();
    auto img = corpus::synth_image(4, 0, 32, 32);
    double recon_sum = 0.0, comp_sum = 0.0;
    for (uint64_t t = 0; t < 8; ++t) {
        auto hop = pipeline::run_hop_compensated(img, cdc, stack, noisy_hop(100 + t));
        REQUIRE(hop.frame_status == "delivered");
        CHECK(hop.residual_payload_bits > 0);
        // 4QAM carries one rate-1/2 n=96 block per 48 complex symbols
        CHECK(hop.residual_channel_symbols % 48 == 0);
        recon_sum += metrics::psnr(img, hop.recon);
        comp_sum += metrics::psnr(img, hop.compensated);
    }
    CHECK(comp_sum / 8.0 > recon_sum / 8.0 + 0.3);
}

TEST_CASE("a corrupted residual frame degrades to the uncompensated image") {
    auto cdc = codec::make_block_dct(32, 32, 768, 8);
    auto stack = small_stack();
    auto img = corpus::synth_image(5, 0, 32, 32);
    auto hc = noisy_hop(200);
    hc.corrupt_coded_bits = 48;  // far beyond the code's correction radius
    auto hop = pipeline::run_hop_compensated(img, cdc, stack, hc);
    CHECK(hop.frame_status == "crc_failed");
    CHECK(hop.compensated.data == hop.recon.data);
}

TEST_CASE("hops outside the schedule match a compensation-free run bit for bit") {
    auto cdc = codec::make_block_dct(32, 32, 768, 8);
    pipeline::RunConfig plain;
    plain.hops = 6;
    plain.snr_db = 9.0;
    plain.trial_seed = 31;
    plain.codec = cdc;

    auto scheduled = plain;
    scheduled.has_residual = true;
    scheduled.residual = small_stack();
    scheduled.residual_noiseless = true;
    scheduled.schedule = {4, 5, 6};

    auto a = pipeline::run_multihop(corpus::synth_image(6, 0, 32, 32), plain);
    auto b = pipeline::run_multihop(corpus::synth_image(6, 0, 32, 32), scheduled);
    for (int h = 0; h < 3; ++h) {
        CHECK(a.reports[static_cast<size_t>(h)].psnr_recon_db ==
              b.reports[static_cast<size_t>(h)].psnr_recon_db);
        CHECK(b.reports[static_cast<size_t>(h)].frame_status == "disabled");
    }
    for (int h = 3; h < 6; ++h) CHECK(b.reports[static_cast<size_t>(h)].frame_status == "delivered");
    CHECK(a.final_image.data != b.final_image.data);
}

TEST_CASE("run_multihop validates hop count and schedule range") {
    auto cdc = codec::make_block_dct(32, 32, 768, 8);
    auto img = corpus::synth_image(7, 0, 32, 32);
    pipeline::RunConfig rc;
    rc.codec = cdc;
    rc.hops = 0;
    CHECK_THROWS(pipeline::run_multihop(img, rc));
    rc.hops = 3;
    rc.schedule = {4};
    CHECK_THROWS(pipeline::run_multihop(img, rc));
}

TEST_CASE("cbr follows the documented accounting") {
    CHECK(pipeline::cbr(3000, 0, 0, 4, 100, 100, false) == doctest::Approx(0.1));
    // residual channel symbols count as two real channel uses each
    CHECK(pipeline::cbr(0, 100, 0, 4, 10, 10, false) == doctest::Approx(200.0 / 300.0));
    CHECK(pipeline::cbr(0, 200, 0, 4, 10, 10, false) ==
          doctest::Approx(2.0 * pipeline::cbr(0, 100, 0, 4, 10, 10, false)));
    // payload-only accounting: symbols needed for the payload bits alone
    CHECK(pipeline::cbr(0, 999, 123, 4, 10, 10, true) ==
          doctest::Approx(2.0 * std::ceil(123.0 / 4.0) / 300.0));
}

TEST_CASE("csv header carries the schema tag and rows are stable text") {
    auto header = pipeline::csv_header();
    CHECK(header.find("# mhpsc csv schema v1") == 0);
    CHECK(header.find("psnr_comp_db") != std::string::npos);
    CHECK(header.find("frame_status") != std::string::npos);

    pipeline::HopReport rep;
    rep.hop = 2;
    rep.psnr_recon_db = 10.25;
    rep.psnr_comp_db = 12.5;
    rep.msssim_recon = 0.5;
    rep.msssim_comp = 0.625;
    rep.semantic_reals = 768;
    rep.residual_channel_symbols = 96;
    rep.residual_payload_bits = 130;
    rep.cbr_cumulative = 0.25;
    rep.frame_status = "delivered";
    std::string out;
    pipeline::append_csv_rows(out, "exp", 10.0, 42, {rep});
    CHECK(out == "exp,10,42,2,10.2500,12.5000,0.500000,0.625000,768,96,130,0.25000000,delivered\n");
}

TEST_CASE("sweeps are deterministic and thread-count invariant") {
    pipeline::SweepConfig sc;
    sc.kind = pipeline::SweepKind::snr;
    sc.grid = {5.0, 10.0};
    sc.trials = 2;
    sc.base_seed = 9;
    sc.experiment_id = "t";
    sc.tmpl.hops = 2;
    sc.tmpl.codec = codec::make_block_dct(32, 32, 768, 8);
    auto images = corpus::synth_corpus(3, 2, 32, 32);

    sc.jobs = 1;
    auto a = pipeline::sweep_csv(sc, images);
    auto b = pipeline::sweep_csv(sc, images);
    CHECK(a == b);
    sc.jobs = 2;
    CHECK(pipeline::sweep_csv(sc, images) == a);

    // header comment + column row + grid x trials x hops data rows
    size_t lines = 0;
    for (char c : a) lines += (c == '\n');
    CHECK(lines == 2 + 2 * 2 * 2);
}
