#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mhpsc/config.hpp"
#include "mhpsc/pipeline.hpp"
#include "mhpsc/setup.hpp"
#include "mhpsc/svgplot.hpp"

using namespace mhpsc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& text) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
}

struct CliResult {
    int exit_code;
    std::string output;
};

// Runs the real binary with stdout+stderr captured; tests run from the repo root.
CliResult run_cli(const std::string& args) {
    static int counter = 0;
    const std::string log = "out/test_tmp/cli_" + std::to_string(counter++) + ".log";
    fs::create_directories("out/test_tmp");
    const std::string cmd = std::string(MHPSC_CLI_PATH) + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

}  // namespace

TEST_CASE("an empty json object is a complete config") {
    auto c = config::parse_config("{}", {});
    CHECK(c.image_height == 128);
    CHECK(c.hops == 20);
    CHECK(c.snr_db == 10.0);
    CHECK(c.schedule_mode == "all");
    CHECK(c.codec_kind == "block_dct");
    CHECK(c.codec_l == 6144);
    CHECK(c.residual_enabled);
    CHECK(!c.residual_has_snr);
    CHECK(c.ldpc_path == "data/ldpc/ldpc_n1024_k512.alist");
    CHECK(c.est_weights == "data/weights/estimator.bin");
    CHECK(c.exp_kind == "single");
    CHECK(c.train_steps == 200);
}

TEST_CASE("unknown keys are rejected with their dotted path") {
    CHECK_THROWS_WITH_AS(config::parse_config(R"({"bogus": 1})", {}),
                         doctest::Contains("bogus"), config::ConfigError);
    CHECK_THROWS_WITH_AS(config::parse_config(R"({"residual": {"compressor": {"qq": 3}}})", {}),
                         doctest::Contains("residual.compressor.qq"), config::ConfigError);
}

TEST_CASE("wrong types and unsupported schema versions are config errors") {
    CHECK_THROWS_AS(config::parse_config(R"({"hops": "ten"})", {}), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config(R"({"snr_db": true})", {}), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config(R"({"schema_version": 2})", {}), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config("not json", {}), config::ConfigError);
}

TEST_CASE("schedule accepts all, none, or an index array") {
    CHECK(config::parse_config(R"({"schedule": "all"})", {}).schedule_mode == "all");
    CHECK(config::parse_config(R"({"schedule": "none"})", {}).schedule_mode == "none");
    auto lst = config::parse_config(R"({"schedule": [2, 3, 5]})", {});
    CHECK(lst.schedule_mode == "list");
    CHECK(lst.schedule == std::vector<int>{2, 3, 5});
    CHECK_THROWS_AS(config::parse_config(R"({"schedule": true})", {}), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config(R"({"schedule": "sometimes"})", {}), config::ConfigError);
}

TEST_CASE("dotted overrides update and create nested values") {
    auto c = config::parse_config("{}", {"snr_db=12.5", "residual.enabled=false",
                                         "codec.kind=trainable_linear", "experiment.grid=[1,2]",
                                         "image.height=64"});
    CHECK(c.snr_db == 12.5);
    CHECK(!c.residual_enabled);
    CHECK(c.codec_kind == "trainable_linear");  // bare words parse as strings
    CHECK(c.grid == std::vector<double>{1.0, 2.0});
    CHECK(c.image_height == 64);

    CHECK_THROWS_AS(config::parse_config("{}", {"snr_db"}), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config("{}", {"=5"}), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config("{}", {"typo_key=1"}), config::ConfigError);
}

TEST_CASE("bare config names resolve through the config directory") {
    const std::string dir = "out/test_tmp/cfgdir";
    spit(dir + "/probe.json", "{}");
    setenv("MHPSC_CONFIG_DIR", dir.c_str(), 1);
    CHECK(config::resolve_config_path("probe.json") == dir + "/probe.json");
    CHECK(config::resolve_config_path("") == dir + "/base.json");
    // an existing path wins over the config directory
    spit("out/test_tmp/local.json", "{}");
    CHECK(config::resolve_config_path("out/test_tmp/local.json") == "out/test_tmp/local.json");
    // unresolvable names pass through unchanged
    CHECK(config::resolve_config_path("missing.json") == "missing.json");
    unsetenv("MHPSC_CONFIG_DIR");
}

TEST_CASE("run config resolves schedules and the residual snr fallback") {
    auto all = setup::build_run_config(config::parse_config(R"({"hops": 4, "snr_db": 7})", {}));
    CHECK(all.schedule == std::vector<int>{1, 2, 3, 4});
    CHECK(all.has_residual);
    CHECK(all.residual_snr_db == 7.0);  // follows the semantic link when unset

    auto none = setup::build_run_config(config::parse_config(R"({"schedule": "none"})", {}));
    CHECK(none.schedule.empty());
    CHECK(!none.has_residual);

    auto own = setup::build_run_config(
        config::parse_config(R"({"snr_db": 7, "residual": {"snr_db": 13}})", {}));
    CHECK(own.residual_snr_db == 13.0);
}

TEST_CASE("missing stack files surface as config errors naming the path") {
    auto cfg = config::parse_config(R"({"residual": {"ldpc": "out/test_tmp/nope.alist"}})", {});
    CHECK_THROWS_WITH_AS(setup::build_residual_stack(cfg),
                         doctest::Contains("out/test_tmp/nope.alist"), config::ConfigError);
    auto cfg2 = config::parse_config(
        R"({"residual": {"estimator": {"weights": "out/test_tmp/nope.bin"}}})", {});
    CHECK_THROWS_WITH_AS(setup::build_residual_stack(cfg2),
                         doctest::Contains("out/test_tmp/nope.bin"), config::ConfigError);
}

TEST_CASE("input images must match the configured geometry") {
    auto cfg = config::parse_config(R"({"image": {"height": 32, "width": 32},
                                        "corpus": {"count": 2}})", {});
    auto imgs = setup::load_input_images(cfg);
    REQUIRE(imgs.size() == 2);
    CHECK(imgs[0].height == 32);

    auto bad = config::parse_config(R"({"input": "out/test_tmp/does_not_exist"})", {});
    CHECK_THROWS_AS(setup::load_input_images(bad), config::ConfigError);
}

TEST_CASE("line charts carry one polyline and legend entry per series") {
    svg::Series a{"alpha", {1, 2, 3, 4}, {0.1, 0.2, 0.15, 0.3}};
    svg::Series b{"beta", {1, 2, 3, 4}, {0.3, 0.1, 0.2, 0.25}};
    auto doc = svg::line_chart({a, b}, "title", "x", "y");
    size_t polylines = 0;
    for (size_t p = doc.find("<polyline"); p != std::string::npos; p = doc.find("<polyline", p + 1))
        ++polylines;
    CHECK(polylines == 2);
    CHECK(doc.find("alpha") != std::string::npos);
    CHECK(doc.find("beta") != std::string::npos);
    CHECK_THROWS(svg::line_chart({}, "t", "x", "y"));

    fs::create_directories("out/test_tmp");
    svg::write_svg("out/test_tmp/chart.svg", doc);
    CHECK(slurp("out/test_tmp/chart.svg") == doc);
}

// ---- subprocess tests against the real binary ------------------------------

TEST_CASE("cli: identical run configs produce byte-identical CSVs") {
    const char* cfg = R"({"schema_version": 1,
                          "image": {"height": 32, "width": 32},
                          "codec": {"l": 768},
                          "residual": {"ldpc": "data/ldpc/ldpc_n96_k48.alist", "qam_order": 4,
                                       "estimator": {"weights": ""}},
                          "hops": 3, "corpus": {"count": 2}, "seed": 5})";
    spit("out/test_tmp/run_cfg.json", cfg);
    auto r1 = run_cli("run --config out/test_tmp/run_cfg.json --set output_csv=out/test_tmp/r1.csv");
    auto r2 = run_cli("run --config out/test_tmp/run_cfg.json --set output_csv=out/test_tmp/r2.csv");
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp("out/test_tmp/r1.csv") == slurp("out/test_tmp/r2.csv"));
    CHECK(slurp("out/test_tmp/r1.csv").find("# mhpsc csv schema v1") == 0);
}

TEST_CASE("cli: a missing LDPC file exits 2 and names the path") {
    auto r = run_cli("run --config out/test_tmp/run_cfg.json"
                     " --set residual.ldpc=out/test_tmp/absent.alist"
                     " --set output_csv=out/test_tmp/never.csv");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("out/test_tmp/absent.alist") != std::string::npos);
}

TEST_CASE("cli: unknown config keys exit 2") {
    spit("out/test_tmp/bad_cfg.json", R"({"hops": 3, "bogus": 1})");
    auto r = run_cli("run --config out/test_tmp/bad_cfg.json");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("bogus") != std::string::npos);
}

TEST_CASE("cli: gen-corpus writes the requested deterministic ppm files") {
    fs::remove_all("out/test_tmp/gc1");
    fs::remove_all("out/test_tmp/gc2");
    auto r1 = run_cli("gen-corpus --out out/test_tmp/gc1 --count 2 --seed 3 --height 16 --width 16");
    auto r2 = run_cli("gen-corpus --out out/test_tmp/gc2 --count 2 --seed 3 --height 16 --width 16");
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp("out/test_tmp/gc1/corpus_0000.ppm") == slurp("out/test_tmp/gc2/corpus_0000.ppm"));
    CHECK(slurp("out/test_tmp/gc1/corpus_0001.ppm") == slurp("out/test_tmp/gc2/corpus_0001.ppm"));
}

TEST_CASE("cli: training stages enforce their artifact dependencies") {
    fs::remove_all("out/test_tmp/tw");
    const char* cfg = R"({"image": {"height": 16, "width": 16},
                          "codec": {"kind": "trainable_linear", "l": 48},
                          "train": {"corpus_count": 2, "steps": 2, "lr": 0.2, "hops": 1,
                                    "realizations": 1, "out_dir": "out/test_tmp/tw"}})";
    spit("out/test_tmp/train_cfg.json", cfg);

    auto r3 = run_cli("train --stage 3 --config out/test_tmp/train_cfg.json");
    CHECK(r3.exit_code == 2);
    // the trainable backbone makes stage-1 weights the first missing artifact
    CHECK(r3.output.find("requires the stage-") != std::string::npos);
    CHECK(r3.output.find("first") != std::string::npos);

    auto r1 = run_cli("train --stage 1 --config out/test_tmp/train_cfg.json");
    REQUIRE(r1.exit_code == 0);
    CHECK(fs::exists("out/test_tmp/tw/codec_stage1.bin"));
    CHECK(fs::exists("out/test_tmp/tw/stage1_loss.csv"));

    auto r2 = run_cli("train --stage 2 --config out/test_tmp/train_cfg.json");
    REQUIRE(r2.exit_code == 0);
    CHECK(fs::exists("out/test_tmp/tw/compressor_stage2.bin"));

    auto r3b = run_cli("train --stage 3 --config out/test_tmp/train_cfg.json");
    REQUIRE(r3b.exit_code == 0);
    CHECK(fs::exists("out/test_tmp/tw/estimator_stage3.bin"));

    // stage 1 is only defined for the trainable codec
    auto rdct = run_cli("train --stage 1 --config out/test_tmp/train_cfg.json"
                        " --set codec.kind=block_dct");
    CHECK(rdct.exit_code == 2);
}

TEST_CASE("cli: repeated training runs write identical weight files") {
    fs::remove_all("out/test_tmp/tw_a");
    fs::remove_all("out/test_tmp/tw_b");
    auto ra = run_cli("train --stage 1 --config out/test_tmp/train_cfg.json"
                      " --set train.out_dir=out/test_tmp/tw_a");
    auto rb = run_cli("train --stage 1 --config out/test_tmp/train_cfg.json"
                      " --set train.out_dir=out/test_tmp/tw_b");
    REQUIRE(ra.exit_code == 0);
    REQUIRE(rb.exit_code == 0);
    CHECK(slurp("out/test_tmp/tw_a/codec_stage1.bin") == slurp("out/test_tmp/tw_b/codec_stage1.bin"));
    CHECK(slurp("out/test_tmp/tw_a/stage1_loss.csv") == slurp("out/test_tmp/tw_b/stage1_loss.csv"));

    // the loss curve ends no higher than it starts
    std::ifstream curve("out/test_tmp/tw_a/stage1_loss.csv");
    std::string line;
    std::getline(curve, line);  // schema comment
    std::getline(curve, line);  // column header
    double first = -1.0, last = -1.0;
    while (std::getline(curve, line)) {
        const double v = std::stod(line.substr(line.find(',') + 1));
        if (first < 0.0) first = v;
        last = v;
    }
    CHECK(first > 0.0);
    CHECK(last <= first);
}

TEST_CASE("cli: plot renders series from a sweep CSV and rejects empty input") {
    const char* cfg = R"({"schema_version": 1,
                          "image": {"height": 32, "width": 32},
                          "codec": {"l": 768},
                          "schedule": "none",
                          "hops": 2, "corpus": {"count": 2}, "seed": 5,
                          "experiment": {"kind": "snr", "grid": [5, 10], "trials": 2,
                                          "id": "sweep_test"}})";
    spit("out/test_tmp/sweep_cfg.json", cfg);
    auto rs = run_cli("run --config out/test_tmp/sweep_cfg.json"
                      " --set output_csv=out/test_tmp/sweep.csv");
    REQUIRE(rs.exit_code == 0);

    auto rp = run_cli("plot --csv out/test_tmp/sweep.csv --out out/test_tmp/plot.svg --kind snr");
    REQUIRE(rp.exit_code == 0);
    auto doc = slurp("out/test_tmp/plot.svg");
    CHECK(doc.find("<polyline") != std::string::npos);
    CHECK(doc.find("sweep_test") != std::string::npos);

    spit("out/test_tmp/empty.csv", pipeline::csv_header());
    auto re = run_cli("plot --csv out/test_tmp/empty.csv --out out/test_tmp/none.svg --kind snr");
    CHECK(re.exit_code == 2);
    CHECK(!fs::exists("out/test_tmp/none.svg"));
}
