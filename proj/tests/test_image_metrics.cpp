#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "mhpsc/corpus.hpp"
#include "mhpsc/image.hpp"
#include "mhpsc/metrics.hpp"

using namespace mhpsc;

namespace {

image::ImageTensor shifted(const image::ImageTensor& img, double d) {
    image::ImageTensor out = img;
    for (auto& x : out.data) x += d;
    return out;
}

}  // namespace

TEST_CASE("residual then compensate reproduces the target to rounding") {
    auto target = corpus::synth_image(1, 0, 24, 24);
    auto recon = corpus::synth_image(1, 1, 24, 24);
    auto r = image::residual(target, recon);
    auto back = image::compensate(recon, r);
    // recon + (target - recon): one rounding each way, and the clamp is a no-op in [0,1]
    for (size_t i = 0; i < back.data.size(); ++i)
        CHECK(back.data[i] == doctest::Approx(target.data[i]).epsilon(1e-14));
}

TEST_CASE("compensate clamps to [0,1]") {
    auto base = image::ImageTensor::zeros(12, 12);
    auto r = image::ImageTensor::zeros(12, 12);
    r.data.assign(r.data.size(), -0.5);
    auto lo = image::compensate(base, r);
    for (double x : lo.data) CHECK(x == 0.0);
    r.data.assign(r.data.size(), 1.5);
    auto hi = image::compensate(base, r);
    for (double x : hi.data) CHECK(x == 1.0);
}

TEST_CASE("a uniform 0.1 shift gives MSE 0.01 and PSNR 20 dB") {
    auto a = corpus::synth_image(2, 0, 32, 32);
    for (auto& x : a.data) x = 0.2 + 0.5 * x;  // keep the +0.1 shift inside [0,1]
    auto b = shifted(a, 0.1);
    CHECK(metrics::mse(a, b) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(metrics::psnr(a, b) == doctest::Approx(20.0).epsilon(1e-10));
}

TEST_CASE("psnr of identical images is +infinity") {
    auto a = corpus::synth_image(3, 0, 16, 16);
    CHECK(metrics::psnr(a, a) == std::numeric_limits<double>::infinity());
}

TEST_CASE("mse rejects shape mismatch") {
    auto a = image::ImageTensor::zeros(16, 16);
    auto b = image::ImageTensor::zeros(16, 17);
    CHECK_THROWS(metrics::mse(a, b));
}

TEST_CASE("ms_ssim is 1 on identical images and below 1 under distortion") {
    auto a = corpus::synth_image(4, 0, 64, 64);
    CHECK(metrics::ms_ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));
    auto noisy = a;
    for (size_t i = 0; i < noisy.data.size(); i += 3) noisy.data[i] = 1.0 - noisy.data[i];
    double v = metrics::ms_ssim(a, noisy);
    CHECK(v < 0.999);
    CHECK(v == metrics::ms_ssim(noisy, a));  // symmetric
}

TEST_CASE("ms_ssim rejects images smaller than the 11-tap window") {
    auto a = image::ImageTensor::zeros(10, 64);
    CHECK_THROWS(metrics::ms_ssim(a, a));
}

TEST_CASE("ppm save/load round-trips pixel bytes exactly") {
    namespace fs = std::filesystem;
    fs::create_directories("out/test_tmp");
    const std::string p1 = "out/test_tmp/rt1.ppm", p2 = "out/test_tmp/rt2.ppm";
    auto img = corpus::synth_image(5, 0, 20, 28);
    image::save_ppm(img, p1);
    auto loaded = image::load_ppm(p1);
    CHECK(loaded.height == 20);
    CHECK(loaded.width == 28);
    image::save_ppm(loaded, p2);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    // loading again reproduces the same tensor values
    auto again = image::load_ppm(p2);
    CHECK(again.data == loaded.data);
}

TEST_CASE("image loader dispatches on extension and rejects unknown ones") {
    CHECK_THROWS(image::load_image("out/test_tmp/nope.bmp"));
    CHECK_THROWS(image::load_ppm("out/test_tmp/missing.ppm"));
}

TEST_CASE("synthetic corpus is deterministic, in range, and sized as asked") {
    auto c1 = corpus::synth_corpus(11, 3, 24, 40);
    auto c2 = corpus::synth_corpus(11, 3, 24, 40);
    REQUIRE(c1.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(c1[i].height == 24);
        CHECK(c1[i].width == 40);
        CHECK(c1[i].data == c2[i].data);
        for (double x : c1[i].data) {
            REQUIRE(x >= 0.0);
            REQUIRE(x <= 1.0);
        }
    }
    CHECK(corpus::synth_image(11, 0, 24, 40).data != corpus::synth_image(11, 1, 24, 40).data);
    CHECK(corpus::synth_image(11, 0, 24, 40).data != corpus::synth_image(12, 0, 24, 40).data);
}

TEST_CASE("write_corpus emits loadable ppm files in index order") {
    namespace fs = std::filesystem;
    const std::string dir = "out/test_tmp/corpus";
    fs::remove_all(dir);
    auto paths = corpus::write_corpus(dir, 13, 3, 16, 16);
    REQUIRE(paths.size() == 3);
    auto back = corpus::load_dataset(dir);
    auto want = corpus::synth_corpus(13, 3, 16, 16);
    REQUIRE(back.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        // byte-quantized by the ppm round trip: match within half a bin
        for (size_t j = 0; j < back[i].data.size(); ++j)
            CHECK(std::fabs(back[i].data[j] - want[i].data[j]) <= 0.5 / 255.0 + 1e-12);
    }
    // single-file form loads exactly one image
    CHECK(corpus::load_dataset(paths[0]).size() == 1);
}
