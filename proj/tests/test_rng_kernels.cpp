#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "mhpsc/kernels.hpp"
#include "mhpsc/rng.hpp"

using namespace mhpsc;

TEST_CASE("derive_stream is deterministic and separates streams") {
    CHECK(rng::derive_stream(42, 0) == rng::derive_stream(42, 0));
    CHECK(rng::derive_stream(42, 0) != rng::derive_stream(42, 1));
    CHECK(rng::derive_stream(42, 0) != rng::derive_stream(43, 0));
}

TEST_CASE("xoshiro reruns identically from the same seed") {
    rng::Xoshiro256pp a(7), b(7);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("uniform01 stays in [0,1) with a sane mean") {
    rng::Xoshiro256pp g(1);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double u = g.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::fabs(sum / n - 0.5) < 0.01);
}

TEST_CASE("uniform01_open_low never returns zero") {
    rng::Xoshiro256pp g(2);
    for (int i = 0; i < 100000; ++i) REQUIRE(g.uniform01_open_low() > 0.0);
}

TEST_CASE("normal draws have unit variance and consume two uniforms each") {
    rng::Xoshiro256pp g(3);
    double sum = 0.0, sq = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double z = g.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::fabs(sum / n) < 0.02);
    CHECK(std::fabs(sq / n - 1.0) < 0.02);

    // stream position is call-count deterministic: two uniforms per pair
    rng::Xoshiro256pp a(9), b(9);
    double z0, z1;
    a.normal_pair(z0, z1);
    b.uniform01();
    b.uniform01();
    CHECK(a.next() == b.next());
}

TEST_CASE("cnormal_unit has unit average power") {
    rng::Xoshiro256pp g(4);
    double p = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) p += std::norm(g.cnormal_unit());
    CHECK(std::fabs(p / n - 1.0) < 0.02);
}

namespace {

std::vector<double> random_vec(size_t n, uint64_t seed) {
    rng::Xoshiro256pp g(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = g.normal();
    return v;
}

}  // namespace

TEST_CASE("scalar and AVX2 kernels agree bit for bit, tails included") {
    const auto& ref = kernels::scalar_kernels();
    const auto* simd = kernels::avx2_kernels();
    if (!simd) return;  // build or CPU without AVX2: scalar path is the only one
    for (size_t n : {size_t(0), size_t(1), size_t(3), size_t(4), size_t(7), size_t(8),
                     size_t(31), size_t(64), size_t(1001)}) {
        auto a = random_vec(n, 100 + n), b = random_vec(n, 200 + n);
        std::vector<double> oa(n), ob(n);

        ref.sub(a.data(), b.data(), oa.data(), n);
        simd->sub(a.data(), b.data(), ob.data(), n);
        CHECK(oa == ob);

        ref.add_clamp01(a.data(), b.data(), oa.data(), n);
        simd->add_clamp01(a.data(), b.data(), ob.data(), n);
        CHECK(oa == ob);

        ref.scale(a.data(), 1.7, oa.data(), n);
        simd->scale(a.data(), 1.7, ob.data(), n);
        CHECK(oa == ob);

        CHECK(ref.sum_sq(a.data(), n) == simd->sum_sq(a.data(), n));
        CHECK(ref.sum_sq_diff(a.data(), b.data(), n) == simd->sum_sq_diff(a.data(), b.data(), n));

        const size_t nc = n / 2;  // complex kernels count complex elements
        std::vector<double> noise = random_vec(2 * nc, 300 + n);
        std::vector<double> ca(2 * nc), cb(2 * nc);
        ref.cmul_add(a.data(), b.data(), noise.data(), ca.data(), nc);
        simd->cmul_add(a.data(), b.data(), noise.data(), cb.data(), nc);
        CHECK(ca == cb);
        ref.cmul_add(a.data(), b.data(), nullptr, ca.data(), nc);
        simd->cmul_add(a.data(), b.data(), nullptr, cb.data(), nc);
        CHECK(ca == cb);

        ref.mmse(a.data(), b.data(), 0.25, ca.data(), nc);
        simd->mmse(a.data(), b.data(), 0.25, cb.data(), nc);
        CHECK(ca == cb);
    }
}

TEST_CASE("kernel arithmetic matches direct formulas") {
    const auto& k = kernels::active_kernels();
    auto a = random_vec(37, 1), b = random_vec(37, 2);
    std::vector<double> out(37);

    k.sub(a.data(), b.data(), out.data(), 37);
    for (size_t i = 0; i < 37; ++i) CHECK(out[i] == a[i] - b[i]);

    k.add_clamp01(a.data(), b.data(), out.data(), 37);
    for (size_t i = 0; i < 37; ++i) {
        double want = a[i] + b[i];
        want = want < 0.0 ? 0.0 : (want > 1.0 ? 1.0 : want);
        CHECK(out[i] == want);
    }

    double ss = 0.0;
    for (double x : a) ss += x * x;
    CHECK(k.sum_sq(a.data(), a.size()) == doctest::Approx(ss).epsilon(1e-12));

    // complex mmse: conj(h)*z / (|h|^2 + sigma2)
    std::vector<double> mo(36);
    k.mmse(a.data(), b.data(), 0.5, mo.data(), 18);
    for (size_t i = 0; i < 18; ++i) {
        std::complex<double> h(a[2 * i], a[2 * i + 1]), z(b[2 * i], b[2 * i + 1]);
        std::complex<double> want = std::conj(h) * z / (std::norm(h) + 0.5);
        CHECK(mo[2 * i] == doctest::Approx(want.real()).epsilon(1e-12));
        CHECK(mo[2 * i + 1] == doctest::Approx(want.imag()).epsilon(1e-12));
    }
}

TEST_CASE("active kernel table is one of the known variants") {
    const auto& k = kernels::active_kernels();
    const std::string name = k.name;
    CHECK((name == "scalar" || name == "avx2"));
}
