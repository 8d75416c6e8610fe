#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "mhpsc/corpus.hpp"
#include "mhpsc/entropy_model.hpp"
#include "mhpsc/rng.hpp"

using namespace mhpsc;

TEST_CASE("centered_value maps the alphabet onto [-1,1]") {
    CHECK(entropy::centered_value(0, 7) == doctest::Approx(-1.0));
    CHECK(entropy::centered_value(6, 7) == doctest::Approx(1.0));
    CHECK(entropy::centered_value(3, 7) == doctest::Approx(0.0));
    CHECK(entropy::centered_value(1, 5) == doctest::Approx(-0.5));
}

TEST_CASE("logistic_cdf hits the textbook value and stays stable at extremes") {
    CHECK(entropy::logistic_cdf(1.0, 0.0, 1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-15));
    CHECK(entropy::logistic_cdf(0.0, 0.0, 1.0) == doctest::Approx(0.5));
    CHECK(entropy::logistic_cdf(5.0, 0.0, 1.0) + entropy::logistic_cdf(-5.0, 0.0, 1.0) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(entropy::logistic_cdf(1000.0, 0.0, 1.0) == 1.0);
    CHECK(entropy::logistic_cdf(-1000.0, 0.0, 1.0) == 0.0);
    CHECK(std::isfinite(entropy::logistic_cdf(-1000.0, 500.0, 1e-3)));
}

TEST_CASE("discretized logistic pmf sums to 1 over the alphabet") {
    for (int q : {2, 3, 7, 31}) {
        for (double mu : {-3.0, -0.4, 0.0, 0.9, 3.0}) {
            for (double sigma : {1e-3, 0.05, 0.7, 10.0}) {
                double sum = 0.0;
                for (int s = 0; s < q; ++s) {
                    double p = entropy::discretized_logistic_pmf(s, mu, sigma, q);
                    REQUIRE(p >= 0.0);
                    sum += p;
                }
                CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }
}

namespace {

entropy::MixturePreact random_preact(int k, int u, int v, uint64_t seed) {
    auto pre = entropy::MixturePreact::zeros(k, u, v);
    rng::Xoshiro256pp g(seed);
    for (auto& x : pre.pi) x = g.normal();
    for (auto& x : pre.mu) x = 0.5 * g.normal();
    for (auto& x : pre.sigma) x = g.normal();
    for (auto& x : pre.lambda) x = 0.3 * g.normal();
    return pre;
}

entropy::SymbolGrid random_grid(int q, int u, int v, uint64_t seed) {
    auto grid = entropy::SymbolGrid::zeros(q, u, v);
    rng::Xoshiro256pp g(seed);
    for (auto& s : grid.sym) s = static_cast<int32_t>(g.next() % static_cast<uint64_t>(q));
    return grid;
}

}  // namespace

TEST_CASE("activation yields simplex weights and floored scales") {
    auto pre = random_preact(4, 3, 5, 21);
    auto par = entropy::activate(pre);
    for (int c = 0; c < 3; ++c)
        for (int uu = 0; uu < 3; ++uu)
            for (int vv = 0; vv < 5; ++vv) {
                double sum = 0.0;
                for (int kk = 0; kk < 4; ++kk) sum += par.pi[par.cuvk(c, uu, vv, kk)];
                CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
            }
    for (double s : par.sigma) CHECK(s >= entropy::kSigmaMin);
    CHECK(par.mu == pre.mu);
    CHECK(par.lambda == pre.lambda);
}

TEST_CASE("conditioned means add cross-channel taps in the documented pattern") {
    auto pre = random_preact(2, 2, 2, 23);
    auto par = entropy::activate(pre);
    auto grid = random_grid(5, 2, 2, 25);
    auto m = entropy::conditioned_means(par, grid);
    for (int uu = 0; uu < 2; ++uu)
        for (int vv = 0; vv < 2; ++vv) {
            const double t0 = entropy::centered_value(grid.at(0, uu, vv), 5);
            const double t1 = entropy::centered_value(grid.at(1, uu, vv), 5);
            for (int kk = 0; kk < 2; ++kk) {
                CHECK(m[par.cuvk(0, uu, vv, kk)] == par.mu[par.cuvk(0, uu, vv, kk)]);
                CHECK(m[par.cuvk(1, uu, vv, kk)] ==
                      doctest::Approx(par.mu[par.cuvk(1, uu, vv, kk)] +
                                      par.lambda[par.juvk(0, uu, vv, kk)] * t0));
                CHECK(m[par.cuvk(2, uu, vv, kk)] ==
                      doctest::Approx(par.mu[par.cuvk(2, uu, vv, kk)] +
                                      par.lambda[par.juvk(1, uu, vv, kk)] * t0 +
                                      par.lambda[par.juvk(2, uu, vv, kk)] * t1));
            }
        }
}

TEST_CASE("site pmf sums to 1 and agrees with the scalar mixture pmf") {
    auto par = entropy::activate(random_preact(3, 2, 3, 29));
    auto grid = random_grid(7, 2, 3, 31);
    for (int c = 0; c < 3; ++c)
        for (int uu = 0; uu < 2; ++uu)
            for (int vv = 0; vv < 3; ++vv) {
                auto pmf = entropy::site_pmf(par, grid, c, uu, vv);
                REQUIRE(pmf.size() == 7);
                double sum = 0.0;
                for (double p : pmf) sum += p;
                CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
                CHECK(pmf[static_cast<size_t>(grid.at(c, uu, vv))] ==
                      doctest::Approx(entropy::mixture_pmf(par, grid, c, uu, vv)).epsilon(1e-12));
            }
}

TEST_CASE("joint nll matches an independent single-component formula") {
    // K=1, lambda=0: the mixture collapses to one discretized logistic per site
    auto pre = entropy::MixturePreact::zeros(1, 2, 2);
    rng::Xoshiro256pp g(37);
    for (auto& x : pre.mu) x = 0.4 * g.normal();
    for (auto& x : pre.sigma) x = g.normal();
    auto par = entropy::activate(pre);
    auto grid = random_grid(7, 2, 2, 41);
    double want = 0.0;
    for (int c = 0; c < 3; ++c)
        for (int uu = 0; uu < 2; ++uu)
            for (int vv = 0; vv < 2; ++vv) {
                const size_t i = par.cuvk(c, uu, vv, 0);
                double p = entropy::discretized_logistic_pmf(grid.at(c, uu, vv), par.mu[i],
                                                             par.sigma[i], 7);
                want -= std::log(std::max(p, entropy::kPmfFloor));
            }
    CHECK(entropy::joint_nll(par, grid) == doctest::Approx(want).epsilon(1e-12));
    CHECK(entropy::joint_nll_bits(par, grid) ==
          doctest::Approx(want / std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("analytic nll gradients match central differences") {
    const int k = 3, u = 2, v = 2, q = 5;
    auto pre = random_preact(k, u, v, 43);
    auto grid = random_grid(q, u, v, 47);
    auto grads = entropy::nll_gradients(pre, grid);
    auto check_block = [&](std::vector<double>& param, const std::vector<double>& grad) {
        rng::Xoshiro256pp pick(51);
        for (int rep = 0; rep < 8; ++rep) {
            const size_t i = pick.next() % param.size();
            const double h = 1e-5 * std::max(1.0, std::fabs(param[i]));
            const double save = param[i];
            param[i] = save + h;
            const double up = entropy::joint_nll(entropy::activate(pre), grid);
            param[i] = save - h;
            const double dn = entropy::joint_nll(entropy::activate(pre), grid);
            param[i] = save;
            const double numeric = (up - dn) / (2.0 * h);
            CHECK(grad[i] == doctest::Approx(numeric).epsilon(1e-4));
        }
    };
    check_block(pre.pi, grads.pi);
    check_block(pre.mu, grads.mu);
    check_block(pre.sigma, grads.sigma);
    check_block(pre.lambda, grads.lambda);
}

TEST_CASE("block features summarize constant blocks exactly") {
    auto img = image::ImageTensor::zeros(16, 16);
    for (auto& x : img.data) x = 0.25;
    auto f = entropy::block_features(img, 8);
    REQUIRE(f.size() == 3 * 2 * 2 * entropy::ResidualEstimator::kFeatures);
    for (size_t i = 0; i < f.size(); i += entropy::ResidualEstimator::kFeatures) {
        CHECK(f[i] == doctest::Approx(0.25));      // mean
        CHECK(f[i + 1] == doctest::Approx(0.0));   // stddev
        CHECK(f[i + 2] == doctest::Approx(0.0));   // horizontal gradient energy
        CHECK(f[i + 3] == doctest::Approx(0.0));   // vertical gradient energy
    }
    // partial edge blocks still produce one feature row per grid cell
    auto odd = corpus::synth_image(5, 0, 12, 20);
    auto g = entropy::block_features(odd, 8);
    CHECK(g.size() == 3u * 2u * 3u * entropy::ResidualEstimator::kFeatures);
}

TEST_CASE("zero-weight estimator emits identical preactivations at every site") {
    auto est = entropy::ResidualEstimator::init(8, 7, 5);
    auto cond = corpus::synth_image(7, 0, 32, 32);
    auto pre = entropy::estimator_forward_preact(est, cond);
    CHECK(pre.k == 5);
    CHECK(pre.u == 4);
    CHECK(pre.v == 4);
    for (size_t i = 1; i < pre.mu.size(); ++i) CHECK(pre.mu[i] == pre.mu[0]);
    auto par = entropy::estimator_forward(est, cond);
    for (double s : par.sigma) CHECK(s >= entropy::kSigmaMin);
}

TEST_CASE("estimator weights survive a save/load round trip bit for bit") {
    std::filesystem::create_directories("out/test_tmp");
    auto est = entropy::ResidualEstimator::init(4, 5, 3);
    rng::Xoshiro256pp g(53);
    for (auto& w : est.w_pi) w = g.normal();
    for (auto& w : est.w_mu) w = g.normal();
    for (auto& w : est.w_sigma) w = g.normal();
    for (auto& w : est.w_lambda) w = g.normal();
    const std::string path = "out/test_tmp/est.bin";
    entropy::save_estimator(est, path);
    auto back = entropy::load_estimator(path, 4);
    CHECK(back.block == 4);
    CHECK(back.q == est.q);
    CHECK(back.k == est.k);
    CHECK(back.w_pi == est.w_pi);
    CHECK(back.w_mu == est.w_mu);
    CHECK(back.w_sigma == est.w_sigma);
    CHECK(back.w_lambda == est.w_lambda);
    CHECK_THROWS(entropy::load_estimator("out/test_tmp/missing.bin", 4));
}
