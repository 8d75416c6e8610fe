#include <doctest.h>

#include <cmath>
#include <vector>

#include "mhpsc/accoder.hpp"
#include "mhpsc/rng.hpp"

using namespace mhpsc;

TEST_CASE("quantize_pmf apportions counts to 2^16 with a floor of 1") {
    auto t = accoder::quantize_pmf({1.0, 0.0});
    CHECK(t.freq(0) == 65535);
    CHECK(t.freq(1) == 1);

    auto u = accoder::quantize_pmf({0.25, 0.25, 0.25, 0.25});
    for (uint32_t s = 0; s < 4; ++s) CHECK(u.freq(s) == 16384);

    rng::Xoshiro256pp g(3);
    for (int rep = 0; rep < 50; ++rep) {
        const int q = 2 + static_cast<int>(g.next() % 60);
        std::vector<double> pmf(static_cast<size_t>(q));
        double sum = 0.0;
        for (auto& p : pmf) sum += (p = g.uniform01() + 1e-9);
        for (auto& p : pmf) p /= sum;
        auto tab = accoder::quantize_pmf(pmf);
        uint64_t total = 0;
        for (uint32_t s = 0; s < tab.size(); ++s) {
            REQUIRE(tab.freq(s) >= 1);
            total += tab.freq(s);
        }
        CHECK(total == accoder::FrequencyTable::kTotal);
    }
}

TEST_CASE("quantize_pmf rejects bad inputs") {
    CHECK_THROWS(accoder::quantize_pmf({}));
    CHECK_THROWS(accoder::quantize_pmf({0.5, -0.1, 0.6}));
    CHECK_THROWS(accoder::quantize_pmf({0.5, 0.4}));  // sums to 0.9
}

TEST_CASE("frequency table find inverts the cumulative ranges") {
    auto t = accoder::quantize_pmf({0.7, 0.2, 0.05, 0.05});
    CHECK(t.cum_lo(0) == 0);
    CHECK(t.cum_hi(3) == accoder::FrequencyTable::kTotal);
    for (uint32_t s = 0; s < t.size(); ++s) {
        CHECK(t.cum_hi(s) == t.cum_lo(s) + t.freq(s));
        CHECK(t.find(t.cum_lo(s)) == s);
        CHECK(t.find(t.cum_hi(s) - 1) == s);
    }
}

namespace {

accoder::PmfProvider fixed_provider(std::vector<double> pmf) {
    return [pmf](size_t, const std::vector<uint32_t>&) { return accoder::quantize_pmf(pmf); };
}

}  // namespace

TEST_CASE("encode/decode round-trips under a skewed fixed table") {
    auto provider = fixed_provider({0.85, 0.05, 0.05, 0.05});
    rng::Xoshiro256pp g(11);
    std::vector<uint32_t> syms(500);
    for (auto& s : syms) s = static_cast<uint32_t>(g.next() % 4);
    auto bits = accoder::ac_encode(syms, provider);
    CHECK(accoder::ac_decode(bits, provider, syms.size()) == syms);
}

TEST_CASE("encode/decode round-trips when tables depend on the prefix") {
    // table sharpens around the previous symbol: genuinely adaptive on both sides
    auto provider = [](size_t t, const std::vector<uint32_t>& prefix) {
        std::vector<double> pmf(5, 0.04);
        pmf[t == 0 ? 0 : prefix.back() % 5] = 0.84;
        return accoder::quantize_pmf(pmf);
    };
    rng::Xoshiro256pp g(13);
    std::vector<uint32_t> syms(300);
    for (auto& s : syms) s = static_cast<uint32_t>(g.next() % 5);
    auto bits = accoder::ac_encode(syms, provider);
    CHECK(accoder::ac_decode(bits, provider, syms.size()) == syms);
}

TEST_CASE("zero symbols encode to the single flush word") {
    auto provider = fixed_provider({0.5, 0.5});
    auto bits = accoder::ac_encode({}, provider);
    CHECK(bits.bytes.size() == 4);
    CHECK(accoder::ac_decode(bits, provider, 0).empty());
}

TEST_CASE("uniform-256 tables cost exactly 8 bits per symbol plus bounded slack") {
    std::vector<double> pmf(256, 1.0 / 256.0);
    auto provider = fixed_provider(pmf);
    rng::Xoshiro256pp g(17);
    std::vector<uint32_t> syms(1000);
    for (auto& s : syms) s = static_cast<uint32_t>(g.next() & 0xFF);
    std::vector<accoder::FrequencyTable> tables(syms.size(), accoder::quantize_pmf(pmf));
    const double bound = accoder::codelength_bound(tables, syms);
    CHECK(bound == doctest::Approx(8.0 * 1000).epsilon(1e-12));
    auto bits = accoder::ac_encode(syms, provider);
    const double measured = static_cast<double>(bits.bit_length);
    CHECK(measured >= bound - 1.0);
    CHECK(measured <= bound + 64.0);
}

TEST_CASE("decoding past the end of a stream reports truncation") {
    auto provider = fixed_provider({0.9, 0.1});
    std::vector<uint32_t> syms(20, 0);
    auto bits = accoder::ac_encode(syms, provider);
    CHECK_THROWS(accoder::ac_decode(bits, provider, 100000));
}
