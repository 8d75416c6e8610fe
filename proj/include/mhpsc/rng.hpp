#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace mhpsc::rng {

// splitmix64: used for seed expansion and stream derivation.
struct SplitMix64 {
    uint64_t state;

    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

// Derives an independent stream seed from (seed, stream_id). All randomness in
// the simulator flows through explicit 64-bit seeds so reruns are byte-identical.
inline uint64_t derive_stream(uint64_t seed, uint64_t stream_id) {
    SplitMix64 sm{seed ^ (0xD1342543DE82EF95ULL * (stream_id + 1))};
    uint64_t a = sm.next();
    uint64_t b = sm.next();
    return a ^ (b >> 1);
}

// xoshiro256++ (Blackman/Vigna). Implemented here instead of <random> engines
// because the distributions below must produce identical streams on every
// platform; std::normal_distribution's algorithm is unspecified.
class Xoshiro256pp {
  public:
    explicit Xoshiro256pp(uint64_t seed) {
        SplitMix64 sm{seed};
        for (auto& w : s_) w = sm.next();
    }

    uint64_t next() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0,1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in (0,1]; safe as a log() argument.
    double uniform01_open_low() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

    // Box-Muller pair of independent N(0,1) draws. Always consumes exactly two
    // uniforms, so the stream position is call-count deterministic.
    void normal_pair(double& z0, double& z1) {
        const double u1 = uniform01_open_low();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        z0 = r * std::cos(a);
        z1 = r * std::sin(a);
    }

    double normal() {
        double z0, z1;
        normal_pair(z0, z1);
        return z0;
    }

    // Circularly symmetric complex Gaussian with E|z|^2 = 1.
    std::complex<double> cnormal_unit() {
        double z0, z1;
        normal_pair(z0, z1);
        return {z0 * 0x1.6a09e667f3bcdp-1, z1 * 0x1.6a09e667f3bcdp-1};  // 1/sqrt(2)
    }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

}  // namespace mhpsc::rng
