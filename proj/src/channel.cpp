#include "mhpsc/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "mhpsc/kernels.hpp"
#include "mhpsc/rng.hpp"

namespace mhpsc::channel {

namespace {
constexpr uint64_t kGainStream = 0x67;
constexpr uint64_t kNoiseStream = 0x6E;

const double* as_reals(const SymbolVector& v) {
    return reinterpret_cast<const double*>(v.data());
}
double* as_reals(SymbolVector& v) { return reinterpret_cast<double*>(v.data()); }
}  // namespace

SymbolVector pack_complex(const std::vector<double>& reals) {
    if (reals.size() % 2 != 0) throw std::runtime_error("pack_complex: odd length");
    SymbolVector out(reals.size() / 2);
    for (size_t i = 0; i < out.size(); ++i) out[i] = {reals[2 * i], reals[2 * i + 1]};
    return out;
}

std::vector<double> unpack_complex(const SymbolVector& symbols) {
    std::vector<double> out(symbols.size() * 2);
    for (size_t i = 0; i < symbols.size(); ++i) {
        out[2 * i] = symbols[i].real();
        out[2 * i + 1] = symbols[i].imag();
    }
    return out;
}

std::pair<SymbolVector, double> power_normalize(const SymbolVector& x) {
    if (x.empty()) throw std::runtime_error("power_normalize: empty input");
    const double power =
        kernels::active_kernels().sum_sq(as_reals(x), 2 * x.size()) / static_cast<double>(x.size());
    if (power <= 0.0) throw std::runtime_error("power_normalize: zero-power input");
    const double scale = std::sqrt(power);
    SymbolVector out(x.size());
    kernels::active_kernels().scale(as_reals(x), 1.0 / scale, reinterpret_cast<double*>(out.data()),
                                    2 * x.size());
    return {std::move(out), scale};
}

double snr_to_noise_variance(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

ChannelRealization ChannelRealization::rayleigh(size_t n, double snr_db, uint64_t seed,
                                                bool noiseless) {
    ChannelRealization ch;
    ch.seed = seed;
    ch.noiseless = noiseless;
    ch.noise_variance = snr_to_noise_variance(snr_db);
    ch.gains.resize(n);
    rng::Xoshiro256pp g(rng::derive_stream(seed, kGainStream));
    for (auto& h : ch.gains) h = g.cnormal_unit();
    return ch;
}

ChannelRealization ChannelRealization::awgn(size_t n, double snr_db, uint64_t seed,
                                            bool noiseless) {
    ChannelRealization ch;
    ch.seed = seed;
    ch.noiseless = noiseless;
    ch.noise_variance = snr_to_noise_variance(snr_db);
    ch.gains.assign(n, {1.0, 0.0});
    return ch;
}

ChannelRealization emulated_channel(const ChannelRealization& ch) { return ch; }

SymbolVector rayleigh_transmit(const SymbolVector& x, const ChannelRealization& ch) {
    if (x.size() != ch.gains.size())
        throw std::runtime_error("rayleigh_transmit: length mismatch with realization");
    SymbolVector out(x.size());
    if (ch.noiseless) {
        kernels::active_kernels().cmul_add(as_reals(ch.gains), as_reals(x), nullptr,
                                           as_reals(out), x.size());
        return out;
    }
    std::vector<double> noise(2 * x.size());
    rng::Xoshiro256pp g(rng::derive_stream(ch.seed, kNoiseStream));
    const double s = std::sqrt(ch.noise_variance / 2.0);
    for (size_t i = 0; i < x.size(); ++i) {
        double z0, z1;
        g.normal_pair(z0, z1);
        noise[2 * i] = s * z0;
        noise[2 * i + 1] = s * z1;
    }
    kernels::active_kernels().cmul_add(as_reals(ch.gains), as_reals(x), noise.data(),
                                       as_reals(out), x.size());
    return out;
}

SymbolVector mmse_equalize(const SymbolVector& z, const ChannelRealization& ch) {
    if (z.size() != ch.gains.size())
        throw std::runtime_error("mmse_equalize: length mismatch with realization");
    SymbolVector out(z.size());
    const double sigma2 = ch.noiseless ? 0.0 : ch.noise_variance;
    kernels::active_kernels().mmse(as_reals(ch.gains), as_reals(z), sigma2, as_reals(out),
                                   z.size());
    return out;
}

void mmse_effective(const ChannelRealization& ch, const SymbolVector& equalized,
                    SymbolVector& observation, std::vector<double>& noise_var) {
    if (equalized.size() != ch.gains.size())
        throw std::runtime_error("mmse_effective: length mismatch with realization");
    const double sigma2 = ch.noiseless ? 0.0 : ch.noise_variance;
    observation.resize(equalized.size());
    noise_var.resize(equalized.size());
    for (size_t i = 0; i < equalized.size(); ++i) {
        const double h2 = std::norm(ch.gains[i]);
        const double g = h2 / (h2 + sigma2);
        observation[i] = equalized[i] / g;
        noise_var[i] = sigma2 / h2;
    }
}

}  // namespace mhpsc::channel
