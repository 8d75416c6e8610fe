#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

namespace mhpsc::channel {

using SymbolVector = std::vector<std::complex<double>>;

// Consecutive real pairs become (re, im) of one complex symbol; length must be even.
SymbolVector pack_complex(const std::vector<double>& reals);
std::vector<double> unpack_complex(const SymbolVector& symbols);

// Scales to unit average symbol power; returns (normalized, scale) where
// multiplying by scale inverts the normalization.
std::pair<SymbolVector, double> power_normalize(const SymbolVector& x);

// sigma^2 = 10^(-snr_db/10) (unit signal power).
double snr_to_noise_variance(double snr_db);

// One channel realization: per-symbol i.i.d. CN(0,1) gains plus a noise seed.
// Transmission is a pure function of (input, realization), so a realization
// can be replayed exactly; emulated_channel relies on this.
struct ChannelRealization {
    SymbolVector gains;
    double noise_variance = 0.0;
    uint64_t seed = 0;
    bool noiseless = false;

    // Rayleigh fading: gains ~ CN(0,1).
    static ChannelRealization rayleigh(size_t n, double snr_db, uint64_t seed,
                                       bool noiseless = false);
    // AWGN reference: all gains fixed at 1.
    static ChannelRealization awgn(size_t n, double snr_db, uint64_t seed, bool noiseless = false);
};

// Transmitter-side emulation: returns a realization that replays identically
// (same gains, same noise stream), so an emulated pass over it reproduces the
// receiver's observation bit for bit.
ChannelRealization emulated_channel(const ChannelRealization& ch);

// z = h .* x + n, n ~ CN(0, sigma^2) drawn deterministically from ch.seed.
SymbolVector rayleigh_transmit(const SymbolVector& x, const ChannelRealization& ch);

// y = conj(h) .* z / (|h|^2 + sigma^2), per symbol (perfect CSI).
SymbolVector mmse_equalize(const SymbolVector& z, const ChannelRealization& ch);

// Unbiases the MMSE output and reports the per-symbol effective noise
// variance sigma^2/|h|^2, for soft demodulation:
//   y_i / g_i = x_i + n'_i,  g_i = |h|^2/(|h|^2+sigma^2),  var(n') = sigma^2/|h|^2.
void mmse_effective(const ChannelRealization& ch, const SymbolVector& equalized,
                    SymbolVector& observation, std::vector<double>& noise_var);

}  // namespace mhpsc::channel
