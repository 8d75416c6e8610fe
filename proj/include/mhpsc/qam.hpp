#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "mhpsc/channel.hpp"

namespace mhpsc::modem {

// Square QAM (orders 4, 16, 64) with per-axis Gray labeling and unit average
// energy. A symbol's b bits split as: first b/2 bits select the I level, last
// b/2 the Q level (MSB first). Per axis, Gray code g maps to level
// (m-1) - 2*gray_decode(g), so the all-zero label is the most positive corner
// (4QAM "00" -> (1+1i)/sqrt(2)).
struct QamConstellation {
    int order = 0;
    int bits_per_symbol = 0;
    std::vector<std::complex<double>> points;  // indexed by the b-bit label

    static QamConstellation make(int order);
};

// Pads the trailing partial symbol with zero bits.
channel::SymbolVector qam_modulate(const std::vector<uint8_t>& bits, const QamConstellation& c);

// Max-log LLRs, positive = bit 0 more likely. noise_var is per symbol
// (post-equalization effective variance); LLR magnitudes are capped at 250 so
// noiseless links stay finite. Returns bits_per_symbol LLRs per symbol.
std::vector<double> qam_demodulate_llr(const channel::SymbolVector& obs,
                                       const std::vector<double>& noise_var,
                                       const QamConstellation& c);

}  // namespace mhpsc::modem
