#include "mhpsc/qam.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mhpsc::modem {

namespace {

constexpr double kLlrCap = 250.0;

uint32_t gray_decode(uint32_t g) {
    uint32_t b = 0;
    for (; g; g >>= 1) b ^= g;
    return b;
}

// Per-axis amplitude (unnormalized) for an axis label of `axis_bits` bits.
double axis_level(uint32_t label, int axis_bits) {
    const int m = 1 << axis_bits;
    return static_cast<double>(m - 1) - 2.0 * static_cast<double>(gray_decode(label));
}

}  // namespace

QamConstellation QamConstellation::make(int order) {
    if (order != 4 && order != 16 && order != 64)
        throw std::runtime_error("qam: unsupported order " + std::to_string(order));
    QamConstellation c;
    c.order = order;
    c.bits_per_symbol = order == 4 ? 2 : order == 16 ? 4 : 6;
    const int ab = c.bits_per_symbol / 2;
    const int m = 1 << ab;
    // E{|x|^2} over the unnormalized grid is 2(m^2-1)/3.
    const double norm = 1.0 / std::sqrt(2.0 * (m * m - 1) / 3.0);
    c.points.resize(static_cast<size_t>(order));
    for (int label = 0; label < order; ++label) {
        const uint32_t ibits = static_cast<uint32_t>(label) >> ab;
        const uint32_t qbits = static_cast<uint32_t>(label) & (m - 1);
        c.points[label] = {axis_level(ibits, ab) * norm, axis_level(qbits, ab) * norm};
    }
    return c;
}

channel::SymbolVector qam_modulate(const std::vector<uint8_t>& bits, const QamConstellation& c) {
    const int b = c.bits_per_symbol;
    const size_t nsym = (bits.size() + b - 1) / b;
    channel::SymbolVector out(nsym);
    for (size_t s = 0; s < nsym; ++s) {
        uint32_t label = 0;
        for (int j = 0; j < b; ++j) {
            const size_t idx = s * b + j;
            label = (label << 1) | (idx < bits.size() ? bits[idx] : 0);
        }
        out[s] = c.points[label];
    }
    return out;
}

std::vector<double> qam_demodulate_llr(const channel::SymbolVector& obs,
                                       const std::vector<double>& noise_var,
                                       const QamConstellation& c) {
    if (obs.size() != noise_var.size())
        throw std::runtime_error("qam_demodulate_llr: noise_var length mismatch");
    const int b = c.bits_per_symbol;
    const int ab = b / 2;
    const int m = 1 << ab;
    // Axis levels and their labels; for square Gray QAM the 2D max-log LLR
    // separates exactly into per-axis 1D searches.
    const double norm = 1.0 / std::sqrt(2.0 * (m * m - 1) / 3.0);
    std::vector<double> levels(m);
    for (uint32_t g = 0; g < static_cast<uint32_t>(m); ++g) levels[g] = axis_level(g, ab) * norm;
    std::vector<double> llr(obs.size() * b);

    for (size_t s = 0; s < obs.size(); ++s) {
        const double nv = noise_var[s] > 0.0 ? noise_var[s] : std::numeric_limits<double>::min();
        for (int axis = 0; axis < 2; ++axis) {
            const double y = axis == 0 ? obs[s].real() : obs[s].imag();
            for (int t = 0; t < ab; ++t) {
                double best0 = std::numeric_limits<double>::infinity();
                double best1 = best0;
                for (uint32_t g = 0; g < static_cast<uint32_t>(m); ++g) {
                    const double d = y - levels[g];
                    const double dd = d * d;
                    if ((g >> (ab - 1 - t)) & 1) {
                        if (dd < best1) best1 = dd;
                    } else {
                        if (dd < best0) best0 = dd;
                    }
                }
                double v = (best1 - best0) / nv;
                if (v > kLlrCap) v = kLlrCap;
                if (v < -kLlrCap) v = -kLlrCap;
                llr[s * b + axis * ab + t] = v;
            }
        }
    }
    return llr;
}

}  // namespace mhpsc::modem
