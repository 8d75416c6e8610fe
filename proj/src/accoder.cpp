#include "mhpsc/accoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mhpsc::accoder {

namespace {
constexpr uint64_t kRenormBound = 1ull << 32;
}

FrequencyTable::FrequencyTable(const std::vector<uint32_t>& counts) {
    if (counts.empty() || counts.size() > kTotal)
        throw std::runtime_error("frequency table: alphabet size must be in [1, 65536]");
    cum_.resize(counts.size() + 1);
    cum_[0] = 0;
    for (size_t s = 0; s < counts.size(); ++s) {
        if (counts[s] == 0)
            throw std::runtime_error("frequency table: zero frequency at symbol " +
                                     std::to_string(s));
        cum_[s + 1] = cum_[s] + counts[s];
    }
    if (cum_.back() != kTotal)
        throw std::runtime_error("frequency table: counts must total 65536, got " +
                                 std::to_string(cum_.back()));
}

uint32_t FrequencyTable::find(uint32_t dv) const {
    auto it = std::upper_bound(cum_.begin(), cum_.end(), dv);
    return static_cast<uint32_t>(it - cum_.begin() - 1);
}

FrequencyTable quantize_pmf(const std::vector<double>& pmf) {
    const size_t q = pmf.size();
    if (q == 0 || q > FrequencyTable::kTotal)
        throw std::runtime_error("quantize_pmf: alphabet size must be in [1, 65536]");
    double sum = 0.0;
    for (double p : pmf) {
        if (p < 0.0) throw std::runtime_error("quantize_pmf: negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw std::runtime_error("quantize_pmf: pmf sums to " + std::to_string(sum));

    std::vector<uint32_t> counts(q);
    std::vector<double> remainder(q);
    uint64_t assigned = 0;
    for (size_t s = 0; s < q; ++s) {
        const double target = pmf[s] / sum * FrequencyTable::kTotal;
        counts[s] = static_cast<uint32_t>(target);
        remainder[s] = target - counts[s];
        assigned += counts[s];
    }
    // Hand the leftover units to the largest remainders, lower index on ties.
    std::vector<uint32_t> order(q);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](uint32_t a, uint32_t b) { return remainder[a] > remainder[b]; });
    for (size_t i = 0; assigned < FrequencyTable::kTotal; ++i, ++assigned)
        ++counts[order[i % q]];
    // Every symbol needs a nonzero slot; steal from the current maximum.
    for (size_t s = 0; s < q; ++s) {
        if (counts[s] != 0) continue;
        size_t donor = std::max_element(counts.begin(), counts.end()) - counts.begin();
        if (counts[donor] <= 1) throw std::runtime_error("quantize_pmf: cannot floor-repair");
        --counts[donor];
        counts[s] = 1;
    }
    return FrequencyTable(counts);
}

namespace {
// Adds one to the least significant emitted byte, cascading through 0xFF.
void propagate_carry(std::vector<uint8_t>& out) {
    for (size_t i = out.size(); i-- > 0;) {
        if (out[i] == 0xFF) {
            out[i] = 0;
        } else {
            ++out[i];
            return;
        }
    }
    throw std::logic_error("range coder: carry escaped the emitted prefix");
}
}  // namespace

void ArithmeticEncoder::emit_renorm() {
    out_.push_back(static_cast<uint8_t>(low_ >> 56));
    out_.push_back(static_cast<uint8_t>(low_ >> 48));
    out_.push_back(static_cast<uint8_t>(low_ >> 40));
    out_.push_back(static_cast<uint8_t>(low_ >> 32));
    low_ <<= 32;
    range_ <<= 32;
}

void ArithmeticEncoder::encode(const FrequencyTable& table, uint32_t symbol) {
    if (symbol >= table.size()) throw std::runtime_error("ac_encode: symbol out of alphabet");
    const uint64_t r = range_ >> 16;
    const uint64_t add = r * table.cum_lo(symbol);
    const uint64_t nl = low_ + add;
    if (nl < low_) propagate_carry(out_);
    low_ = nl;
    range_ = r * table.freq(symbol);
    while (range_ < kRenormBound) emit_renorm();
}

Bitstream ArithmeticEncoder::finish() {
    // One flush word: low rounded up to the next 2^32 multiple lands inside
    // [low, low + range) because range >= 2^32 here.
    uint64_t word = low_ >> 32;
    if ((low_ & 0xFFFFFFFFull) != 0) {
        ++word;
        if (word == kRenormBound) {
            propagate_carry(out_);
            word = 0;
        }
    }
    out_.push_back(static_cast<uint8_t>(word >> 24));
    out_.push_back(static_cast<uint8_t>(word >> 16));
    out_.push_back(static_cast<uint8_t>(word >> 8));
    out_.push_back(static_cast<uint8_t>(word));
    Bitstream bits;
    bits.bit_length = 8ull * out_.size();
    bits.bytes = std::move(out_);
    low_ = 0;
    range_ = 0;
    return bits;
}

ArithmeticDecoder::ArithmeticDecoder(const Bitstream& bits) : bytes_(&bits.bytes) {
    code_ = (static_cast<uint64_t>(next_word()) << 32) | next_word();
}

uint32_t ArithmeticDecoder::next_word() {
    // The decoder legitimately runs one 32-bit word ahead of the encoder's
    // emissions; a second word past the end means the stream was truncated.
    if (pos_ >= bytes_->size()) {
        if (++phantom_words_ > 1) throw std::runtime_error("arithmetic decoder: stream truncated");
        return 0;
    }
    uint32_t w = 0;
    for (int i = 0; i < 4; ++i) {
        w <<= 8;
        if (pos_ < bytes_->size()) w |= (*bytes_)[pos_];
        ++pos_;
    }
    return w;
}

uint32_t ArithmeticDecoder::decode(const FrequencyTable& table) {
    const uint64_t r = range_ >> 16;
    uint64_t dv = (code_ - low_) / r;
    if (dv > FrequencyTable::kTotal - 1) dv = FrequencyTable::kTotal - 1;
    const uint32_t symbol = table.find(static_cast<uint32_t>(dv));
    low_ += r * table.cum_lo(symbol);
    range_ = r * table.freq(symbol);
    while (range_ < kRenormBound) {
        low_ <<= 32;
        code_ = (code_ << 32) | next_word();
        range_ <<= 32;
    }
    return symbol;
}

Bitstream ac_encode(const std::vector<uint32_t>& symbols, const PmfProvider& provider) {
    ArithmeticEncoder enc;
    std::vector<uint32_t> prefix;
    prefix.reserve(symbols.size());
    for (size_t t = 0; t < symbols.size(); ++t) {
        enc.encode(provider(t, prefix), symbols[t]);
        prefix.push_back(symbols[t]);
    }
    return enc.finish();
}

std::vector<uint32_t> ac_decode(const Bitstream& bits, const PmfProvider& provider,
                                size_t n_symbols) {
    if (n_symbols == 0) return {};
    ArithmeticDecoder dec(bits);
    std::vector<uint32_t> symbols;
    symbols.reserve(n_symbols);
    for (size_t t = 0; t < n_symbols; ++t) symbols.push_back(dec.decode(provider(t, symbols)));
    return symbols;
}

double codelength_bound(const std::vector<FrequencyTable>& tables,
                        const std::vector<uint32_t>& symbols) {
    if (tables.size() != symbols.size())
        throw std::runtime_error("codelength_bound: sequence length mismatch");
    double bits = 0.0;
    for (size_t t = 0; t < symbols.size(); ++t)
        bits += 16.0 - std::log2(static_cast<double>(tables[t].freq(symbols[t])));
    return bits;
}

}  // namespace mhpsc::accoder
