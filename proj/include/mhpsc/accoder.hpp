#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace mhpsc::accoder {

// Integer symbol frequencies with cumulative total exactly 2^16 and every
// symbol frequency >= 1. Encoder and decoder must see bit-identical tables;
// the integer interface makes that agreement exact by construction.
class FrequencyTable {
  public:
    static constexpr uint32_t kTotal = 1u << 16;

    explicit FrequencyTable(const std::vector<uint32_t>& counts);

    uint32_t size() const { return static_cast<uint32_t>(cum_.size() - 1); }
    uint32_t freq(uint32_t s) const { return cum_[s + 1] - cum_[s]; }
    uint32_t cum_lo(uint32_t s) const { return cum_[s]; }
    uint32_t cum_hi(uint32_t s) const { return cum_[s + 1]; }
    // Largest s with cum_lo(s) <= dv; dv must be < kTotal.
    uint32_t find(uint32_t dv) const;

  private:
    std::vector<uint32_t> cum_;  // size Q+1, cum_[0] = 0, cum_[Q] = 2^16
};

// Largest-remainder apportionment of a nonnegative pmf (sum within 1e-6 of 1)
// to integer counts totalling 2^16, every symbol >= 1, ties broken toward the
// lower symbol index.
FrequencyTable quantize_pmf(const std::vector<double>& pmf);

struct Bitstream {
    std::vector<uint8_t> bytes;
    uint64_t bit_length = 0;  // always <= 8 * bytes.size()
};

// 64-bit range coder, 32-bit big-endian renormalization words, carries
// propagated into the emitted buffer. Measured length minus the cross-entropy
// bound of the table sequence lies in [0, 64) bits.
class ArithmeticEncoder {
  public:
    void encode(const FrequencyTable& table, uint32_t symbol);
    Bitstream finish();  // flushes exactly one 32-bit word; encoder is spent

  private:
    void emit_renorm();
    std::vector<uint8_t> out_;
    uint64_t low_ = 0;
    uint64_t range_ = ~0ull;
};

class ArithmeticDecoder {
  public:
    explicit ArithmeticDecoder(const Bitstream& bits);
    // Throws a truncation error if the stream is exhausted (more than one
    // phantom zero word consumed past the end).
    uint32_t decode(const FrequencyTable& table);

  private:
    uint32_t next_word();
    const std::vector<uint8_t>* bytes_;
    size_t pos_ = 0;
    size_t phantom_words_ = 0;
    uint64_t low_ = 0;
    uint64_t range_ = ~0ull;
    uint64_t code_ = 0;
};

// Table source for symbol t; called with the symbols preceding t so
// autoregressive models can condition on them (identical on both sides).
using PmfProvider = std::function<FrequencyTable(size_t t, const std::vector<uint32_t>& prefix)>;

Bitstream ac_encode(const std::vector<uint32_t>& symbols, const PmfProvider& provider);
std::vector<uint32_t> ac_decode(const Bitstream& bits, const PmfProvider& provider,
                                size_t n_symbols);

// Sum over t of -log2(freq_t(s_t) / 2^16); the measured stream length is
// within [bound - 1, bound + 64] bits.
double codelength_bound(const std::vector<FrequencyTable>& tables,
                        const std::vector<uint32_t>& symbols);

}  // namespace mhpsc::accoder
