#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace mhpsc::modem {

// Digital-link frame: 10-byte big-endian header (magic u16, payload bit
// length u32, CRC-32 of the payload bytes u32) followed by the payload.
constexpr uint16_t kFrameMagic = 0x4D48;
constexpr size_t kFrameHeaderBytes = 10;
constexpr size_t kFrameHeaderBits = 8 * kFrameHeaderBytes;

std::vector<uint8_t> frame_build(const std::vector<uint8_t>& payload, uint64_t payload_bits);

struct ParsedFrame {
    std::vector<uint8_t> payload;
    uint64_t payload_bits = 0;
};

// Returns nullopt on bad magic, an implausible declared length, or CRC
// mismatch. `bytes` may carry trailing padding beyond the payload.
std::optional<ParsedFrame> frame_parse(const std::vector<uint8_t>& bytes);

// Bit <-> byte helpers (MSB-first within each byte).
std::vector<uint8_t> bytes_to_bits(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> bits_to_bytes(const std::vector<uint8_t>& bits);

}  // namespace mhpsc::modem
