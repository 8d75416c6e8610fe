#include "mhpsc/framing.hpp"

#include <stdexcept>

#include "mhpsc/crc32.hpp"

namespace mhpsc::modem {

std::vector<uint8_t> frame_build(const std::vector<uint8_t>& payload, uint64_t payload_bits) {
    if ((payload_bits + 7) / 8 != payload.size())
        throw std::runtime_error("frame_build: payload_bits inconsistent with payload size");
    if (payload_bits > 0xFFFFFFFFull) throw std::runtime_error("frame_build: payload too large");
    const uint32_t crc = crc32(payload.data(), payload.size());
    std::vector<uint8_t> out;
    out.reserve(kFrameHeaderBytes + payload.size());
    out.push_back(static_cast<uint8_t>(kFrameMagic >> 8));
    out.push_back(static_cast<uint8_t>(kFrameMagic & 0xFF));
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(payload_bits >> s));
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(crc >> s));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

std::optional<ParsedFrame> frame_parse(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < kFrameHeaderBytes) return std::nullopt;
    const uint16_t magic = static_cast<uint16_t>((bytes[0] << 8) | bytes[1]);
    if (magic != kFrameMagic) return std::nullopt;
    uint32_t bits = 0, crc = 0;
    for (int i = 0; i < 4; ++i) bits = (bits << 8) | bytes[2 + i];
    for (int i = 0; i < 4; ++i) crc = (crc << 8) | bytes[6 + i];
    const uint64_t need = (static_cast<uint64_t>(bits) + 7) / 8;
    if (need > bytes.size() - kFrameHeaderBytes) return std::nullopt;
    ParsedFrame f;
    f.payload_bits = bits;
    f.payload.assign(bytes.begin() + kFrameHeaderBytes,
                     bytes.begin() + kFrameHeaderBytes + static_cast<size_t>(need));
    if (crc32(f.payload.data(), f.payload.size()) != crc) return std::nullopt;
    return f;
}

std::vector<uint8_t> bytes_to_bits(const std::vector<uint8_t>& bytes) {
    std::vector<uint8_t> bits;
    bits.reserve(bytes.size() * 8);
    for (uint8_t b : bytes)
        for (int s = 7; s >= 0; --s) bits.push_back((b >> s) & 1);
    return bits;
}

std::vector<uint8_t> bits_to_bytes(const std::vector<uint8_t>& bits) {
    std::vector<uint8_t> bytes((bits.size() + 7) / 8, 0);
    for (size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) bytes[i / 8] |= static_cast<uint8_t>(1u << (7 - i % 8));
    return bytes;
}

}  // namespace mhpsc::modem
