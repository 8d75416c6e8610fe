#pragma once

#include <cstddef>
#include <cstdint>

namespace mhpsc::modem {

// Reflected CRC-32 (poly 0xEDB88320, init 0xFFFFFFFF, final xor 0xFFFFFFFF).
// crc32("123456789") == 0xCBF43926.
uint32_t crc32(const uint8_t* data, size_t len);

}  // namespace mhpsc::modem
