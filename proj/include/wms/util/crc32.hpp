#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace wms {

std::uint32_t crc32(std::string_view bytes);

/// Eight lowercase hex digits.
std::string crc32_hex(std::string_view bytes);

} // namespace wms
