#include "wms/util/crc32.hpp"

#include <cstdio>

#include <zlib.h>

namespace wms {

std::uint32_t crc32(std::string_view bytes)
{
    uLong c = ::crc32(0L, Z_NULL, 0);
    c = ::crc32(c, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(c);
}

std::string crc32_hex(std::string_view bytes)
{
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", crc32(bytes));
    return buf;
}

} // namespace wms
