#pragma once

#include <cstdint>
#include <span>

#include <zlib.h>

namespace clir::detail {

inline std::uint32_t crc32_of(std::span<const unsigned char> bytes)
{
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in chunks.
    constexpr std::size_t chunk = 1u << 30;
    for (std::size_t off = 0; off < bytes.size(); off += chunk) {
        const auto len = static_cast<uInt>(std::min(chunk, bytes.size() - off));
        crc = ::crc32(crc, bytes.data() + off, len);
    }
    return static_cast<std::uint32_t>(crc);
}

} // namespace clir::detail
