#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace nuteval {

// 64-bit FNV-1a. Used for content identifiers that must be stable across
// platforms and builds (std::hash is not).
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// 16 lowercase hex digits.
std::string to_hex(std::uint64_t value);

inline std::string content_id(std::string_view data) { return to_hex(fnv1a64(data)); }

}  // namespace nuteval
