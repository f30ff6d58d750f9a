#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace gsdnet {

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

inline std::string content_hash(std::string_view bytes) { return hex64(fnv1a64(bytes)); }

// Hash of a file's raw bytes. Throws on I/O failure.
std::string file_hash(const std::string& path);

}  // namespace gsdnet
