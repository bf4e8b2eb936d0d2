#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace migsim {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

std::string to_hex(ByteView data);

Bytes concat(ByteView a, ByteView b);

/// Substring search over raw bytes (used to scan wire captures for leaked key material).
bool contains_subsequence(ByteView haystack, ByteView needle);

inline Bytes to_bytes(const std::string& s) {
    return Bytes(s.begin(), s.end());
}

inline ByteView view(const Bytes& b) { return ByteView(b.data(), b.size()); }

}  // namespace migsim
