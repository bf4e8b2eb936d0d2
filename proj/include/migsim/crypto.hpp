#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "migsim/bytes.hpp"
#include "migsim/rng.hpp"

namespace migsim::crypto {

constexpr std::size_t kKeySize = 32;
constexpr std::size_t kAeadNonceSize = 12;
constexpr std::size_t kTagSize = 16;
constexpr std::size_t kDigestSize = 32;

/// AEAD output. Opening succeeds only with the sealing key, the same
/// associated data, and every field unmodified.
struct SealedBox {
    Bytes nonce;
    Bytes ciphertext;
    Bytes tag;

    bool operator==(const SealedBox&) const = default;
};

struct Digest {
    std::array<std::uint8_t, kDigestSize> bytes{};

    bool operator==(const Digest&) const = default;
    Bytes to_vec() const { return Bytes(bytes.begin(), bytes.end()); }
};

struct KdfParams {
    std::uint32_t log2_cost = 12;  // scrypt N = 1 << log2_cost
    std::uint32_t block_mix = 8;   // scrypt r
    std::uint32_t parallel = 1;    // scrypt p
};

class EmptyPasswordError : public std::invalid_argument {
public:
    EmptyPasswordError() : std::invalid_argument("derive_key: empty password") {}
};

/// AES-256-GCM. Nonce comes from the caller's seeded generator so sealed
/// bytes are reproducible per seed.
SealedBox seal(ByteView key, ByteView plaintext, ByteView aad, DetRng& rng);

/// Returns the plaintext, or nullopt on any authentication failure (wrong
/// key, tampered field, wrong aad). Never returns partial plaintext.
std::optional<Bytes> open(ByteView key, const SealedBox& box, ByteView aad);

/// SHA-256 of data || nonce.
Digest hash_digest(ByteView data, ByteView nonce);

/// scrypt(password, salt) -> 32-byte key. Throws EmptyPasswordError.
Bytes derive_key(ByteView password, ByteView salt, const KdfParams& params = {});

}  // namespace migsim::crypto
