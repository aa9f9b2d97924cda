#pragma once

// Thin wrappers over libcrypto. Nothing in here is project policy; the
// modules decide what gets hashed, signed and encrypted.

#include <array>
#include <cstdint>
#include <string_view>

#include "fleetguard/bytes.hpp"

namespace fleetguard::crypto {

inline constexpr std::size_t kEd25519SeedSize = 32;
inline constexpr std::size_t kEd25519PublicSize = 32;
inline constexpr std::size_t kEd25519SignatureSize = 64;

using Ed25519Seed = std::array<std::uint8_t, kEd25519SeedSize>;
using Ed25519Public = std::array<std::uint8_t, kEd25519PublicSize>;

Digest sha256(ByteView data);
Digest sha256(std::string_view data);

/// Compares every byte regardless of where the first difference is.
/// Unequal lengths return false without inspecting content.
bool constant_time_equal(ByteView a, ByteView b);

Ed25519Public ed25519_public_key(const Ed25519Seed& seed);
Bytes ed25519_sign(const Ed25519Seed& seed, ByteView message);
/// Never throws; malformed keys or signatures verify as false.
bool ed25519_verify(ByteView public_key, ByteView message, ByteView signature);

/// Deterministic byte generator: block i = SHA-256(seed || be64(i)).
/// Seeded from a 64-bit value or an arbitrary label so that every
/// consumer gets its own reproducible stream.
class Drbg
{
public:
    explicit Drbg(std::uint64_t seed);
    Drbg(std::uint64_t seed, std::string_view label);
    explicit Drbg(const Digest& state, std::uint64_t counter = 0) : state_(state), counter_(counter) {}

    void fill(std::span<std::uint8_t> out);
    Bytes bytes(std::size_t n);
    std::uint64_t next_u64();

    const Digest& state() const { return state_; }
    std::uint64_t counter() const { return counter_; }

private:
    Digest state_{};
    std::uint64_t counter_ = 0;
    Digest block_{};
    std::size_t block_used_ = sizeof(Digest);
};

inline constexpr std::size_t kAeadKeySize = 32;
inline constexpr std::size_t kAeadNonceSize = 12;
inline constexpr std::size_t kAeadTagSize = 16;

using AeadKey = std::array<std::uint8_t, kAeadKeySize>;

AeadKey derive_key(std::string_view passphrase, ByteView salt, int iterations);

/// AES-256-GCM. Output is ciphertext || tag.
Bytes aead_seal(const AeadKey& key, ByteView nonce, ByteView plaintext, ByteView aad);
/// Throws Error(BadPassphrase) when authentication fails.
Bytes aead_open(const AeadKey& key, ByteView nonce, ByteView sealed, ByteView aad);

}  // namespace fleetguard::crypto
