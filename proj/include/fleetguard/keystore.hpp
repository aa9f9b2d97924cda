#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fleetguard/bytes.hpp"
#include "fleetguard/crypto.hpp"

namespace fleetguard::keystore {

inline constexpr std::string_view kEd25519 = "ed25519";

/// Handle naming a key inside one keystore.
struct KeyId {
    std::string name;

    KeyId() = default;
    /// Throws Error(InvalidConfig) on an empty name.
    explicit KeyId(std::string n);

    auto operator<=>(const KeyId&) const = default;
};

/// Public half of a keypair; this is what devices get installed as a trust anchor.
struct PublicKeyInfo {
    KeyId key_id;
    std::string algorithm{kEd25519};
    Bytes public_bytes;

    bool operator==(const PublicKeyInfo&) const = default;
};

nlohmann::ordered_json to_json(const PublicKeyInfo& info);
PublicKeyInfo public_key_from_json(const nlohmann::json& j);

/// True iff `signature` is valid for `message` under `key`. Never throws.
bool verify(const PublicKeyInfo& key, ByteView message, ByteView signature);

/// Software stand-in for a secure element. Private keys are created from the
/// store's seeded generator and never leave it: the only things that come
/// out are public keys, signatures and an encrypted state export.
/// All operations are serialized on an internal mutex.
class Keystore
{
public:
    explicit Keystore(std::uint64_t seed);
    /// Restores an exported state. Throws Error(BadPassphrase) or Error(DecodeError).
    Keystore(const nlohmann::json& state, std::string_view passphrase);

    Keystore(const Keystore&) = delete;
    Keystore& operator=(const Keystore&) = delete;

    /// Throws Error(DuplicateKey).
    PublicKeyInfo generate_key(const KeyId& id);
    /// Deterministic Ed25519 signature. Throws Error(UnknownKey).
    Bytes sign(const KeyId& id, ByteView message) const;
    /// Throws Error(UnknownKey).
    PublicKeyInfo public_key(const KeyId& id) const;
    bool contains(const KeyId& id) const;
    std::vector<PublicKeyInfo> public_keys() const;

    /// Small named counters persisted alongside the keys (e.g. a TSA serial).
    std::uint64_t counter(std::string_view name) const;
    void set_counter(std::string_view name, std::uint64_t value);

    /// Public material in the clear, private material and generator state
    /// sealed with AES-256-GCM under a PBKDF2 key. Byte fields are base64url.
    nlohmann::ordered_json export_state(std::string_view passphrase) const;

    static constexpr int kKdfIterations = 20000;

private:
    struct Entry {
        crypto::Ed25519Seed seed{};
        PublicKeyInfo pub;
    };

    mutable std::mutex mutex_;
    crypto::Drbg rng_;
    Bytes salt_;
    std::map<KeyId, Entry> keys_;
    std::map<std::string, std::uint64_t, std::less<>> counters_;
};

}  // namespace fleetguard::keystore
