#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "fleetguard/bytes.hpp"
#include "fleetguard/keystore.hpp"

namespace fleetguard::tsa {

/// Signed binding of a 32-byte imprint (a firmware digest) to a generation
/// time and serial number.
struct TimestampToken {
    Digest imprint{};
    Tick gen_time = 0;
    std::uint64_t serial = 0;
    std::string tsa_key;
    Bytes signature;

    bool operator==(const TimestampToken&) const = default;
};

/// Bytes covered by the signature: tag, imprint, gen_time, serial, tsa_key.
Bytes signed_body(const TimestampToken& token);

/// Canonical binary form: the signed body followed by the length-prefixed signature.
Bytes encode(const TimestampToken& token);
/// Strict inverse of encode. Throws Error(DecodeError).
TimestampToken decode(ByteView data);

nlohmann::ordered_json to_json(const TimestampToken& token);
TimestampToken token_from_json(const nlohmann::json& j);

enum class TokenStatus { Ok, UntrustedSigner, MismatchedImprint };
std::string_view to_string(TokenStatus s);

/// Signature (and signer name) first, then the imprint.
TokenStatus verify_token(const TimestampToken& token, ByteView expected_imprint,
                         const keystore::PublicKeyInfo& trust_anchor);

/// On-premise timestamp authority. The signing key stays in the keystore;
/// issue_token calls are serialized so serials form a gap-free sequence.
class Tsa
{
public:
    Tsa(keystore::Keystore& keys, keystore::KeyId key, std::uint64_t last_serial = 0);

    /// Throws Error(BadImprintLength) unless the imprint is 32 bytes.
    TimestampToken issue_token(ByteView imprint, Tick now);

    std::uint64_t last_serial() const;
    keystore::PublicKeyInfo public_key() const;
    const keystore::KeyId& key_id() const { return key_; }

private:
    keystore::Keystore& keys_;
    keystore::KeyId key_;
    mutable std::mutex mutex_;
    std::uint64_t serial_;
};

}  // namespace fleetguard::tsa
