#include "fleetguard/tsa.hpp"

#include "fleetguard/crypto.hpp"
#include "fleetguard/error.hpp"

namespace fleetguard::tsa {

namespace {

constexpr std::string_view kTag = "fleetguard.tst/1";

ByteWriter body_writer(const TimestampToken& token)
{
    ByteWriter w;
    w.str(kTag).bytes(token.imprint).i64(token.gen_time).u64(token.serial).str(token.tsa_key);
    return w;
}

}  // namespace

Bytes signed_body(const TimestampToken& token)
{
    return std::move(body_writer(token)).data();
}

Bytes encode(const TimestampToken& token)
{
    auto w = body_writer(token);
    w.bytes(token.signature);
    return std::move(w).data();
}

TimestampToken decode(ByteView data)
{
    ByteReader r(data);
    if (r.str() != kTag) throw Error(Errc::DecodeError, "not a timestamp token");
    TimestampToken t;
    t.imprint = to_digest(r.bytes());
    t.gen_time = r.i64();
    t.serial = r.u64();
    t.tsa_key = r.str();
    t.signature = r.bytes();
    r.expect_done();
    return t;
}

nlohmann::ordered_json to_json(const TimestampToken& token)
{
    nlohmann::ordered_json j;
    j["imprint"] = to_base64url(token.imprint);
    j["gen_time"] = token.gen_time;
    j["serial"] = token.serial;
    j["tsa_key"] = token.tsa_key;
    j["signature"] = to_base64url(token.signature);
    return j;
}

TimestampToken token_from_json(const nlohmann::json& j)
{
    TimestampToken t;
    t.imprint = to_digest(from_base64url(j.at("imprint").get<std::string>()));
    t.gen_time = j.at("gen_time").get<Tick>();
    t.serial = j.at("serial").get<std::uint64_t>();
    t.tsa_key = j.at("tsa_key").get<std::string>();
    t.signature = from_base64url(j.at("signature").get<std::string>());
    return t;
}

std::string_view to_string(TokenStatus s)
{
    switch (s) {
        case TokenStatus::Ok: return "Ok";
        case TokenStatus::UntrustedSigner: return "UntrustedSigner";
        case TokenStatus::MismatchedImprint: return "MismatchedImprint";
    }
    return "UntrustedSigner";
}

TokenStatus verify_token(const TimestampToken& token, ByteView expected_imprint,
                         const keystore::PublicKeyInfo& trust_anchor)
{
    if (token.tsa_key != trust_anchor.key_id.name
        || !keystore::verify(trust_anchor, signed_body(token), token.signature)) {
        return TokenStatus::UntrustedSigner;
    }
    if (!crypto::constant_time_equal(token.imprint, expected_imprint)) {
        return TokenStatus::MismatchedImprint;
    }
    return TokenStatus::Ok;
}

Tsa::Tsa(keystore::Keystore& keys, keystore::KeyId key, std::uint64_t last_serial)
    : keys_(keys), key_(std::move(key)), serial_(last_serial)
{
    keys_.public_key(key_);  // fail early on an unknown key
}

TimestampToken Tsa::issue_token(ByteView imprint, Tick now)
{
    if (imprint.size() != sizeof(Digest)) {
        throw Error(Errc::BadImprintLength, "imprint must be 32 bytes, got " + std::to_string(imprint.size()));
    }
    std::lock_guard lock(mutex_);
    TimestampToken t;
    t.imprint = to_digest(imprint);
    t.gen_time = now;
    t.serial = serial_ + 1;
    t.tsa_key = key_.name;
    t.signature = keys_.sign(key_, signed_body(t));
    serial_ = t.serial;
    return t;
}

std::uint64_t Tsa::last_serial() const
{
    std::lock_guard lock(mutex_);
    return serial_;
}

keystore::PublicKeyInfo Tsa::public_key() const
{
    return keys_.public_key(key_);
}

}  // namespace fleetguard::tsa
