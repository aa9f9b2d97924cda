#include "fleetguard/keystore.hpp"

#include "fleetguard/error.hpp"

namespace fleetguard::keystore {

namespace {

constexpr std::string_view kFormat = "fleetguard-keystore/1";

Bytes nonce_for(ByteView salt, std::string_view purpose, std::uint64_t counter)
{
    ByteWriter w;
    w.str("fleetguard.keystore.nonce").bytes(salt).str(purpose).u64(counter);
    const auto d = crypto::sha256(w.data());
    return Bytes(d.begin(), d.begin() + crypto::kAeadNonceSize);
}

Bytes aad_for(std::string_view purpose)
{
    return to_bytes(std::string(kFormat) + ":" + std::string(purpose));
}

}  // namespace

KeyId::KeyId(std::string n) : name(std::move(n))
{
    if (name.empty()) throw Error(Errc::InvalidConfig, "key id must not be empty");
}

nlohmann::ordered_json to_json(const PublicKeyInfo& info)
{
    nlohmann::ordered_json j;
    j["key_id"] = info.key_id.name;
    j["algorithm"] = info.algorithm;
    j["public_bytes"] = to_base64url(info.public_bytes);
    return j;
}

PublicKeyInfo public_key_from_json(const nlohmann::json& j)
{
    PublicKeyInfo info;
    info.key_id = KeyId(j.at("key_id").get<std::string>());
    info.algorithm = j.at("algorithm").get<std::string>();
    info.public_bytes = from_base64url(j.at("public_bytes").get<std::string>());
    if (info.algorithm != kEd25519 || info.public_bytes.size() != crypto::kEd25519PublicSize) {
        throw Error(Errc::DecodeError, "unsupported public key for " + info.key_id.name);
    }
    return info;
}

bool verify(const PublicKeyInfo& key, ByteView message, ByteView signature)
{
    if (key.algorithm != kEd25519) return false;
    return crypto::ed25519_verify(key.public_bytes, message, signature);
}

Keystore::Keystore(std::uint64_t seed) : rng_(seed, "keystore"), salt_(crypto::Drbg(seed, "keystore-salt").bytes(16)) {}

Keystore::Keystore(const nlohmann::json& state, std::string_view passphrase) : rng_(0)
{
    try {
        if (state.at("format").get<std::string>() != kFormat) {
            throw Error(Errc::DecodeError, "not a keystore state file");
        }
        const auto& kdf = state.at("kdf");
        salt_ = from_base64url(kdf.at("salt").get<std::string>());
        const auto key = crypto::derive_key(passphrase, salt_, kdf.at("iterations").get<int>());

        const auto& rng = state.at("rng");
        const auto rng_plain = crypto::aead_open(key, from_base64url(rng.at("nonce").get<std::string>()),
                                                 from_base64url(rng.at("sealed").get<std::string>()),
                                                 aad_for("rng"));
        ByteReader r(rng_plain);
        const auto rng_state = to_digest(r.bytes());
        const auto rng_counter = r.u64();
        r.expect_done();
        rng_ = crypto::Drbg(rng_state, rng_counter);

        for (const auto& k : state.at("keys")) {
            Entry e;
            e.pub = public_key_from_json(k);
            const auto plain = crypto::aead_open(key, from_base64url(k.at("nonce").get<std::string>()),
                                                 from_base64url(k.at("private_sealed").get<std::string>()),
                                                 aad_for("key:" + e.pub.key_id.name));
            if (plain.size() != e.seed.size()) throw Error(Errc::DecodeError, "bad private key length");
            std::copy(plain.begin(), plain.end(), e.seed.begin());
            if (!std::equal(e.pub.public_bytes.begin(), e.pub.public_bytes.end(),
                            crypto::ed25519_public_key(e.seed).begin())) {
                throw Error(Errc::DecodeError, "public key does not match sealed private key");
            }
            keys_.emplace(e.pub.key_id, std::move(e));
        }
        if (state.contains("counters")) {
            for (const auto& [name, value] : state.at("counters").items()) {
                counters_[name] = value.get<std::uint64_t>();
            }
        }
    } catch (const nlohmann::json::exception& ex) {
        throw Error(Errc::DecodeError, std::string("keystore state: ") + ex.what());
    }
}

PublicKeyInfo Keystore::generate_key(const KeyId& id)
{
    std::lock_guard lock(mutex_);
    if (keys_.count(id)) throw Error(Errc::DuplicateKey, id.name);
    Entry e;
    rng_.fill(e.seed);
    const auto pub = crypto::ed25519_public_key(e.seed);
    e.pub = PublicKeyInfo{id, std::string(kEd25519), Bytes(pub.begin(), pub.end())};
    auto info = e.pub;
    keys_.emplace(id, std::move(e));
    return info;
}

Bytes Keystore::sign(const KeyId& id, ByteView message) const
{
    std::lock_guard lock(mutex_);
    auto it = keys_.find(id);
    if (it == keys_.end()) throw Error(Errc::UnknownKey, id.name);
    return crypto::ed25519_sign(it->second.seed, message);
}

PublicKeyInfo Keystore::public_key(const KeyId& id) const
{
    std::lock_guard lock(mutex_);
    auto it = keys_.find(id);
    if (it == keys_.end()) throw Error(Errc::UnknownKey, id.name);
    return it->second.pub;
}

bool Keystore::contains(const KeyId& id) const
{
    std::lock_guard lock(mutex_);
    return keys_.count(id) > 0;
}

std::vector<PublicKeyInfo> Keystore::public_keys() const
{
    std::lock_guard lock(mutex_);
    std::vector<PublicKeyInfo> out;
    for (const auto& [id, e] : keys_) out.push_back(e.pub);
    return out;
}

std::uint64_t Keystore::counter(std::string_view name) const
{
    std::lock_guard lock(mutex_);
    auto it = counters_.find(name);
    return it == counters_.end() ? 0 : it->second;
}

void Keystore::set_counter(std::string_view name, std::uint64_t value)
{
    std::lock_guard lock(mutex_);
    counters_[std::string(name)] = value;
}

nlohmann::ordered_json Keystore::export_state(std::string_view passphrase) const
{
    std::lock_guard lock(mutex_);
    const auto key = crypto::derive_key(passphrase, salt_, kKdfIterations);

    nlohmann::ordered_json j;
    j["format"] = kFormat;
    j["kdf"] = {{"alg", "pbkdf2-sha256"}, {"iterations", kKdfIterations}, {"salt", to_base64url(salt_)}};

    ByteWriter rng_plain;
    rng_plain.bytes(rng_.state()).u64(rng_.counter());
    const auto rng_nonce = nonce_for(salt_, "rng", rng_.counter());
    j["rng"] = {{"nonce", to_base64url(rng_nonce)},
                {"sealed", to_base64url(crypto::aead_seal(key, rng_nonce, rng_plain.data(), aad_for("rng")))}};

    auto keys = nlohmann::ordered_json::array();
    for (const auto& [id, e] : keys_) {
        auto k = to_json(e.pub);
        // Each key's plaintext never changes, so a per-key nonce is never
        // reused with different content.
        const auto nonce = nonce_for(salt_, "key:" + id.name, 0);
        k["nonce"] = to_base64url(nonce);
        k["private_sealed"] = to_base64url(crypto::aead_seal(key, nonce, e.seed, aad_for("key:" + id.name)));
        keys.push_back(std::move(k));
    }
    j["keys"] = std::move(keys);
    j["counters"] = nlohmann::ordered_json::object();
    for (const auto& [name, value] : counters_) j["counters"][name] = value;
    return j;
}

}  // namespace fleetguard::keystore
