#include "fleetguard/crypto.hpp"

#include <memory>
#include <openssl/evp.h>

#include "fleetguard/error.hpp"

namespace fleetguard::crypto {

namespace {

struct PkeyDeleter {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct CipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};

using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

PkeyPtr private_key(const Ed25519Seed& seed)
{
    PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size()));
    if (!key) throw Error(Errc::CryptoFailure, "cannot load Ed25519 private key");
    return key;
}

}  // namespace

Digest sha256(ByteView data)
{
    Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error(Errc::CryptoFailure, "SHA-256 failed");
    }
    return out;
}

Digest sha256(std::string_view data)
{
    return sha256(ByteView(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

bool constant_time_equal(ByteView a, ByteView b)
{
    if (a.size() != b.size()) return false;
    std::uint8_t diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff |= static_cast<std::uint8_t>(a[i] ^ b[i]);
    }
    return diff == 0;
}

Ed25519Public ed25519_public_key(const Ed25519Seed& seed)
{
    auto key = private_key(seed);
    Ed25519Public out{};
    std::size_t len = out.size();
    if (EVP_PKEY_get_raw_public_key(key.get(), out.data(), &len) != 1 || len != out.size()) {
        throw Error(Errc::CryptoFailure, "cannot derive Ed25519 public key");
    }
    return out;
}

Bytes ed25519_sign(const Ed25519Seed& seed, ByteView message)
{
    auto key = private_key(seed);
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) {
        throw Error(Errc::CryptoFailure, "Ed25519 sign init failed");
    }
    Bytes sig(kEd25519SignatureSize);
    std::size_t len = sig.size();
    if (EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()) != 1
        || len != sig.size()) {
        throw Error(Errc::CryptoFailure, "Ed25519 sign failed");
    }
    return sig;
}

bool ed25519_verify(ByteView public_key, ByteView message, ByteView signature)
{
    if (public_key.size() != kEd25519PublicSize || signature.size() != kEd25519SignatureSize) {
        return false;
    }
    PkeyPtr key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.data(),
                                            public_key.size()));
    if (!key) return false;
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) {
        return false;
    }
    return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(),
                            message.size())
           == 1;
}

Drbg::Drbg(std::uint64_t seed) : Drbg(seed, "") {}

Drbg::Drbg(std::uint64_t seed, std::string_view label)
{
    ByteWriter w;
    w.str("fleetguard.drbg").u64(seed).str(label);
    state_ = sha256(w.data());
}

void Drbg::fill(std::span<std::uint8_t> out)
{
    for (auto& b : out) {
        if (block_used_ == block_.size()) {
            ByteWriter w;
            w.bytes(state_).u64(counter_++);
            block_ = sha256(w.data());
            block_used_ = 0;
        }
        b = block_[block_used_++];
    }
}

Bytes Drbg::bytes(std::size_t n)
{
    Bytes out(n);
    fill(out);
    return out;
}

std::uint64_t Drbg::next_u64()
{
    std::array<std::uint8_t, 8> raw{};
    fill(raw);
    std::uint64_t v = 0;
    for (auto b : raw) v = (v << 8) | b;
    return v;
}

AeadKey derive_key(std::string_view passphrase, ByteView salt, int iterations)
{
    AeadKey key{};
    if (PKCS5_PBKDF2_HMAC(passphrase.data(), static_cast<int>(passphrase.size()), salt.data(),
                          static_cast<int>(salt.size()), iterations, EVP_sha256(),
                          static_cast<int>(key.size()), key.data())
        != 1) {
        throw Error(Errc::CryptoFailure, "PBKDF2 failed");
    }
    return key;
}

Bytes aead_seal(const AeadKey& key, ByteView nonce, ByteView plaintext, ByteView aad)
{
    if (nonce.size() != kAeadNonceSize) throw Error(Errc::CryptoFailure, "bad nonce size");
    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    int len = 0;
    Bytes out(plaintext.size() + kAeadTagSize);
    if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()) != 1
        || EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1
        || EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                             static_cast<int>(plaintext.size()))
               != 1
        || EVP_EncryptFinal_ex(ctx.get(), out.data() + len, &len) != 1
        || EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(kAeadTagSize),
                               out.data() + plaintext.size())
               != 1) {
        throw Error(Errc::CryptoFailure, "AES-GCM seal failed");
    }
    return out;
}

Bytes aead_open(const AeadKey& key, ByteView nonce, ByteView sealed, ByteView aad)
{
    if (nonce.size() != kAeadNonceSize || sealed.size() < kAeadTagSize) {
        throw Error(Errc::DecodeError, "malformed sealed blob");
    }
    const std::size_t body = sealed.size() - kAeadTagSize;
    Bytes tag(sealed.begin() + static_cast<std::ptrdiff_t>(body), sealed.end());
    Bytes out(body);
    int len = 0;
    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()) != 1
        || EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1
        || EVP_DecryptUpdate(ctx.get(), out.data(), &len, sealed.data(), static_cast<int>(body)) != 1
        || EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(kAeadTagSize),
                               tag.data())
               != 1) {
        throw Error(Errc::CryptoFailure, "AES-GCM open failed");
    }
    if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &len) != 1) {
        throw Error(Errc::BadPassphrase, "authentication failed (wrong passphrase or corrupted state)");
    }
    return out;
}

}  // namespace fleetguard::crypto
