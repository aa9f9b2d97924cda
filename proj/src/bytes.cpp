#include "fleetguard/bytes.hpp"

#include <algorithm>
#include <openssl/evp.h>

#include "fleetguard/error.hpp"

namespace fleetguard {

namespace {

int hex_value(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

Bytes to_bytes(std::string_view text)
{
    return Bytes(text.begin(), text.end());
}

ByteView as_view(const std::string& text)
{
    return {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()};
}

std::string to_hex(ByteView data)
{
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex)
{
    if (hex.size() % 2 != 0) {
        throw Error(Errc::DecodeError, "odd-length hex string");
    }
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        const int hi = hex_value(hex[i]);
        const int lo = hex_value(hex[i + 1]);
        if (hi < 0 || lo < 0) {
            throw Error(Errc::DecodeError, "invalid hex digit");
        }
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

std::string to_base64url(ByteView data)
{
    std::string out(4 * ((data.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                                  static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    while (!out.empty() && out.back() == '=') out.pop_back();
    std::replace(out.begin(), out.end(), '+', '-');
    std::replace(out.begin(), out.end(), '/', '_');
    return out;
}

Bytes from_base64url(std::string_view text)
{
    std::string padded(text);
    for (char& c : padded) {
        if (c == '-') c = '+';
        else if (c == '_') c = '/';
        else if (c == '+' || c == '/' || c == '=') {
            throw Error(Errc::DecodeError, "not a base64url string");
        }
    }
    if (padded.size() % 4 == 1) {
        throw Error(Errc::DecodeError, "invalid base64url length");
    }
    const std::size_t pad = (4 - padded.size() % 4) % 4;
    padded.append(pad, '=');

    Bytes out(padded.size() / 4 * 3);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(padded.data()),
                                  static_cast<int>(padded.size()));
    if (n < 0) {
        throw Error(Errc::DecodeError, "invalid base64url data");
    }
    // EVP_DecodeBlock counts padding as zero bytes.
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

Digest to_digest(ByteView data)
{
    if (data.size() != sizeof(Digest)) {
        throw Error(Errc::DecodeError, "digest must be 32 bytes, got " + std::to_string(data.size()));
    }
    Digest d{};
    std::copy(data.begin(), data.end(), d.begin());
    return d;
}

ByteWriter& ByteWriter::u8(std::uint8_t v)
{
    out_.push_back(v);
    return *this;
}

ByteWriter& ByteWriter::u64(std::uint64_t v)
{
    for (int shift = 56; shift >= 0; shift -= 8) {
        out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
    return *this;
}

ByteWriter& ByteWriter::i64(std::int64_t v)
{
    return u64(static_cast<std::uint64_t>(v));
}

ByteWriter& ByteWriter::bytes(ByteView v)
{
    const auto n = static_cast<std::uint32_t>(v.size());
    for (int shift = 24; shift >= 0; shift -= 8) {
        out_.push_back(static_cast<std::uint8_t>(n >> shift));
    }
    out_.insert(out_.end(), v.begin(), v.end());
    return *this;
}

ByteWriter& ByteWriter::str(std::string_view v)
{
    return bytes({reinterpret_cast<const std::uint8_t*>(v.data()), v.size()});
}

ByteView ByteReader::take(std::size_t n)
{
    if (in_.size() - pos_ < n) {
        throw Error(Errc::DecodeError, "truncated input");
    }
    auto out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::uint8_t ByteReader::u8()
{
    return take(1)[0];
}

std::uint64_t ByteReader::u64()
{
    std::uint64_t v = 0;
    for (auto b : take(8)) v = (v << 8) | b;
    return v;
}

std::int64_t ByteReader::i64()
{
    return static_cast<std::int64_t>(u64());
}

Bytes ByteReader::bytes()
{
    std::uint32_t n = 0;
    for (auto b : take(4)) n = (n << 8) | b;
    auto v = take(n);
    return Bytes(v.begin(), v.end());
}

std::string ByteReader::str()
{
    auto b = bytes();
    return std::string(b.begin(), b.end());
}

void ByteReader::expect_done() const
{
    if (!done()) {
        throw Error(Errc::DecodeError, "trailing bytes after structure");
    }
}

}  // namespace fleetguard
