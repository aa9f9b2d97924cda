#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fleetguard {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// SHA-256 output; also the size of a timestamp imprint.
using Digest = std::array<std::uint8_t, 32>;

/// Simulation and protocol time. Never wall clock.
using Tick = std::int64_t;

Bytes to_bytes(std::string_view text);
ByteView as_view(const std::string& text);

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);

/// RFC 4648 url-safe alphabet, no padding.
std::string to_base64url(ByteView data);
Bytes from_base64url(std::string_view text);

Digest to_digest(ByteView data);

/// Writer for the canonical binary encoding shared by tokens and manifests:
/// fixed field order, big-endian integers, u32 length prefix on byte strings.
class ByteWriter
{
public:
    ByteWriter& u8(std::uint8_t v);
    ByteWriter& u64(std::uint64_t v);
    ByteWriter& i64(std::int64_t v);
    ByteWriter& bytes(ByteView v);
    ByteWriter& str(std::string_view v);

    const Bytes& data() const& { return out_; }
    Bytes data() && { return std::move(out_); }

private:
    Bytes out_;
};

/// Strict reader for the same encoding. Every method throws
/// Error(DecodeError) on truncated input.
class ByteReader
{
public:
    explicit ByteReader(ByteView in) : in_(in) {}

    std::uint8_t u8();
    std::uint64_t u64();
    std::int64_t i64();
    Bytes bytes();
    std::string str();

    bool done() const { return pos_ == in_.size(); }
    /// Throws unless the whole input was consumed.
    void expect_done() const;

private:
    ByteView take(std::size_t n);

    ByteView in_;
    std::size_t pos_ = 0;
};

}  // namespace fleetguard
