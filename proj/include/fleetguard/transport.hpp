#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fleetguard/bytes.hpp"

namespace fleetguard::transport {

/// Frame header: message id (2 bytes, big-endian), fragment index (1 byte),
/// fragment count minus one (1 byte). At most 256 fragments per message.
inline constexpr std::size_t kHeaderSize = 4;
inline constexpr std::size_t kMaxFragments = 256;

/// Largest payload that fits a given MTU.
std::size_t max_payload(std::size_t mtu);

/// Splits `payload` into frames of at most `mtu` bytes. An empty payload
/// still yields one (header-only) frame. Throws MtuTooSmall (mtu <= 4) or
/// PayloadTooLarge.
std::vector<Bytes> fragment(ByteView payload, std::size_t mtu, std::uint16_t message_id = 0);

/// Reassembles frames in any order; duplicates must agree. Throws
/// MissingFragment on gaps (or no frames) and MalformedFrame on
/// inconsistent headers.
Bytes reassemble(std::span<const Bytes> frames);

}  // namespace fleetguard::transport
