#include "fleetguard/transport.hpp"

#include <algorithm>
#include <optional>

#include "fleetguard/error.hpp"

namespace fleetguard::transport {

std::size_t max_payload(std::size_t mtu)
{
    return mtu <= kHeaderSize ? 0 : kMaxFragments * (mtu - kHeaderSize);
}

std::vector<Bytes> fragment(ByteView payload, std::size_t mtu, std::uint16_t message_id)
{
    if (mtu <= kHeaderSize) {
        throw Error(Errc::MtuTooSmall, "mtu " + std::to_string(mtu) + " leaves no room after the 4-byte header");
    }
    const std::size_t chunk = mtu - kHeaderSize;
    const std::size_t count = payload.empty() ? 1 : (payload.size() + chunk - 1) / chunk;
    if (count > kMaxFragments) {
        throw Error(Errc::PayloadTooLarge, std::to_string(payload.size()) + " bytes need " + std::to_string(count)
                                               + " fragments at mtu " + std::to_string(mtu));
    }

    std::vector<Bytes> frames;
    frames.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t begin = i * chunk;
        const std::size_t end = std::min(payload.size(), begin + chunk);
        Bytes f;
        f.reserve(kHeaderSize + end - begin);
        f.push_back(static_cast<std::uint8_t>(message_id >> 8));
        f.push_back(static_cast<std::uint8_t>(message_id));
        f.push_back(static_cast<std::uint8_t>(i));
        f.push_back(static_cast<std::uint8_t>(count - 1));
        f.insert(f.end(), payload.begin() + static_cast<std::ptrdiff_t>(begin),
                 payload.begin() + static_cast<std::ptrdiff_t>(end));
        frames.push_back(std::move(f));
    }
    return frames;
}

Bytes reassemble(std::span<const Bytes> frames)
{
    if (frames.empty()) throw Error(Errc::MissingFragment, "no frames received");

    std::optional<std::uint16_t> message_id;
    std::size_t count = 0;
    std::vector<std::optional<ByteView>> parts;
    for (const auto& f : frames) {
        if (f.size() < kHeaderSize) throw Error(Errc::MalformedFrame, "frame shorter than its header");
        const auto id = static_cast<std::uint16_t>((f[0] << 8) | f[1]);
        const std::size_t index = f[2];
        const std::size_t total = static_cast<std::size_t>(f[3]) + 1;
        if (!message_id) {
            message_id = id;
            count = total;
            parts.assign(count, std::nullopt);
        } else if (id != *message_id || total != count) {
            throw Error(Errc::MalformedFrame, "frames from different messages");
        }
        if (index >= count) throw Error(Errc::MalformedFrame, "fragment index out of range");
        const ByteView body(f.data() + kHeaderSize, f.size() - kHeaderSize);
        if (parts[index] && !std::equal(parts[index]->begin(), parts[index]->end(), body.begin(), body.end())) {
            throw Error(Errc::MalformedFrame, "conflicting duplicate of fragment " + std::to_string(index));
        }
        parts[index] = body;
    }

    Bytes out;
    for (std::size_t i = 0; i < count; ++i) {
        if (!parts[i]) throw Error(Errc::MissingFragment, "fragment " + std::to_string(i) + " of " + std::to_string(count));
        out.insert(out.end(), parts[i]->begin(), parts[i]->end());
    }
    return out;
}

}  // namespace fleetguard::transport
