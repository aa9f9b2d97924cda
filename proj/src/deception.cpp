#include "fleetguard/deception.hpp"

#include <algorithm>
#include <ostream>

#include "fleetguard/error.hpp"

namespace fleetguard::deception {

namespace {

CanaryToken fresh_token(crypto::Drbg& rng, std::uint64_t placement)
{
    CanaryToken t;
    rng.fill(t.token_id);
    t.placement = placement;
    return t;
}

// Unbiased index in [0, n).
std::size_t pick(crypto::Drbg& rng, std::size_t n)
{
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = 0;
    do {
        v = rng.next_u64();
    } while (v >= limit);
    return static_cast<std::size_t>(v % n);
}

void shuffle(std::vector<std::string>& v, crypto::Drbg& rng)
{
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[pick(rng, i)]);
    }
}

}  // namespace

nlohmann::ordered_json to_json(const Alert& a)
{
    nlohmann::ordered_json j;
    j["time"] = a.time;
    j["device_id"] = a.device_id;
    j["kind"] = a.kind;
    j["actor"] = a.actor;
    j["detail"] = a.detail;
    return j;
}

void write_jsonl(std::ostream& out, std::span<const Alert> alerts)
{
    for (const auto& a : alerts) out << to_json(a).dump() << '\n';
}

std::pair<Bytes, CanaryToken> plant_canary(ByteView firmware, crypto::Drbg& rng)
{
    if (firmware.size() < kCanarySize) {
        throw Error(Errc::ImageTooSmall, "image of " + std::to_string(firmware.size()) + " bytes");
    }
    auto token = fresh_token(rng, firmware.size());
    Bytes out(firmware.begin(), firmware.end());
    out.insert(out.end(), token.token_id.begin(), token.token_id.end());
    return {std::move(out), std::move(token)};
}

std::pair<Bytes, CanaryToken> plant_canary_at(ByteView firmware, std::uint64_t offset, crypto::Drbg& rng)
{
    if (firmware.size() < kCanarySize) {
        throw Error(Errc::ImageTooSmall, "image of " + std::to_string(firmware.size()) + " bytes");
    }
    if (offset > firmware.size() - kCanarySize) {
        throw Error(Errc::PlacementOutOfBounds, "offset " + std::to_string(offset));
    }
    auto token = fresh_token(rng, offset);
    Bytes out(firmware.begin(), firmware.end());
    std::copy(token.token_id.begin(), token.token_id.end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
    return {std::move(out), std::move(token)};
}

std::optional<std::uint64_t> find_canary(ByteView image, const CanaryToken& token)
{
    auto it = std::search(image.begin(), image.end(), token.token_id.begin(), token.token_id.end());
    if (it == image.end()) return std::nullopt;
    return static_cast<std::uint64_t>(it - image.begin());
}

std::pair<Bytes, CanaryToken> CanaryCampaign::plant(ByteView firmware)
{
    while (true) {
        auto planted = plant_canary(firmware, rng_);
        if (issued_.insert(planted.second.token_id).second) return planted;
    }
}

std::optional<Alert> check_access(CanaryToken& token, const std::string& device_id, const ReadEvent& read)
{
    const std::uint64_t lo = token.placement;
    const std::uint64_t hi = token.placement + kCanarySize;
    if (read.length == 0 || read.offset >= hi || read.offset + read.length <= lo) return std::nullopt;

    auto pos = std::upper_bound(token.triggered.begin(), token.triggered.end(), read.time,
                                [](Tick t, const CanaryTrigger& c) { return t < c.time; });
    token.triggered.insert(pos, CanaryTrigger{read.time, read.actor});
    return Alert{read.time, device_id, "canary_read", read.actor,
                 "read [" + std::to_string(read.offset) + ", " + std::to_string(read.offset + read.length)
                     + ") covers canary at " + std::to_string(token.placement)};
}

void CanaryPorts::add_service(const std::string& device_id, std::uint16_t port)
{
    if (is_canary(device_id, port)) {
        throw Error(Errc::PortInUse, device_id + ":" + std::to_string(port) + " is a canary");
    }
    services_[device_id].insert(port);
}

void CanaryPorts::open_canary_port(const std::string& device_id, std::uint16_t port)
{
    auto svc = services_.find(device_id);
    if ((svc != services_.end() && svc->second.count(port)) || is_canary(device_id, port)) {
        throw Error(Errc::PortInUse, device_id + ":" + std::to_string(port));
    }
    canaries_[device_id].insert(port);
}

bool CanaryPorts::is_canary(const std::string& device_id, std::uint16_t port) const
{
    auto it = canaries_.find(device_id);
    return it != canaries_.end() && it->second.count(port) > 0;
}

std::optional<Alert> CanaryPorts::record_connection(const std::string& device_id, std::uint16_t port,
                                                    const std::string& source, Tick time) const
{
    if (!is_canary(device_id, port)) return std::nullopt;
    return Alert{time, device_id, "canary_port", source, "connection to canary port " + std::to_string(port)};
}

MtdSchedule mtd_initial(std::span<const std::string> devices, std::vector<std::string> pool, Tick rotation_interval,
                        crypto::Drbg& rng)
{
    if (rotation_interval <= 0) throw Error(Errc::InvalidConfig, "rotation interval must be positive");
    if (pool.size() < devices.size()) {
        throw Error(Errc::PoolTooSmall, std::to_string(pool.size()) + " addresses for " + std::to_string(devices.size())
                                            + " devices");
    }
    if (std::set<std::string>(pool.begin(), pool.end()).size() != pool.size()) {
        throw Error(Errc::InvalidConfig, "address pool contains duplicates");
    }
    MtdSchedule s;
    s.rotation_interval = rotation_interval;
    s.address_pool = pool;
    shuffle(pool, rng);
    for (std::size_t i = 0; i < devices.size(); ++i) s.assignment[devices[i]] = pool[i];
    if (s.assignment.size() != devices.size()) throw Error(Errc::InvalidConfig, "duplicate device ids");
    return s;
}

MtdSchedule mtd_rotate(const MtdSchedule& schedule, Tick now, crypto::Drbg& rng)
{
    if (schedule.rotation_interval <= 0 || now % schedule.rotation_interval != 0) {
        throw Error(Errc::NotRotationBoundary, "t=" + std::to_string(now));
    }
    if (schedule.address_pool.size() < schedule.assignment.size()) {
        throw Error(Errc::PoolTooSmall, std::to_string(schedule.address_pool.size()) + " addresses for "
                                            + std::to_string(schedule.assignment.size()) + " devices");
    }

    std::vector<std::string> order = schedule.address_pool;
    shuffle(order, rng);
    std::vector<char> used(order.size(), 0);

    // Greedy: each device takes the first unused shuffled address other than
    // its current one. While more addresses than devices remain, at least two
    // are free at every step, so the fallback only fires when |pool| == |devices|.
    MtdSchedule next = schedule;
    for (auto& [device, address] : next.assignment) {
        const std::string previous = address;
        std::size_t choice = order.size();
        for (std::size_t k = 0; k < order.size(); ++k) {
            if (!used[k] && order[k] != previous) {
                choice = k;
                break;
            }
        }
        if (choice == order.size()) {
            for (std::size_t k = 0; k < order.size(); ++k) {
                if (!used[k]) {
                    choice = k;
                    break;
                }
            }
        }
        used[choice] = 1;
        address = order[choice];
    }
    return next;
}

update::DebugMetadata attach_feint_patch(const update::DebugMetadata& metadata,
                                         std::span<const update::FeintRegion> decoys)
{
    update::DebugMetadata out = metadata;
    for (const auto& r : decoys) {
        if (r.offset > metadata.image_length || r.length > metadata.image_length - r.offset) {
            throw Error(Errc::RegionOutOfBounds, "[" + std::to_string(r.offset) + ", +" + std::to_string(r.length)
                                                     + ") past image of " + std::to_string(metadata.image_length));
        }
        out.feint_regions.push_back(r);
    }
    return out;
}

}  // namespace fleetguard::deception
