#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fleetguard/bytes.hpp"
#include "fleetguard/crypto.hpp"
#include "fleetguard/update_protocol.hpp"

namespace fleetguard::deception {

inline constexpr std::size_t kCanarySize = 16;

/// Any alert raised by a deception primitive.
struct Alert {
    Tick time = 0;
    std::string device_id;
    std::string kind;  // "canary_read" | "canary_port"
    std::string actor;
    std::string detail;

    bool operator==(const Alert&) const = default;
};

nlohmann::ordered_json to_json(const Alert& alert);
void write_jsonl(std::ostream& out, std::span<const Alert> alerts);

struct CanaryTrigger {
    Tick time = 0;
    std::string actor;

    bool operator==(const CanaryTrigger&) const = default;
};

struct CanaryToken {
    std::array<std::uint8_t, kCanarySize> token_id{};
    std::uint64_t placement = 0;
    /// Ordered by time; equal times keep arrival order.
    std::vector<CanaryTrigger> triggered;
};

/// Appends 16 random bytes to the image. Build the update manifest after
/// planting so the digest covers the canary. Throws Error(ImageTooSmall)
/// for images shorter than 16 bytes.
std::pair<Bytes, CanaryToken> plant_canary(ByteView firmware, crypto::Drbg& rng);

/// Overwrites 16 bytes at `offset` instead of appending. Throws
/// ImageTooSmall or PlacementOutOfBounds.
std::pair<Bytes, CanaryToken> plant_canary_at(ByteView firmware, std::uint64_t offset, crypto::Drbg& rng);

/// Position of `token_id` inside `image`, if present.
std::optional<std::uint64_t> find_canary(ByteView image, const CanaryToken& token);

/// Issues canaries with token bytes unique within one campaign.
class CanaryCampaign
{
public:
    explicit CanaryCampaign(crypto::Drbg rng) : rng_(std::move(rng)) {}

    std::pair<Bytes, CanaryToken> plant(ByteView firmware);

private:
    crypto::Drbg rng_;
    std::set<std::array<std::uint8_t, kCanarySize>> issued_;
};

struct ReadEvent {
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
    Tick time = 0;
    std::string actor;
};

/// Alerts iff [offset, offset + length) overlaps the token bytes, and
/// records the trigger on the token.
std::optional<Alert> check_access(CanaryToken& token, const std::string& device_id, const ReadEvent& read);

/// Per-device canary ports. A port either carries a legitimate service or
/// is a canary; any connection to a canary port is illegitimate.
class CanaryPorts
{
public:
    void add_service(const std::string& device_id, std::uint16_t port);
    /// Throws Error(PortInUse) if a service or another canary owns the port.
    void open_canary_port(const std::string& device_id, std::uint16_t port);
    std::optional<Alert> record_connection(const std::string& device_id, std::uint16_t port,
                                           const std::string& source, Tick time) const;
    bool is_canary(const std::string& device_id, std::uint16_t port) const;

private:
    std::map<std::string, std::set<std::uint16_t>> services_;
    std::map<std::string, std::set<std::uint16_t>> canaries_;
};

/// Moving-target address assignment.
struct MtdSchedule {
    Tick rotation_interval = 1;
    std::vector<std::string> address_pool;
    std::map<std::string, std::string> assignment;

    bool operator==(const MtdSchedule&) const = default;
};

/// Random injective assignment of `devices` into the pool. Throws
/// Error(PoolTooSmall) or Error(InvalidConfig) for a non-positive interval.
MtdSchedule mtd_initial(std::span<const std::string> devices, std::vector<std::string> pool, Tick rotation_interval,
                        crypto::Drbg& rng);

/// Fresh injective assignment. With more addresses than devices every
/// device moves. Throws NotRotationBoundary unless `now` is a multiple of
/// the interval, PoolTooSmall if the pool cannot cover the devices.
MtdSchedule mtd_rotate(const MtdSchedule& schedule, Tick now, crypto::Drbg& rng);

/// Records decoy regions in the unsigned debug metadata. Throws
/// Error(RegionOutOfBounds) for regions past the image end.
update::DebugMetadata attach_feint_patch(const update::DebugMetadata& metadata,
                                         std::span<const update::FeintRegion> decoys);

}  // namespace fleetguard::deception
