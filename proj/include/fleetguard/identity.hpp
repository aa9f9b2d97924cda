#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fleetguard/bytes.hpp"
#include "fleetguard/crypto.hpp"
#include "fleetguard/keystore.hpp"

namespace fleetguard::identity {

enum class Status { Unprovisioned, Claimed, Blacklisted, Deprovisioned };

/// How the claim secret reached the user. All channels share one
/// verification path; the channel is recorded for audit only.
enum class Channel { PreProvisioned, DeviceEnteredSecret, DeviceDisplayedKey, CompanionDevice };

std::string_view to_string(Status s);
std::string_view to_string(Channel c);
Status parse_status(std::string_view s);
Channel parse_channel(std::string_view s);

struct DeviceRecord {
    std::string device_id;
    /// SHA-256 over (device_id, secret); the raw secret is never kept.
    Digest claim_hash{};
    /// Set while Claimed; kept on Blacklisted records for audit.
    std::optional<std::string> owner;
    std::optional<keystore::PublicKeyInfo> device_pub;
    Status status = Status::Unprovisioned;
    bool needs_reprovision = false;

    bool operator==(const DeviceRecord&) const = default;
};

struct ClaimRequest {
    std::string user_id;
    std::string device_id;
    Bytes secret;
    Channel channel = Channel::PreProvisioned;
};

/// Device-initiated session through the rendezvous proxy. Immutable.
struct RendezvousSession {
    std::string session_id;
    std::string device_id;
    Tick established_at = 0;
    bool encrypted = true;
};

/// One sighting of a device credential in use, tagged with where it came from.
struct CredentialObservation {
    std::string device_id;
    std::string source_tag;
    Tick time = 0;
};

Digest claim_hash(std::string_view device_id, ByteView secret);

nlohmann::ordered_json to_json(const DeviceRecord& record);

/// Provisioning registry behind the rendezvous proxy. Every operation is
/// atomic under one mutex. Device keypairs are generated in a keystore
/// owned by the registry, standing in for each device's secure element.
class Registry
{
public:
    explicit Registry(std::uint64_t seed);
    /// Restores records and counters from `snapshot`; no sessions survive.
    Registry(const nlohmann::json& snapshot, std::uint64_t seed);

    Registry(const Registry&) = delete;
    Registry& operator=(const Registry&) = delete;

    /// New device, or re-registration of a Deprovisioned one with a new
    /// secret. Throws DuplicateDevice, SecretReused or PreconditionViolated
    /// (empty secret).
    DeviceRecord register_device(const std::string& device_id, ByteView claim_secret);

    /// Throws UnknownDevice or Blacklisted.
    RendezvousSession device_connect(const std::string& device_id, Tick now);
    void close_session(const std::string& session_id);
    bool session_active(const std::string& session_id) const;

    /// Links user and device when the secret matches. Throws InvalidSession,
    /// UnknownDevice, Blacklisted, SecretMismatch, AlreadyClaimed or
    /// InvalidState (Deprovisioned and not yet re-registered).
    DeviceRecord claim(const RendezvousSession& session, const ClaimRequest& request);

    /// Sticky. Drops the device's open sessions. Throws UnknownDevice, or
    /// InvalidState for a Deprovisioned record.
    DeviceRecord blacklist(const std::string& device_id);

    /// Throws UnknownDevice or NotClaimed.
    DeviceRecord deprovision(const std::string& device_id);

    /// A device came back from factory recovery: a Claimed device is
    /// deprovisioned, an Unprovisioned one just gets the flag. Blacklisted
    /// records are left alone.
    DeviceRecord mark_recovered(const std::string& device_id);

    /// Throws UnknownDevice.
    DeviceRecord record(const std::string& device_id) const;
    std::optional<DeviceRecord> find(const std::string& device_id) const;
    std::vector<DeviceRecord> records() const;

    /// Records and counters, never secrets.
    nlohmann::ordered_json snapshot() const;

private:
    DeviceRecord& lookup(const std::string& device_id);

    mutable std::mutex mutex_;
    std::map<std::string, DeviceRecord> records_;
    std::map<std::string, RendezvousSession> sessions_;
    std::unique_ptr<keystore::Keystore> device_keys_;
    crypto::Drbg session_rng_;
    std::uint64_t session_counter_ = 0;
    std::uint64_t key_generation_ = 0;
};

/// Devices seen from two or more distinct sources whose activity spans
/// [first sighting, last sighting] intersect. Sorted, unique. A credential
/// that moves cleanly from one source to another (a resold device) is not
/// flagged.
std::vector<std::string> detect_credential_clone(std::span<const CredentialObservation> observations);

}  // namespace fleetguard::identity
