#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fleetguard/bytes.hpp"
#include "fleetguard/error.hpp"
#include "fleetguard/keystore.hpp"
#include "fleetguard/tsa.hpp"

namespace fleetguard::update {

/// Decoy change region advertised in debug metadata.
struct FeintRegion {
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
    std::string note;

    bool operator==(const FeintRegion&) const = default;
};

/// Unsigned side-channel of a manifest. Never part of the canonical body.
struct DebugMetadata {
    std::uint64_t image_length = 0;
    std::vector<FeintRegion> feint_regions;

    bool operator==(const DebugMetadata&) const = default;
};

struct FirmwareManifest {
    std::string firmware_id;
    std::uint64_t version = 0;
    Digest digest{};
    Tick expiry = 0;
    tsa::TimestampToken token;
    Bytes publisher_sig;
    DebugMetadata debug;

    bool operator==(const FirmwareManifest&) const = default;
};

/// What the publisher signs: tag, firmware_id, version, digest, expiry and
/// the encoded token, in that order.
Bytes manifest_body(const FirmwareManifest& manifest);
/// Canonical binary file form: body followed by the publisher signature.
/// Debug metadata is not included.
Bytes encode(const FirmwareManifest& manifest);
FirmwareManifest decode(ByteView data);

/// Debug rendering with base64url byte fields, keys in field order.
nlohmann::ordered_json to_json(const FirmwareManifest& manifest);
FirmwareManifest manifest_from_json(const nlohmann::json& j);

enum class Slot { A, B };
enum class Mode { Running, Updating, FailState };

std::string_view to_string(Slot s);
std::string_view to_string(Mode m);

struct SlotState {
    Digest image_digest{};
    std::uint64_t version = 0;
    Tick gen_time = 0;
    bool verified = false;

    bool operator==(const SlotState&) const = default;
};

struct DeviceUpdateState {
    Slot active_slot = Slot::A;
    std::array<SlotState, 2> slots{};
    keystore::PublicKeyInfo trust_anchor_tsa;
    keystore::PublicKeyInfo trust_anchor_publisher;
    Mode mode = Mode::Running;
    /// Set by factory recovery; the identity layer has to re-provision.
    bool needs_reprovision = false;

    const SlotState& slot(Slot s) const { return slots[s == Slot::A ? 0 : 1]; }
    SlotState& slot(Slot s) { return slots[s == Slot::A ? 0 : 1]; }
    const SlotState& active() const { return slot(active_slot); }
    Slot inactive_slot() const { return active_slot == Slot::A ? Slot::B : Slot::A; }

    bool operator==(const DeviceUpdateState&) const = default;
};

nlohmann::ordered_json to_json(const DeviceUpdateState& state);
DeviceUpdateState state_from_json(const nlohmann::json& j);

/// A device leaving the factory: slot A holds the given image, slot B is
/// empty and unverified.
DeviceUpdateState factory_state(const keystore::PublicKeyInfo& tsa_anchor,
                                const keystore::PublicKeyInfo& publisher_anchor,
                                const FirmwareManifest& factory_manifest);

enum class RejectReason {
    BadPublisherSig,
    UntrustedTimestamp,
    DigestMismatch,
    Rollback,
    Expired,
    /// Only from apply_update: the device is in FailState and refuses updates.
    DeviceInFailState,
};

std::string_view to_string(RejectReason r);

struct Verdict {
    std::optional<RejectReason> reason;

    static Verdict accept() { return {}; }
    static Verdict reject(RejectReason r) { return {r}; }
    bool accepted() const { return !reason.has_value(); }

    bool operator==(const Verdict&) const = default;
};

/// "Accept" or "Reject(<reason>)".
std::string to_string(const Verdict& v);

/// Hashes the image, timestamps the digest at `now` and signs the body.
/// Throws Error(ExpiryInPast) unless expiry > now.
FirmwareManifest build_manifest(ByteView firmware, std::string firmware_id, std::uint64_t version,
                                Tick expiry, const keystore::Keystore& publisher_keys,
                                const keystore::KeyId& publisher_key, tsa::Tsa& timestamp_authority,
                                Tick now);

/// Checks in this order, first failure wins:
///   1. publisher signature under the publisher anchor   -> BadPublisherSig
///   2. timestamp token under the TSA anchor, over digest -> UntrustedTimestamp
///   3. SHA-256(firmware) == digest                       -> DigestMismatch
///   4. version and token gen_time both strictly newer
///      than the active slot                              -> Rollback
///   5. now < expiry                                      -> Expired
/// Pure: the state is not touched.
Verdict device_verify(const DeviceUpdateState& state, const FirmwareManifest& manifest, ByteView firmware,
                      Tick now);

struct RejectionRecord {
    std::string firmware_id;
    std::uint64_t version = 0;
    RejectReason reason = RejectReason::BadPublisherSig;
    Tick time = 0;
};

struct ApplyResult {
    DeviceUpdateState state;
    Verdict verdict;
    std::optional<RejectionRecord> rejection;
};

/// On Accept the image goes into the inactive slot, which becomes active.
/// On Reject the state is returned unchanged. FailState refuses everything.
ApplyResult apply_update(const DeviceUpdateState& state, const FirmwareManifest& manifest, ByteView firmware,
                         Tick now);

/// Power loss part-way through writing the inactive slot. The slot is left
/// unverified, the active slot is untouched. Throws
/// Error(PreconditionViolated) unless 0 <= cut_point < 1.
DeviceUpdateState interrupt_update(const DeviceUpdateState& state, const FirmwareManifest& manifest,
                                   ByteView firmware, double cut_point);

struct BootResult {
    DeviceUpdateState state;
    std::optional<Slot> booted;
};

/// Active slot if verified, else the other slot if verified (it becomes
/// active), else FailState with nothing booted.
BootResult boot(const DeviceUpdateState& state);

class RecoveryRefused : public Error
{
public:
    explicit RecoveryRefused(RejectReason reason)
        : Error(Errc::RecoveryRefused, std::string(to_string(reason)))
        , reason_(reason)
    {
    }

    RejectReason reason() const noexcept { return reason_; }

private:
    RejectReason reason_;
};

/// Factory recovery out of FailState: the full check minus the rollback
/// comparison. Installs to slot A and flags the device for re-provisioning.
/// Throws Error(PreconditionViolated) outside FailState and RecoveryRefused
/// on a failed check.
DeviceUpdateState recover_to_trusted(const DeviceUpdateState& state, const FirmwareManifest& factory_manifest,
                                     ByteView factory_firmware, Tick now);

}  // namespace fleetguard::update
