#include "fleetguard/update_protocol.hpp"

#include <algorithm>
#include <cmath>

#include "fleetguard/crypto.hpp"

namespace fleetguard::update {

namespace {

constexpr std::string_view kTag = "fleetguard.manifest/1";

ByteWriter body_writer(const FirmwareManifest& m)
{
    ByteWriter w;
    w.str(kTag).str(m.firmware_id).u64(m.version).bytes(m.digest).i64(m.expiry).bytes(tsa::encode(m.token));
    return w;
}

Verdict run_checks(const DeviceUpdateState& state, const FirmwareManifest& manifest, ByteView firmware,
                   Tick now, bool check_rollback)
{
    if (!keystore::verify(state.trust_anchor_publisher, manifest_body(manifest), manifest.publisher_sig)) {
        return Verdict::reject(RejectReason::BadPublisherSig);
    }
    if (tsa::verify_token(manifest.token, manifest.digest, state.trust_anchor_tsa) != tsa::TokenStatus::Ok) {
        return Verdict::reject(RejectReason::UntrustedTimestamp);
    }
    if (!crypto::constant_time_equal(crypto::sha256(firmware), manifest.digest)) {
        return Verdict::reject(RejectReason::DigestMismatch);
    }
    if (check_rollback) {
        const auto& active = state.active();
        if (!(manifest.version > active.version && manifest.token.gen_time > active.gen_time)) {
            return Verdict::reject(RejectReason::Rollback);
        }
    }
    if (!(now < manifest.expiry)) return Verdict::reject(RejectReason::Expired);
    return Verdict::accept();
}

SlotState installed_slot(const FirmwareManifest& m)
{
    return SlotState{m.digest, m.version, m.token.gen_time, true};
}

nlohmann::ordered_json slot_json(const SlotState& s)
{
    nlohmann::ordered_json j;
    j["image_digest"] = to_base64url(s.image_digest);
    j["version"] = s.version;
    j["gen_time"] = s.gen_time;
    j["verified"] = s.verified;
    return j;
}

SlotState slot_from_json(const nlohmann::json& j)
{
    SlotState s;
    s.image_digest = to_digest(from_base64url(j.at("image_digest").get<std::string>()));
    s.version = j.at("version").get<std::uint64_t>();
    s.gen_time = j.at("gen_time").get<Tick>();
    s.verified = j.at("verified").get<bool>();
    return s;
}

}  // namespace

Bytes manifest_body(const FirmwareManifest& manifest)
{
    return std::move(body_writer(manifest)).data();
}

Bytes encode(const FirmwareManifest& manifest)
{
    auto w = body_writer(manifest);
    w.bytes(manifest.publisher_sig);
    return std::move(w).data();
}

FirmwareManifest decode(ByteView data)
{
    ByteReader r(data);
    if (r.str() != kTag) throw Error(Errc::DecodeError, "not a firmware manifest");
    FirmwareManifest m;
    m.firmware_id = r.str();
    m.version = r.u64();
    m.digest = to_digest(r.bytes());
    m.expiry = r.i64();
    m.token = tsa::decode(r.bytes());
    m.publisher_sig = r.bytes();
    r.expect_done();
    return m;
}

nlohmann::ordered_json to_json(const FirmwareManifest& m)
{
    nlohmann::ordered_json j;
    j["firmware_id"] = m.firmware_id;
    j["version"] = m.version;
    j["digest"] = to_base64url(m.digest);
    j["expiry"] = m.expiry;
    j["token"] = tsa::to_json(m.token);
    j["publisher_sig"] = to_base64url(m.publisher_sig);
    auto regions = nlohmann::ordered_json::array();
    for (const auto& r : m.debug.feint_regions) {
        regions.push_back({{"offset", r.offset}, {"length", r.length}, {"note", r.note}});
    }
    j["debug"] = {{"image_length", m.debug.image_length}, {"feint_regions", regions}};
    return j;
}

FirmwareManifest manifest_from_json(const nlohmann::json& j)
{
    try {
        FirmwareManifest m;
        m.firmware_id = j.at("firmware_id").get<std::string>();
        m.version = j.at("version").get<std::uint64_t>();
        m.digest = to_digest(from_base64url(j.at("digest").get<std::string>()));
        m.expiry = j.at("expiry").get<Tick>();
        m.token = tsa::token_from_json(j.at("token"));
        m.publisher_sig = from_base64url(j.at("publisher_sig").get<std::string>());
        if (j.contains("debug")) {
            const auto& d = j.at("debug");
            m.debug.image_length = d.value("image_length", std::uint64_t{0});
            for (const auto& r : d.value("feint_regions", nlohmann::json::array())) {
                m.debug.feint_regions.push_back({r.at("offset").get<std::uint64_t>(),
                                                 r.at("length").get<std::uint64_t>(),
                                                 r.value("note", std::string{})});
            }
        }
        return m;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(Errc::DecodeError, std::string("manifest json: ") + ex.what());
    }
}

std::string_view to_string(Slot s)
{
    return s == Slot::A ? "A" : "B";
}

std::string_view to_string(Mode m)
{
    switch (m) {
        case Mode::Running: return "Running";
        case Mode::Updating: return "Updating";
        case Mode::FailState: return "FailState";
    }
    return "Running";
}

std::string_view to_string(RejectReason r)
{
    switch (r) {
        case RejectReason::BadPublisherSig: return "BadPublisherSig";
        case RejectReason::UntrustedTimestamp: return "UntrustedTimestamp";
        case RejectReason::DigestMismatch: return "DigestMismatch";
        case RejectReason::Rollback: return "Rollback";
        case RejectReason::Expired: return "Expired";
        case RejectReason::DeviceInFailState: return "DeviceInFailState";
    }
    return "BadPublisherSig";
}

std::string to_string(const Verdict& v)
{
    if (v.accepted()) return "Accept";
    return "Reject(" + std::string(to_string(*v.reason)) + ")";
}

nlohmann::ordered_json to_json(const DeviceUpdateState& s)
{
    nlohmann::ordered_json j;
    j["active_slot"] = to_string(s.active_slot);
    j["slots"] = {slot_json(s.slots[0]), slot_json(s.slots[1])};
    j["trust_anchor_tsa"] = keystore::to_json(s.trust_anchor_tsa);
    j["trust_anchor_publisher"] = keystore::to_json(s.trust_anchor_publisher);
    j["mode"] = to_string(s.mode);
    j["needs_reprovision"] = s.needs_reprovision;
    return j;
}

DeviceUpdateState state_from_json(const nlohmann::json& j)
{
    try {
        DeviceUpdateState s;
        const auto active = j.at("active_slot").get<std::string>();
        if (active != "A" && active != "B") throw Error(Errc::DecodeError, "active_slot must be A or B");
        s.active_slot = active == "A" ? Slot::A : Slot::B;
        const auto& slots = j.at("slots");
        if (!slots.is_array() || slots.size() != 2) throw Error(Errc::DecodeError, "expected two slots");
        s.slots = {slot_from_json(slots[0]), slot_from_json(slots[1])};
        s.trust_anchor_tsa = keystore::public_key_from_json(j.at("trust_anchor_tsa"));
        s.trust_anchor_publisher = keystore::public_key_from_json(j.at("trust_anchor_publisher"));
        const auto mode = j.at("mode").get<std::string>();
        if (mode == "Running") s.mode = Mode::Running;
        else if (mode == "Updating") s.mode = Mode::Updating;
        else if (mode == "FailState") s.mode = Mode::FailState;
        else throw Error(Errc::DecodeError, "unknown mode " + mode);
        s.needs_reprovision = j.value("needs_reprovision", false);
        return s;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(Errc::DecodeError, std::string("device state json: ") + ex.what());
    }
}

DeviceUpdateState factory_state(const keystore::PublicKeyInfo& tsa_anchor,
                                const keystore::PublicKeyInfo& publisher_anchor,
                                const FirmwareManifest& factory_manifest)
{
    DeviceUpdateState s;
    s.active_slot = Slot::A;
    s.slots[0] = installed_slot(factory_manifest);
    s.trust_anchor_tsa = tsa_anchor;
    s.trust_anchor_publisher = publisher_anchor;
    s.mode = Mode::Running;
    return s;
}

FirmwareManifest build_manifest(ByteView firmware, std::string firmware_id, std::uint64_t version,
                                Tick expiry, const keystore::Keystore& publisher_keys,
                                const keystore::KeyId& publisher_key, tsa::Tsa& timestamp_authority,
                                Tick now)
{
    if (expiry <= now) {
        throw Error(Errc::ExpiryInPast,
                    "expiry " + std::to_string(expiry) + " is not after now " + std::to_string(now));
    }
    FirmwareManifest m;
    m.firmware_id = std::move(firmware_id);
    m.version = version;
    m.digest = crypto::sha256(firmware);
    m.expiry = expiry;
    m.token = timestamp_authority.issue_token(m.digest, now);
    m.publisher_sig = publisher_keys.sign(publisher_key, manifest_body(m));
    m.debug.image_length = firmware.size();
    return m;
}

Verdict device_verify(const DeviceUpdateState& state, const FirmwareManifest& manifest, ByteView firmware,
                      Tick now)
{
    return run_checks(state, manifest, firmware, now, true);
}

ApplyResult apply_update(const DeviceUpdateState& state, const FirmwareManifest& manifest, ByteView firmware,
                         Tick now)
{
    const auto verdict = state.mode == Mode::FailState ? Verdict::reject(RejectReason::DeviceInFailState)
                                                       : device_verify(state, manifest, firmware, now);
    if (!verdict.accepted()) {
        return {state, verdict, RejectionRecord{manifest.firmware_id, manifest.version, *verdict.reason, now}};
    }
    DeviceUpdateState next = state;
    const Slot target = state.inactive_slot();
    next.slot(target) = installed_slot(manifest);
    next.active_slot = target;
    next.mode = Mode::Running;
    return {std::move(next), verdict, std::nullopt};
}

DeviceUpdateState interrupt_update(const DeviceUpdateState& state, const FirmwareManifest& manifest,
                                   ByteView firmware, double cut_point)
{
    if (!(cut_point >= 0.0 && cut_point < 1.0)) {
        throw Error(Errc::PreconditionViolated, "cut_point must lie in [0, 1)");
    }
    if (state.mode == Mode::FailState) return state;

    const auto written = static_cast<std::size_t>(std::floor(cut_point * static_cast<double>(firmware.size())));
    DeviceUpdateState next = state;
    auto& slot = next.slot(state.inactive_slot());
    slot.image_digest = crypto::sha256(firmware.first(std::min(written, firmware.size())));
    slot.version = manifest.version;
    slot.gen_time = manifest.token.gen_time;
    slot.verified = false;
    next.mode = Mode::Updating;
    return next;
}

BootResult boot(const DeviceUpdateState& state)
{
    DeviceUpdateState next = state;
    if (state.active().verified) {
        next.mode = Mode::Running;
        return {std::move(next), state.active_slot};
    }
    const Slot other = state.inactive_slot();
    if (state.slot(other).verified) {
        next.active_slot = other;
        next.mode = Mode::Running;
        return {std::move(next), other};
    }
    next.mode = Mode::FailState;
    return {std::move(next), std::nullopt};
}

DeviceUpdateState recover_to_trusted(const DeviceUpdateState& state, const FirmwareManifest& factory_manifest,
                                     ByteView factory_firmware, Tick now)
{
    if (state.mode != Mode::FailState) {
        throw Error(Errc::PreconditionViolated, "recovery is only possible from FailState");
    }
    const auto verdict = run_checks(state, factory_manifest, factory_firmware, now, false);
    if (!verdict.accepted()) throw RecoveryRefused(*verdict.reason);

    DeviceUpdateState next = state;
    next.slots[0] = installed_slot(factory_manifest);
    next.active_slot = Slot::A;
    next.mode = Mode::Running;
    next.needs_reprovision = true;
    return next;
}

}  // namespace fleetguard::update
