#include "fleetguard/identity.hpp"

#include <algorithm>
#include <cstdio>

#include "fleetguard/error.hpp"

namespace fleetguard::identity {

namespace {

constexpr std::string_view kSnapshotFormat = "fleetguard-registry/1";

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

std::string_view to_string(Status s)
{
    switch (s) {
        case Status::Unprovisioned: return "Unprovisioned";
        case Status::Claimed: return "Claimed";
        case Status::Blacklisted: return "Blacklisted";
        case Status::Deprovisioned: return "Deprovisioned";
    }
    return "Unprovisioned";
}

std::string_view to_string(Channel c)
{
    switch (c) {
        case Channel::PreProvisioned: return "PreProvisioned";
        case Channel::DeviceEnteredSecret: return "DeviceEnteredSecret";
        case Channel::DeviceDisplayedKey: return "DeviceDisplayedKey";
        case Channel::CompanionDevice: return "CompanionDevice";
    }
    return "PreProvisioned";
}

Status parse_status(std::string_view s)
{
    for (auto v : {Status::Unprovisioned, Status::Claimed, Status::Blacklisted, Status::Deprovisioned}) {
        if (s == to_string(v)) return v;
    }
    throw Error(Errc::UnknownEnum, "status '" + std::string(s) + "'");
}

Channel parse_channel(std::string_view s)
{
    for (auto v : {Channel::PreProvisioned, Channel::DeviceEnteredSecret, Channel::DeviceDisplayedKey,
                   Channel::CompanionDevice}) {
        if (s == to_string(v)) return v;
    }
    throw Error(Errc::UnknownEnum, "channel '" + std::string(s) + "'");
}

Digest claim_hash(std::string_view device_id, ByteView secret)
{
    ByteWriter w;
    w.str("fleetguard.claim/1").str(device_id).bytes(secret);
    return crypto::sha256(w.data());
}

nlohmann::ordered_json to_json(const DeviceRecord& r)
{
    nlohmann::ordered_json j;
    j["device_id"] = r.device_id;
    j["claim_hash"] = to_hex(r.claim_hash);
    j["owner"] = r.owner ? nlohmann::ordered_json(*r.owner) : nlohmann::ordered_json(nullptr);
    j["device_pub"] = r.device_pub ? keystore::to_json(*r.device_pub) : nlohmann::ordered_json(nullptr);
    j["status"] = to_string(r.status);
    j["needs_reprovision"] = r.needs_reprovision;
    return j;
}

Registry::Registry(std::uint64_t seed)
    : device_keys_(std::make_unique<keystore::Keystore>(seed)), session_rng_(seed, "rendezvous")
{
}

Registry::Registry(const nlohmann::json& snapshot, std::uint64_t seed) : Registry(seed)
{
    try {
        if (snapshot.at("format").get<std::string>() != kSnapshotFormat) {
            throw Error(Errc::DecodeError, "not a registry snapshot");
        }
        session_counter_ = snapshot.at("session_counter").get<std::uint64_t>();
        key_generation_ = snapshot.at("key_generation").get<std::uint64_t>();
        // Keep fresh session ids unpredictable across reloads of the same seed.
        session_rng_ = crypto::Drbg(seed ^ session_counter_, "rendezvous");
        device_keys_ = std::make_unique<keystore::Keystore>(seed ^ (key_generation_ * 0x9e3779b97f4a7c15ULL));
        for (const auto& d : snapshot.at("devices")) {
            DeviceRecord r;
            r.device_id = d.at("device_id").get<std::string>();
            r.claim_hash = to_digest(from_hex(d.at("claim_hash").get<std::string>()));
            if (!d.at("owner").is_null()) r.owner = d.at("owner").get<std::string>();
            if (!d.at("device_pub").is_null()) r.device_pub = keystore::public_key_from_json(d.at("device_pub"));
            r.status = parse_status(d.at("status").get<std::string>());
            r.needs_reprovision = d.at("needs_reprovision").get<bool>();
            records_.emplace(r.device_id, std::move(r));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw Error(Errc::DecodeError, std::string("registry snapshot: ") + ex.what());
    }
}

DeviceRecord& Registry::lookup(const std::string& device_id)
{
    auto it = records_.find(device_id);
    if (it == records_.end()) throw Error(Errc::UnknownDevice, device_id);
    return it->second;
}

DeviceRecord Registry::register_device(const std::string& device_id, ByteView claim_secret)
{
    if (device_id.empty()) throw Error(Errc::PreconditionViolated, "device id must not be empty");
    if (claim_secret.empty()) throw Error(Errc::PreconditionViolated, "claim secret must not be empty");
    std::lock_guard lock(mutex_);
    const auto hash = claim_hash(device_id, claim_secret);
    auto it = records_.find(device_id);
    if (it != records_.end()) {
        auto& r = it->second;
        if (r.status != Status::Deprovisioned) throw Error(Errc::DuplicateDevice, device_id);
        if (crypto::constant_time_equal(r.claim_hash, hash)) {
            throw Error(Errc::SecretReused, "re-registration of " + device_id + " needs a new secret");
        }
        r.claim_hash = hash;
        r.status = Status::Unprovisioned;
        r.device_pub.reset();
        return r;
    }
    DeviceRecord r;
    r.device_id = device_id;
    r.claim_hash = hash;
    return records_.emplace(device_id, std::move(r)).first->second;
}

RendezvousSession Registry::device_connect(const std::string& device_id, Tick now)
{
    std::lock_guard lock(mutex_);
    const auto& r = lookup(device_id);
    if (r.status == Status::Blacklisted) throw Error(Errc::Blacklisted, device_id);

    RendezvousSession s;
    // The counter makes ids unique; the random half makes them unguessable.
    s.session_id = "rv-" + hex64(++session_counter_) + "-" + to_hex(session_rng_.bytes(8));
    s.device_id = device_id;
    s.established_at = now;
    s.encrypted = true;
    sessions_.emplace(s.session_id, s);
    return s;
}

void Registry::close_session(const std::string& session_id)
{
    std::lock_guard lock(mutex_);
    sessions_.erase(session_id);
}

bool Registry::session_active(const std::string& session_id) const
{
    std::lock_guard lock(mutex_);
    return sessions_.count(session_id) > 0;
}

DeviceRecord Registry::claim(const RendezvousSession& session, const ClaimRequest& request)
{
    std::lock_guard lock(mutex_);
    auto sit = sessions_.find(session.session_id);
    if (sit == sessions_.end() || sit->second.device_id != session.device_id) {
        throw Error(Errc::InvalidSession, session.session_id);
    }
    if (request.device_id != session.device_id) {
        throw Error(Errc::InvalidSession, "request for " + request.device_id + " on a session of "
                                              + session.device_id);
    }
    if (request.secret.empty()) throw Error(Errc::PreconditionViolated, "claim secret must not be empty");

    auto& r = lookup(request.device_id);
    if (r.status == Status::Blacklisted) throw Error(Errc::Blacklisted, r.device_id);
    if (!crypto::constant_time_equal(claim_hash(r.device_id, request.secret), r.claim_hash)) {
        throw Error(Errc::SecretMismatch, r.device_id);
    }
    if (r.status == Status::Claimed) throw Error(Errc::AlreadyClaimed, r.device_id);
    if (r.status != Status::Unprovisioned) {
        throw Error(Errc::InvalidState, r.device_id + " is " + std::string(to_string(r.status)));
    }

    const keystore::KeyId key("device/" + r.device_id + "/" + std::to_string(++key_generation_));
    r.device_pub = device_keys_->generate_key(key);
    r.owner = request.user_id;
    r.status = Status::Claimed;
    r.needs_reprovision = false;
    return r;
}

DeviceRecord Registry::blacklist(const std::string& device_id)
{
    std::lock_guard lock(mutex_);
    auto& r = lookup(device_id);
    if (r.status == Status::Deprovisioned) {
        throw Error(Errc::InvalidState, device_id + " is deprovisioned");
    }
    r.status = Status::Blacklisted;
    std::erase_if(sessions_, [&](const auto& kv) { return kv.second.device_id == device_id; });
    return r;
}

DeviceRecord Registry::deprovision(const std::string& device_id)
{
    std::lock_guard lock(mutex_);
    auto& r = lookup(device_id);
    if (r.status != Status::Claimed) throw Error(Errc::NotClaimed, device_id);
    r.status = Status::Deprovisioned;
    r.owner.reset();
    r.needs_reprovision = true;
    return r;
}

DeviceRecord Registry::mark_recovered(const std::string& device_id)
{
    std::lock_guard lock(mutex_);
    auto& r = lookup(device_id);
    if (r.status == Status::Claimed) {
        r.status = Status::Deprovisioned;
        r.owner.reset();
    }
    if (r.status != Status::Blacklisted) r.needs_reprovision = true;
    return r;
}

DeviceRecord Registry::record(const std::string& device_id) const
{
    std::lock_guard lock(mutex_);
    auto it = records_.find(device_id);
    if (it == records_.end()) throw Error(Errc::UnknownDevice, device_id);
    return it->second;
}

std::optional<DeviceRecord> Registry::find(const std::string& device_id) const
{
    std::lock_guard lock(mutex_);
    auto it = records_.find(device_id);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

std::vector<DeviceRecord> Registry::records() const
{
    std::lock_guard lock(mutex_);
    std::vector<DeviceRecord> out;
    for (const auto& [id, r] : records_) out.push_back(r);
    return out;
}

nlohmann::ordered_json Registry::snapshot() const
{
    std::lock_guard lock(mutex_);
    nlohmann::ordered_json j;
    j["format"] = kSnapshotFormat;
    j["session_counter"] = session_counter_;
    j["key_generation"] = key_generation_;
    j["devices"] = nlohmann::ordered_json::array();
    for (const auto& [id, r] : records_) j["devices"].push_back(to_json(r));
    return j;
}

std::vector<std::string> detect_credential_clone(std::span<const CredentialObservation> observations)
{
    // device -> source -> [first, last]
    std::map<std::string, std::map<std::string, std::pair<Tick, Tick>>> spans;
    for (const auto& o : observations) {
        auto [it, fresh] = spans[o.device_id].try_emplace(o.source_tag, o.time, o.time);
        if (!fresh) {
            it->second.first = std::min(it->second.first, o.time);
            it->second.second = std::max(it->second.second, o.time);
        }
    }

    std::vector<std::string> flagged;
    for (const auto& [device, sources] : spans) {
        bool overlap = false;
        for (auto a = sources.begin(); a != sources.end() && !overlap; ++a) {
            for (auto b = std::next(a); b != sources.end(); ++b) {
                if (a->second.first <= b->second.second && b->second.first <= a->second.second) {
                    overlap = true;
                    break;
                }
            }
        }
        if (overlap) flagged.push_back(device);
    }
    return flagged;
}

}  // namespace fleetguard::identity
