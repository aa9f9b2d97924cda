#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <queue>
#include <set>

#include "fleetguard/crypto.hpp"
#include "fleetguard/error.hpp"
#include "fleetguard/keystore.hpp"
#include "fleetguard/scenario.hpp"
#include "fleetguard/transport.hpp"
#include "fleetguard/tsa.hpp"

namespace fleetguard::sim {

namespace {

using nlohmann::ordered_json;

std::uint64_t pick(crypto::Drbg& rng, std::uint64_t n)
{
    return rng.next_u64() % n;
}

double unit(crypto::Drbg& rng)
{
    return static_cast<double>(rng.next_u64() >> 11) * 0x1.0p-53;
}

struct Release {
    std::string firmware_id;
    std::uint64_t version = 0;
    Bytes image;
    update::FirmwareManifest manifest;
    std::optional<deception::CanaryToken> canary;
};

struct DeviceSim {
    const DeviceSpec* spec = nullptr;
    const LinkSpec* link = nullptr;
    update::DeviceUpdateState state;
    std::optional<update::Slot> last_booted;
    Tick duty_offset = 0;
    Tick on_length = 0;
    std::size_t factory_release = 0;
    std::size_t latest_release = 0;
    crypto::Drbg link_rng{0};
    std::vector<telemetry::ConnectionEvent> telemetry;

    bool always_on() const { return spec->duty_cycle >= 1.0; }

    bool online(Tick t) const
    {
        if (always_on()) return true;
        return (t + duty_offset) % spec->duty_period < on_length;
    }

    Tick next_online(Tick t) const
    {
        if (online(t)) return t;
        const Tick phase = (t + duty_offset) % spec->duty_period;
        return t + (spec->duty_period - phase);
    }
};

keystore::KeyId make_key(keystore::Keystore& keys, std::string name)
{
    keystore::KeyId id(std::move(name));
    keys.generate_key(id);
    return id;
}

struct Transfer {
    std::string device;
    std::size_t release = 0;
    std::string source;
    bool tamper = false;
    std::size_t attempt = 1;
    std::size_t max_attempts = 1;
};

class Simulator
{
public:
    explicit Simulator(const ScenarioConfig& config)
        : config_(config)
        , keys_(config.seed)
        , tsa_(keys_, make_key(keys_, "tsa"))
        , registry_(config.seed)
        , canaries_(crypto::Drbg(config.seed, "canary"))
        , attacker_rng_(config.seed, "attacker")
        , mtd_rng_(config.seed, "mtd")
    {
    }

    ScenarioReport run()
    {
        setup();
        while (!queue_.empty()) {
            auto item = queue_.top();
            queue_.pop();
            now_ = item.time;
            item.fn();
        }
        now_ = config_.duration;
        finish();
        return std::move(report_);
    }

private:
    struct Item {
        Tick time;
        std::uint64_t seq;
        std::function<void()> fn;
        bool operator>(const Item& o) const { return time != o.time ? time > o.time : seq > o.seq; }
    };

    void schedule(Tick t, std::function<void()> fn)
    {
        if (t < 0 || t >= config_.duration) return;
        queue_.push(Item{t, seq_++, std::move(fn)});
    }

    void log(std::string actor, std::string kind, ordered_json detail = ordered_json::object())
    {
        report_.events.push_back(EventRecord{now_, std::move(actor), std::move(kind), std::move(detail)});
    }

    DeviceSim& dev(const std::string& id) { return devices_.at(id); }

    bool blacklisted(const std::string& id) const
    {
        return registry_.record(id).status == identity::Status::Blacklisted;
    }

    std::size_t publish(const std::string& firmware_id, std::uint64_t version, std::size_t image_size,
                        Tick expiry, Tick at)
    {
        crypto::Drbg image_rng(config_.seed, "firmware:" + firmware_id + ":" + std::to_string(version));
        Release r;
        r.firmware_id = firmware_id;
        r.version = version;
        r.image = image_rng.bytes(image_size);
        if (config_.deception.canaries) {
            auto [planted, token] = canaries_.plant(r.image);
            r.image = std::move(planted);
            r.canary = token;
        }
        r.manifest = update::build_manifest(r.image, firmware_id, version, expiry, keys_, publisher_, tsa_, at);
        trusted_.insert(r.manifest.digest);
        releases_.push_back(std::move(r));
        return releases_.size() - 1;
    }

    void setup()
    {
        const auto& det = config_.detector;
        const Tick interval = det.interval;
        const Tick buckets = (config_.duration + interval - 1) / interval;

        for (const auto& l : config_.links) links_[l.name] = &l;

        std::map<std::uint64_t, std::size_t> factory;
        for (const auto& d : config_.devices) {
            if (!factory.count(d.firmware_version)) {
                factory[d.firmware_version] =
                    publish("fw", d.firmware_version, config_.factory_image_size, config_.factory_expiry, 0);
            }
        }

        for (const auto& d : config_.devices) {
            DeviceSim s;
            s.spec = &d;
            s.link = links_.at(d.link);
            s.factory_release = s.latest_release = factory.at(d.firmware_version);
            s.state = update::factory_state(tsa_.public_key(), keys_.public_key(publisher_),
                                            releases_[s.factory_release].manifest);
            s.link_rng = crypto::Drbg(config_.seed, "link:" + d.id);
            if (!s.always_on()) {
                crypto::Drbg duty_rng(config_.seed, "duty:" + d.id);
                s.on_length = std::max<Tick>(1, static_cast<Tick>(std::llround(d.duty_cycle * d.duty_period)));
                s.duty_offset = static_cast<Tick>(pick(duty_rng, static_cast<std::uint64_t>(d.duty_period)));
            }
            devices_.emplace(d.id, std::move(s));
        }

        now_ = 0;
        for (const auto& d : config_.devices) {
            registry_.register_device(d.id, to_bytes(d.secret));
            for (auto port : d.services) ports_.add_service(d.id, port);
            for (auto port : config_.deception.canary_ports) ports_.open_canary_port(d.id, port);
            log(d.id, "device_registered",
                {{"firmware_version", d.firmware_version}, {"link", d.link}, {"duty_cycle", d.duty_cycle}});
        }

        for (const auto& d : config_.devices) generate_traffic(dev(d.id), interval, buckets);
        for (const auto& a : config_.attacks) {
            if (a.kind == AttackKind::TrafficFlood) apply_flood(a);
            if (a.kind == AttackKind::DictionaryAttack) {
                for (std::size_t k = 0; k < a.attempts; ++k) {
                    const Tick t = attempt_time(a, k);
                    auto& tel = dev(a.device).telemetry;
                    tel.push_back({a.device, t, telemetry::Direction::Inbound, telemetry::EventKind::SessionOpen, 0});
                    tel.push_back({a.device, t, telemetry::Direction::Inbound, telemetry::EventKind::SessionClose, 0});
                }
            }
        }

        if (config_.deception.mtd_interval > 0 && !config_.devices.empty()) {
            std::vector<std::string> ids;
            for (const auto& d : config_.devices) ids.push_back(d.id);
            std::vector<std::string> pool;
            for (std::size_t i = 0; i < config_.deception.mtd_pool_size; ++i) {
                char addr[32];
                std::snprintf(addr, sizeof(addr), "10.%zu.%zu.%zu", (i >> 16) & 0xff, (i >> 8) & 0xff, i & 0xff);
                pool.emplace_back(addr);
            }
            mtd_ = deception::mtd_initial(ids, std::move(pool), config_.deception.mtd_interval, mtd_rng_);
            for (Tick t = config_.deception.mtd_interval; t < config_.duration; t += config_.deception.mtd_interval) {
                schedule(t, [this] {
                    *mtd_ = deception::mtd_rotate(*mtd_, now_, mtd_rng_);
                    log("defender", "mtd_rotation", {{"devices", mtd_->assignment.size()}});
                });
            }
        }

        for (const auto& d : config_.devices) {
            const auto* spec = &d;
            schedule(dev(d.id).next_online(d.provision_at), [this, spec] { provision(*spec); });
        }

        for (const auto& c : config_.campaigns) {
            const auto* campaign = &c;
            schedule(c.at, [this, campaign] { run_campaign(*campaign); });
        }

        for (const auto& a : config_.attacks) {
            const auto* attack = &a;
            switch (a.kind) {
                case AttackKind::RollbackReplay:
                case AttackKind::TamperFirmware:
                case AttackKind::CanaryProbe:
                    schedule(a.start, [this, attack] { start_attack(*attack); });
                    break;
                case AttackKind::DictionaryAttack:
                    for (std::size_t k = 0; k < a.attempts; ++k) {
                        schedule(attempt_time(a, k), [this, attack, k] { dictionary_guess(*attack, k); });
                    }
                    break;
                case AttackKind::IdentityTheft: {
                    const Tick step = std::max<Tick>(1, a.duration / 4);
                    for (Tick t = a.start; t < a.start + a.duration; t += step) {
                        schedule(t, [this, attack] { stolen_identity_use(*attack); });
                    }
                    break;
                }
                case AttackKind::TrafficFlood:
                    schedule(a.start, [this, attack] {
                        log(attack->actor, "traffic_flood",
                            {{"device", attack->device}, {"duration", attack->duration}, {"factor", attack->factor}});
                    });
                    break;
            }
        }

        for (const auto& o : config_.operations) {
            const auto* op = &o;
            schedule(o.at, [this, op] { operate(*op); });
        }
    }

    static Tick attempt_time(const AttackSpec& a, std::size_t k)
    {
        return a.start + static_cast<Tick>(k) * a.duration / static_cast<Tick>(std::max<std::size_t>(1, a.attempts));
    }

    void generate_traffic(DeviceSim& s, Tick interval, Tick buckets)
    {
        const auto& d = *s.spec;
        crypto::Drbg rng(config_.seed, "traffic:" + d.id);
        Tick period = d.traffic_period;
        if (period == 0) period = s.always_on() ? 9 + static_cast<Tick>(pick(rng, 32)) : d.duty_period / interval;
        period = std::max<Tick>(1, period);

        struct Phase {
            std::uint32_t out, in;
            std::uint64_t out_size, in_size;
        };
        std::vector<Phase> pattern(static_cast<std::size_t>(period));
        for (auto& p : pattern) {
            p.out = 1 + static_cast<std::uint32_t>(pick(rng, d.max_packets));
            p.in = 1 + static_cast<std::uint32_t>(pick(rng, d.max_packets));
            p.out_size = 64 + pick(rng, 1200);
            p.in_size = 64 + pick(rng, 1200);
        }

        const bool claims = !d.owner.empty();
        for (Tick b = 0; b < buckets; ++b) {
            const Tick t = b * interval;
            if (!s.online(t)) continue;
            const auto phase = static_cast<std::size_t>(b % period);
            const auto& p = pattern[phase];
            for (std::uint32_t k = 0; k < p.out; ++k) {
                s.telemetry.push_back({d.id, t, telemetry::Direction::Outbound, telemetry::EventKind::Packet, p.out_size});
            }
            for (std::uint32_t k = 0; k < p.in; ++k) {
                s.telemetry.push_back({d.id, t, telemetry::Direction::Inbound, telemetry::EventKind::Packet, p.in_size});
            }
            if (phase == 0) {
                s.telemetry.push_back({d.id, t, telemetry::Direction::Outbound, telemetry::EventKind::SessionOpen, 0});
                ++report_.stats.heartbeats;
                if (claims && t >= d.provision_at) observations_.push_back({d.id, "device:" + d.id, t});
            }
            if (period >= 2 && phase == static_cast<std::size_t>(period / 2)) {
                s.telemetry.push_back({d.id, t, telemetry::Direction::Outbound, telemetry::EventKind::SessionClose, 0});
            }
        }
    }

    void apply_flood(const AttackSpec& a)
    {
        auto& tel = dev(a.device).telemetry;
        const auto copies = static_cast<std::size_t>(std::llround(a.factor)) - 1;
        const auto n = tel.size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto e = tel[i];
            if (e.kind != telemetry::EventKind::Packet || e.time < a.start || e.time >= a.start + a.duration) continue;
            for (std::size_t k = 0; k < copies; ++k) tel.push_back(e);
        }
    }

    void provision(const DeviceSpec& d)
    {
        try {
            auto session = registry_.device_connect(d.id, now_);
            if (d.owner.empty()) {
                registry_.close_session(session.session_id);
                log(d.id, "device_connected", {{"session", session.session_id}});
                return;
            }
            identity::ClaimRequest req{d.owner, d.id, to_bytes(d.secret), d.channel};
            auto rec = registry_.claim(session, req);
            registry_.close_session(session.session_id);
            ++report_.stats.claims_succeeded;
            log(d.owner, "claim",
                {{"device", d.id}, {"channel", identity::to_string(d.channel)}, {"status", identity::to_string(rec.status)}});
        } catch (const Error& e) {
            log(d.owner.empty() ? d.id : d.owner, "claim_failed", {{"device", d.id}, {"error", to_string(e.code())}});
        }
    }

    void run_campaign(const CampaignSpec& c)
    {
        const auto idx = publish(c.firmware_id, c.version, c.image_size, c.expiry, now_);
        log("publisher", "release_published",
            {{"firmware_id", c.firmware_id},
             {"version", c.version},
             {"digest", to_hex(releases_[idx].manifest.digest)},
             {"serial", releases_[idx].manifest.token.serial}});
        std::vector<std::string> targets = c.targets;
        if (targets.empty()) {
            for (const auto& d : config_.devices) targets.push_back(d.id);
        }
        for (const auto& id : targets) {
            dev(id).latest_release = idx;
            start_transfer(Transfer{id, idx, "publisher", false, 1, c.max_attempts});
        }
    }

    void start_transfer(Transfer tr)
    {
        auto& s = dev(tr.device);
        if (blacklisted(tr.device)) {
            log("proxy", "update_skipped", {{"device", tr.device}, {"reason", "blacklisted"}});
            return;
        }
        if (!s.online(now_)) {
            const Tick t = s.next_online(now_);
            schedule(t, [this, tr] { start_transfer(tr); });
            return;
        }

        const auto& rel = releases_[tr.release];
        Bytes image = rel.image;
        if (tr.tamper) {
            for (std::size_t k = 0; k < std::min<std::size_t>(4, image.size()); ++k) {
                image[(k * 37) % image.size()] ^= 0x5a;
            }
        }
        const Bytes manifest_bytes = update::encode(rel.manifest);
        ByteWriter w;
        w.bytes(manifest_bytes);
        w.bytes(image);
        const Bytes payload = std::move(w).data();

        std::vector<Bytes> frames;
        try {
            frames = transport::fragment(payload, s.link->mtu, static_cast<std::uint16_t>(message_counter_++ & 0xffff));
        } catch (const Error& e) {
            log("proxy", "transfer_failed", {{"device", tr.device}, {"error", to_string(e.code())}});
            ++report_.stats.transfers_abandoned;
            return;
        }
        log(tr.source, "transfer_started",
            {{"device", tr.device},
             {"firmware_id", rel.firmware_id},
             {"version", rel.version},
             {"frames", frames.size()},
             {"attempt", tr.attempt}});

        const Tick t0 = now_;
        const Tick latency = s.link->latency;
        std::vector<Bytes> received;
        std::size_t received_bytes = 0;
        bool dropped = false;
        for (std::size_t k = 0; k < frames.size(); ++k) {
            const Tick arrival = t0 + static_cast<Tick>(k) + latency;
            if (!s.online(arrival)) {
                report_.stats.frames_sent += frames.size();
                report_.stats.frames_lost_offline += frames.size() - k;
                const auto image_start = 4 + manifest_bytes.size() + 4;
                double cut = -1.0;
                if (!dropped && received_bytes >= image_start && !image.empty()) {
                    cut = static_cast<double>(received_bytes - image_start) / static_cast<double>(image.size());
                }
                schedule(arrival, [this, tr, cut, image] { interrupted(tr, cut, image); });
                return;
            }
            if (s.link->drop_rate > 0.0 && unit(s.link_rng) < s.link->drop_rate) {
                ++report_.stats.frames_dropped;
                dropped = true;
            } else {
                ++report_.stats.frames_delivered;
                received_bytes += frames[k].size() - transport::kHeaderSize;
                received.push_back(std::move(frames[k]));
            }
        }
        report_.stats.frames_sent += frames.size();
        const Tick done = t0 + static_cast<Tick>(frames.size()) - 1 + latency;
        schedule(done, [this, tr, received = std::move(received)] { complete(tr, received); });
    }

    void retry(Transfer tr, Tick at, const char* why)
    {
        if (tr.attempt >= tr.max_attempts) {
            ++report_.stats.transfers_abandoned;
            log("proxy", "transfer_abandoned", {{"device", tr.device}, {"reason", why}, {"attempts", tr.attempt}});
            return;
        }
        ++tr.attempt;
        schedule(at, [this, tr] { start_transfer(tr); });
    }

    void interrupted(const Transfer& tr, double cut, const Bytes& image)
    {
        auto& s = dev(tr.device);
        ++report_.stats.transfers_interrupted;
        const auto& rel = releases_[tr.release];
        if (cut >= 0.0 && cut < 1.0) s.state = update::interrupt_update(s.state, rel.manifest, image, cut);
        ordered_json detail = {{"device", tr.device}, {"version", rel.version}, {"mode", update::to_string(s.state.mode)}};
        detail["cut"] = cut < 0.0 ? ordered_json(nullptr) : ordered_json(cut);
        log(tr.device, "transfer_interrupted", std::move(detail));
        const Tick back = s.next_online(now_);
        schedule(back, [this, tr] {
            do_boot(tr.device);
            retry(tr, now_, "interrupted");
        });
    }

    void complete(const Transfer& tr, const std::vector<Bytes>& received)
    {
        Bytes payload;
        try {
            payload = transport::reassemble(received);
        } catch (const Error& e) {
            ++report_.stats.missing_fragment_events;
            log(tr.device, "missing_fragment", {{"error", to_string(e.code())}, {"received", received.size()}});
            retry(tr, now_ + 1, "missing_fragment");
            return;
        }
        ++report_.stats.transfers_completed;
        ByteReader r(payload);
        const auto manifest = update::decode(r.bytes());
        const Bytes image = r.bytes();
        deliver(tr, manifest, image);
    }

    void deliver(const Transfer& tr, const update::FirmwareManifest& manifest, const Bytes& image)
    {
        auto& s = dev(tr.device);
        if (blacklisted(tr.device)) {
            log("proxy", "update_skipped", {{"device", tr.device}, {"reason", "blacklisted"}});
            return;
        }
        auto result = update::apply_update(s.state, manifest, image, now_);
        log(tr.device, "update_verdict",
            {{"firmware_id", manifest.firmware_id},
             {"version", manifest.version},
             {"source", tr.source},
             {"verdict", update::to_string(result.verdict)}});
        if (!result.verdict.accepted()) {
            ++report_.stats.updates_rejected;
            return;
        }
        ++report_.stats.updates_accepted;
        if (blacklisted(tr.device)) ++report_.stats.blacklisted_updates;
        trusted_.insert(manifest.digest);
        s.state = result.state;
        do_boot(tr.device);
    }

    void do_boot(const std::string& id)
    {
        auto& s = dev(id);
        auto b = update::boot(s.state);
        s.state = b.state;
        ++report_.stats.boots;
        if (!b.booted) {
            ++report_.stats.fail_states;
            log(id, "fail_state");
            return;
        }
        s.last_booted = b.booted;
        const auto& slot = s.state.slot(*b.booted);
        if (!trusted_.count(slot.image_digest)) ++report_.stats.unverified_boots;
        log(id, "boot", {{"slot", update::to_string(*b.booted)}, {"version", slot.version}});
    }

    void start_attack(const AttackSpec& a)
    {
        auto& s = dev(a.device);
        switch (a.kind) {
            case AttackKind::RollbackReplay:
                log(a.actor, "rollback_replay", {{"device", a.device}, {"version", releases_[s.factory_release].version}});
                start_transfer(Transfer{a.device, s.factory_release, a.actor, false, 1, 8});
                break;
            case AttackKind::TamperFirmware:
                log(a.actor, "tamper_firmware", {{"device", a.device}, {"version", releases_[s.latest_release].version}});
                start_transfer(Transfer{a.device, s.latest_release, a.actor, true, 1, 8});
                break;
            case AttackKind::CanaryProbe:
                canary_probe(a);
                break;
            default:
                break;
        }
    }

    void canary_probe(const AttackSpec& a)
    {
        auto& s = dev(a.device);
        log(a.actor, "canary_probe", {{"device", a.device}, {"target", a.target}});
        if (a.target == "firmware" || a.target == "both") {
            const auto& digest = s.state.active().image_digest;
            for (auto& rel : releases_) {
                if (rel.manifest.digest != digest || !rel.canary) continue;
                deception::ReadEvent read{0, rel.image.size(), now_, a.actor};
                if (auto alert = deception::check_access(*rel.canary, a.device, read)) raise(*alert);
                break;
            }
        }
        if ((a.target == "port" || a.target == "both") && !config_.deception.canary_ports.empty()) {
            const auto port = a.port != 0 ? a.port : config_.deception.canary_ports.front();
            if (auto alert = ports_.record_connection(a.device, port, a.actor, now_)) raise(*alert);
        }
    }

    void raise(const deception::Alert& alert)
    {
        report_.alerts.push_back(alert);
        log("defender", "alert", deception::to_json(alert));
    }

    void dictionary_guess(const AttackSpec& a, std::size_t k)
    {
        std::string guess;
        if (!a.dictionary.empty()) {
            guess = a.dictionary[k % a.dictionary.size()];
        } else {
            guess = "guess-" + to_hex(attacker_rng_.bytes(6));
        }
        try {
            auto session = registry_.device_connect(a.device, now_);
            try {
                identity::ClaimRequest req{a.actor, a.device, to_bytes(guess), identity::Channel::PreProvisioned};
                registry_.claim(session, req);
                registry_.close_session(session.session_id);
                ++report_.stats.attacker_claims_succeeded;
                log(a.actor, "claim", {{"device", a.device}, {"attempt", k}});
            } catch (...) {
                registry_.close_session(session.session_id);
                throw;
            }
        } catch (const Error& e) {
            log(a.actor, "claim_failed", {{"device", a.device}, {"attempt", k}, {"error", to_string(e.code())}});
        }
    }

    void stolen_identity_use(const AttackSpec& a)
    {
        observations_.push_back({a.device, a.actor, now_});
        try {
            auto session = registry_.device_connect(a.device, now_);
            registry_.close_session(session.session_id);
            log(a.actor, "credential_use", {{"device", a.device}, {"session", session.session_id}});
        } catch (const Error& e) {
            log(a.actor, "credential_use", {{"device", a.device}, {"error", to_string(e.code())}});
        }
    }

    void operate(const OperationSpec& o)
    {
        try {
            ordered_json detail = {{"device", o.device}};
            if (o.action == "blacklist") {
                detail["status"] = identity::to_string(registry_.blacklist(o.device).status);
            } else if (o.action == "deprovision") {
                detail["status"] = identity::to_string(registry_.deprovision(o.device).status);
            } else if (o.action == "reprovision") {
                registry_.register_device(o.device, to_bytes(o.secret));
                auto session = registry_.device_connect(o.device, now_);
                identity::ClaimRequest req{o.owner, o.device, to_bytes(o.secret), identity::Channel::PreProvisioned};
                auto rec = registry_.claim(session, req);
                registry_.close_session(session.session_id);
                ++report_.stats.claims_succeeded;
                detail["owner"] = o.owner;
                detail["status"] = identity::to_string(rec.status);
            } else if (o.action == "recover") {
                auto& s = dev(o.device);
                const auto& rel = releases_[s.factory_release];
                s.state = update::recover_to_trusted(s.state, rel.manifest, rel.image, now_);
                detail["status"] = identity::to_string(registry_.mark_recovered(o.device).status);
                log("operator", o.action, std::move(detail));
                do_boot(o.device);
                return;
            }
            log("operator", o.action, std::move(detail));
        } catch (const Error& e) {
            log("operator", "operation_failed",
                {{"action", o.action}, {"device", o.device}, {"error", to_string(e.code())}});
        }
    }

    void finish()
    {
        if (config_.devices.empty()) return;
        const auto& det = config_.detector;

        if (det.enabled) {
            std::vector<detector::AnomalyReport> all;
            for (auto metric : det.metrics) {
                std::map<std::string, telemetry::TelemetrySeries> series;
                std::map<std::string, double> thresholds;
                for (const auto& [id, s] : devices_) {
                    auto full = telemetry::bucketize(s.telemetry, id, metric, det.interval, 0, config_.duration);
                    auto baseline = full;
                    baseline.values.resize(det.baseline_buckets);
                    thresholds[id] = detector::calibrate(baseline, det.config);
                    series.emplace(id, std::move(full));
                }
                auto found = detector::detect_fleet(series, thresholds, det.config);
                all.insert(all.end(), found.begin(), found.end());
            }
            std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
                if (a.device_id != b.device_id) return a.device_id < b.device_id;
                if (a.metric != b.metric) return a.metric < b.metric;
                return a.window_index < b.window_index;
            });
            std::set<std::string> flagged;
            for (const auto& r : all) flagged.insert(r.device_id);
            log("detector", "detector_pass",
                {{"anomalies", all.size()}, {"devices_flagged", std::vector<std::string>(flagged.begin(), flagged.end())}});
            report_.anomalies = std::move(all);
        }

        report_.clone_flags = identity::detect_credential_clone(observations_);
        for (const auto& id : report_.clone_flags) log("detector", "clone_detected", {{"device", id}});

        for (auto& [id, s] : devices_) {
            auto tel = std::move(s.telemetry);
            report_.telemetry.insert(report_.telemetry.end(), tel.begin(), tel.end());
            DeviceOutcome out;
            out.record = registry_.record(id);
            out.state = s.state;
            out.last_booted = s.last_booted;
            if (mtd_) {
                auto it = mtd_->assignment.find(id);
                if (it != mtd_->assignment.end()) out.address = it->second;
            }
            report_.devices.emplace(id, std::move(out));
        }
        std::stable_sort(report_.telemetry.begin(), report_.telemetry.end(), [](const auto& a, const auto& b) {
            return a.time != b.time ? a.time < b.time : a.device_id < b.device_id;
        });
    }

    const ScenarioConfig& config_;
    keystore::Keystore keys_;
    keystore::KeyId publisher_ = make_key(keys_, "publisher");
    tsa::Tsa tsa_;
    identity::Registry registry_;
    deception::CanaryCampaign canaries_;
    deception::CanaryPorts ports_;
    crypto::Drbg attacker_rng_;
    crypto::Drbg mtd_rng_;
    std::optional<deception::MtdSchedule> mtd_;

    std::map<std::string, const LinkSpec*> links_;
    std::map<std::string, DeviceSim> devices_;
    std::vector<Release> releases_;
    std::set<Digest> trusted_;
    std::vector<identity::CredentialObservation> observations_;

    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue_;
    std::uint64_t seq_ = 0;
    std::uint64_t message_counter_ = 0;
    Tick now_ = 0;
    ScenarioReport report_;
};

}  // namespace

ScenarioReport run_scenario(const ScenarioConfig& config)
{
    validate(config);
    Simulator sim(config);
    return sim.run();
}

}  // namespace fleetguard::sim
