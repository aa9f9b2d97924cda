#include "fleetguard/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "fleetguard/error.hpp"
#include "fleetguard/matrix_profile.hpp"

namespace fleetguard::sim {

namespace {

using nlohmann::json;

/// Typed access to one JSON object that reports errors by path.
class Fields
{
public:
    Fields(const json& j, std::string path, const std::vector<std::string_view>& known)
        : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
        for (const auto& [key, value] : j_.items()) {
            if (std::find(known.begin(), known.end(), key) == known.end()) {
                throw ConfigError(at(key), "unknown field");
            }
        }
    }

    std::string at(std::string_view key) const
    {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    bool has(std::string_view key) const { return j_.contains(std::string(key)); }

    template <typename T>
    T get(std::string_view key, T fallback) const
    {
        if (!j_.contains(std::string(key))) return fallback;
        return convert<T>(key);
    }

    template <typename T>
    T require(std::string_view key) const
    {
        if (!j_.contains(std::string(key))) throw ConfigError(at(key), "required field missing");
        return convert<T>(key);
    }

    const json& raw(std::string_view key) const { return j_.at(std::string(key)); }

private:
    template <typename T>
    T convert(std::string_view key) const
    {
        const auto& v = j_.at(std::string(key));
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(at(key), "expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_integer() && !v.is_number_unsigned() && v.template get<std::int64_t>() < 0) {
                    throw ConfigError(at(key), "must not be negative");
                }
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(at(key), "expected a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(at(key), "expected a string");
        }
        try {
            return v.template get<T>();
        } catch (const json::exception&) {
            throw ConfigError(at(key), "wrong type");
        }
    }

    const json& j_;
    std::string path_;
};

std::string indexed(const std::string& path, std::size_t i)
{
    return path + "[" + std::to_string(i) + "]";
}

const json& array_at(const json& root, const std::string& key, const std::string& path)
{
    const auto& a = root.at(key);
    if (!a.is_array()) throw ConfigError(path, "expected an array");
    return a;
}

const std::vector<std::string_view> kDeviceFields = {
    "id",           "secret",        "owner",       "channel",        "firmware_version", "link",
    "duty_cycle",   "duty_period",   "provision_at", "traffic_period", "max_packets",      "services"};

DeviceSpec parse_device_fields(const Fields& f, const json& j, const std::string& path, DeviceSpec d)
{
    d.id = f.get<std::string>("id", d.id);
    d.secret = f.get<std::string>("secret", d.secret);
    d.owner = f.get<std::string>("owner", d.owner);
    if (f.has("channel")) {
        try {
            d.channel = identity::parse_channel(f.require<std::string>("channel"));
        } catch (const Error&) {
            throw ConfigError(f.at("channel"), "unknown claim channel");
        }
    }
    d.firmware_version = f.get<std::uint64_t>("firmware_version", d.firmware_version);
    d.link = f.get<std::string>("link", d.link);
    d.duty_cycle = f.get<double>("duty_cycle", d.duty_cycle);
    d.duty_period = f.get<Tick>("duty_period", d.duty_period);
    d.provision_at = f.get<Tick>("provision_at", d.provision_at);
    d.traffic_period = f.get<Tick>("traffic_period", d.traffic_period);
    d.max_packets = f.get<std::uint32_t>("max_packets", d.max_packets);
    if (j.contains("services")) {
        const auto& s = array_at(j, "services", f.at("services"));
        d.services.clear();
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!s[i].is_number_unsigned() || s[i].get<std::uint64_t>() > 65535) {
                throw ConfigError(indexed(f.at("services"), i), "expected a port number");
            }
            d.services.push_back(s[i].get<std::uint16_t>());
        }
    }
    (void)path;
    return d;
}

DeviceSpec parse_device(const json& j, const std::string& path)
{
    Fields f(j, path, kDeviceFields);
    auto d = parse_device_fields(f, j, path, DeviceSpec{});
    if (!f.has("id")) throw ConfigError(f.at("id"), "required field missing");
    if (!f.has("secret")) throw ConfigError(f.at("secret"), "required field missing");
    return d;
}

std::vector<DeviceSpec> parse_group(const json& j, const std::string& path)
{
    const std::vector<std::string_view> known = {
        "count",      "prefix",      "secret_prefix", "owner_prefix",   "channel",     "firmware_version",
        "link",       "duty_cycle",  "duty_period",   "provision_at",   "traffic_period", "max_packets",
        "services"};
    Fields f(j, path, known);
    const auto count = f.require<std::size_t>("count");
    const auto prefix = f.get<std::string>("prefix", "dev-");
    const auto secret_prefix = f.get<std::string>("secret_prefix", "claim-");
    const auto owner_prefix = f.get<std::string>("owner_prefix", "");
    const auto tmpl = parse_device_fields(f, j, path, DeviceSpec{});

    std::vector<DeviceSpec> out;
    for (std::size_t i = 1; i <= count; ++i) {
        char num[16];
        std::snprintf(num, sizeof(num), "%04zu", i);
        DeviceSpec d = tmpl;
        d.id = prefix + num;
        d.secret = secret_prefix + num;
        d.owner = owner_prefix.empty() ? "" : owner_prefix + num;
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<std::uint16_t> parse_ports(const json& j, const std::string& path)
{
    if (!j.is_array()) throw ConfigError(path, "expected an array");
    std::vector<std::uint16_t> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number_unsigned() || j[i].get<std::uint64_t>() == 0 || j[i].get<std::uint64_t>() > 65535) {
            throw ConfigError(indexed(path, i), "expected a port number");
        }
        out.push_back(j[i].get<std::uint16_t>());
    }
    return out;
}

std::vector<std::string> parse_strings(const json& j, const std::string& path)
{
    if (!j.is_array()) throw ConfigError(path, "expected an array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_string()) throw ConfigError(indexed(path, i), "expected a string");
        out.push_back(j[i].get<std::string>());
    }
    return out;
}

AttackSpec parse_attack(const json& j, const std::string& path)
{
    Fields f(j, path,
             {"kind", "device", "start", "duration", "actor", "factor", "attempts", "dictionary", "target", "port"});
    AttackSpec a;
    const auto kind = f.require<std::string>("kind");
    try {
        a.kind = parse_attack_kind(kind);
    } catch (const Error&) {
        throw ConfigError(f.at("kind"), "unknown attack kind '" + kind + "'", Errc::UnknownAttackKind);
    }
    a.device = f.require<std::string>("device");
    a.start = f.require<Tick>("start");
    a.duration = f.get<Tick>("duration", a.duration);
    a.actor = f.get<std::string>("actor", a.actor);
    a.factor = f.get<double>("factor", a.factor);
    a.attempts = f.get<std::size_t>("attempts", a.attempts);
    if (f.has("dictionary")) a.dictionary = parse_strings(f.raw("dictionary"), f.at("dictionary"));
    a.target = f.get<std::string>("target", a.target);
    a.port = f.get<std::uint16_t>("port", a.port);
    return a;
}

}  // namespace

std::string_view to_string(AttackKind k)
{
    switch (k) {
        case AttackKind::RollbackReplay: return "rollback_replay";
        case AttackKind::TamperFirmware: return "tamper_firmware";
        case AttackKind::IdentityTheft: return "identity_theft";
        case AttackKind::DictionaryAttack: return "dictionary_attack";
        case AttackKind::TrafficFlood: return "traffic_flood";
        case AttackKind::CanaryProbe: return "canary_probe";
    }
    return "traffic_flood";
}

AttackKind parse_attack_kind(std::string_view s)
{
    for (auto k : {AttackKind::RollbackReplay, AttackKind::TamperFirmware, AttackKind::IdentityTheft,
                   AttackKind::DictionaryAttack, AttackKind::TrafficFlood, AttackKind::CanaryProbe}) {
        if (s == to_string(k)) return k;
    }
    throw Error(Errc::UnknownAttackKind, std::string(s));
}

ScenarioConfig parse_scenario(const json& j)
{
    Fields root(j, "",
                {"seed", "duration", "factory_image_size", "factory_expiry", "links", "devices", "device_groups",
                 "campaigns", "attacks", "operations", "deception", "detector", "description"});
    ScenarioConfig c;
    c.seed = root.require<std::uint64_t>("seed");
    c.duration = root.require<Tick>("duration");
    c.factory_image_size = root.get<std::size_t>("factory_image_size", c.factory_image_size);
    c.factory_expiry = root.get<Tick>("factory_expiry", 0);

    if (root.has("links")) {
        const auto& links = array_at(j, "links", "links");
        for (std::size_t i = 0; i < links.size(); ++i) {
            const auto path = indexed("links", i);
            Fields f(links[i], path, {"name", "mtu", "latency", "drop_rate"});
            LinkSpec l;
            l.name = f.require<std::string>("name");
            l.mtu = f.get<std::size_t>("mtu", l.mtu);
            l.latency = f.get<Tick>("latency", l.latency);
            l.drop_rate = f.get<double>("drop_rate", l.drop_rate);
            c.links.push_back(std::move(l));
        }
    }
    if (root.has("devices")) {
        const auto& devices = array_at(j, "devices", "devices");
        for (std::size_t i = 0; i < devices.size(); ++i) c.devices.push_back(parse_device(devices[i], indexed("devices", i)));
    }
    if (root.has("device_groups")) {
        const auto& groups = array_at(j, "device_groups", "device_groups");
        for (std::size_t i = 0; i < groups.size(); ++i) {
            auto expanded = parse_group(groups[i], indexed("device_groups", i));
            c.devices.insert(c.devices.end(), expanded.begin(), expanded.end());
        }
    }
    if (root.has("campaigns")) {
        const auto& campaigns = array_at(j, "campaigns", "campaigns");
        for (std::size_t i = 0; i < campaigns.size(); ++i) {
            const auto path = indexed("campaigns", i);
            Fields f(campaigns[i], path, {"at", "firmware_id", "version", "image_size", "expiry", "targets", "max_attempts"});
            CampaignSpec s;
            s.at = f.require<Tick>("at");
            s.firmware_id = f.get<std::string>("firmware_id", s.firmware_id);
            s.version = f.require<std::uint64_t>("version");
            s.image_size = f.get<std::size_t>("image_size", s.image_size);
            s.expiry = f.require<Tick>("expiry");
            if (f.has("targets")) s.targets = parse_strings(f.raw("targets"), f.at("targets"));
            s.max_attempts = f.get<std::size_t>("max_attempts", s.max_attempts);
            c.campaigns.push_back(std::move(s));
        }
    }
    if (root.has("attacks")) {
        const auto& attacks = array_at(j, "attacks", "attacks");
        for (std::size_t i = 0; i < attacks.size(); ++i) c.attacks.push_back(parse_attack(attacks[i], indexed("attacks", i)));
    }
    if (root.has("operations")) {
        const auto& ops = array_at(j, "operations", "operations");
        for (std::size_t i = 0; i < ops.size(); ++i) {
            Fields f(ops[i], indexed("operations", i), {"at", "action", "device", "owner", "secret"});
            OperationSpec o;
            o.at = f.require<Tick>("at");
            o.action = f.require<std::string>("action");
            o.device = f.require<std::string>("device");
            o.owner = f.get<std::string>("owner", "");
            o.secret = f.get<std::string>("secret", "");
            c.operations.push_back(std::move(o));
        }
    }
    if (root.has("deception")) {
        Fields f(j.at("deception"), "deception", {"canaries", "canary_ports", "mtd_interval", "mtd_pool_size"});
        c.deception.canaries = f.get<bool>("canaries", false);
        if (f.has("canary_ports")) c.deception.canary_ports = parse_ports(f.raw("canary_ports"), f.at("canary_ports"));
        c.deception.mtd_interval = f.get<Tick>("mtd_interval", 0);
        c.deception.mtd_pool_size = f.get<std::size_t>("mtd_pool_size", 0);
    }
    if (root.has("detector")) {
        Fields f(j.at("detector"), "detector",
                 {"enabled", "window", "exclusion", "quantile", "margin", "metrics", "interval", "baseline_buckets"});
        auto& d = c.detector;
        d.enabled = f.get<bool>("enabled", true);
        const auto window = f.get<std::size_t>("window", d.config.profile_config.window_m);
        d.config.profile_config = mp::ProfileConfig::for_window(window);
        d.config.profile_config.exclusion = f.get<std::size_t>("exclusion", d.config.profile_config.exclusion);
        d.config.quantile = f.get<double>("quantile", d.config.quantile);
        d.config.margin = f.get<double>("margin", d.config.margin);
        if (f.has("metrics")) {
            const auto names = parse_strings(f.raw("metrics"), f.at("metrics"));
            d.metrics.clear();
            for (std::size_t i = 0; i < names.size(); ++i) {
                try {
                    d.metrics.push_back(telemetry::parse_metric(names[i]));
                } catch (const Error&) {
                    throw ConfigError(indexed(f.at("metrics"), i), "unknown metric '" + names[i] + "'");
                }
            }
        }
        d.interval = f.get<Tick>("interval", d.interval);
        d.baseline_buckets = f.get<std::size_t>("baseline_buckets", 0);
    }

    // Implicit links so small scenarios need not declare them.
    auto ensure_link = [&](LinkSpec l) {
        if (std::none_of(c.links.begin(), c.links.end(), [&](const LinkSpec& x) { return x.name == l.name; })) {
            c.links.push_back(std::move(l));
        }
    };
    ensure_link({"broadband", 1500, 1, 0.0});
    ensure_link({"sigfox", 12, 2, 0.0});

    const Tick buckets = c.duration > 0 && c.detector.interval > 0
                             ? (c.duration + c.detector.interval - 1) / c.detector.interval
                             : 0;
    if (c.detector.baseline_buckets == 0 && buckets > 0) {
        const auto min_len = static_cast<Tick>(mp::min_series_length(c.detector.config.profile_config));
        c.detector.baseline_buckets = static_cast<std::size_t>(std::min(buckets, std::max(min_len, buckets / 4)));
    }
    if (c.factory_expiry == 0) c.factory_expiry = c.duration * 10 + 1000;

    validate(c);
    return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& ex) {
        throw ConfigError("<root>", std::string("invalid JSON: ") + ex.what());
    }
    return parse_scenario(j);
}

void validate(const ScenarioConfig& c)
{
    if (c.duration <= 0) throw ConfigError("duration", "must be positive");
    if (c.factory_expiry <= 0) throw ConfigError("factory_expiry", "must be positive");
    if (c.factory_image_size < (c.deception.canaries ? deception::kCanarySize : 1)) {
        throw ConfigError("factory_image_size", "image too small");
    }

    std::set<std::string> link_names;
    for (std::size_t i = 0; i < c.links.size(); ++i) {
        const auto& l = c.links[i];
        const auto path = indexed("links", i);
        if (!link_names.insert(l.name).second) throw ConfigError(path + ".name", "duplicate link '" + l.name + "'");
        if (l.mtu < 1) throw ConfigError(path + ".mtu", "must be >= 1");
        if (l.latency < 0) throw ConfigError(path + ".latency", "must not be negative");
        if (!(l.drop_rate >= 0.0 && l.drop_rate < 1.0)) throw ConfigError(path + ".drop_rate", "must lie in [0, 1)");
    }

    const auto& det = c.detector;
    if (det.interval <= 0) throw ConfigError("detector.interval", "must be positive");
    try {
        det.config.validate();
    } catch (const Error& e) {
        throw ConfigError("detector", e.what());
    }
    if (det.enabled) {
        const auto need = mp::min_series_length(det.config.profile_config);
        const auto buckets = static_cast<std::size_t>((c.duration + det.interval - 1) / det.interval);
        if (buckets < need) throw ConfigError("duration", "too short for the detector window");
        if (det.baseline_buckets < need || det.baseline_buckets > buckets) {
            throw ConfigError("detector.baseline_buckets", "must lie in [" + std::to_string(need) + ", "
                                                               + std::to_string(buckets) + "]");
        }
    }

    std::set<std::string> ids;
    for (std::size_t i = 0; i < c.devices.size(); ++i) {
        const auto& d = c.devices[i];
        const auto path = indexed("devices", i);
        if (d.id.empty()) throw ConfigError(path + ".id", "must not be empty");
        if (!ids.insert(d.id).second) throw ConfigError(path + ".id", "duplicate device id '" + d.id + "'");
        if (d.secret.empty()) throw ConfigError(path + ".secret", "must not be empty");
        if (!link_names.count(d.link)) throw ConfigError(path + ".link", "unknown link '" + d.link + "'");
        if (!(d.duty_cycle > 0.0 && d.duty_cycle <= 1.0)) throw ConfigError(path + ".duty_cycle", "must lie in (0, 1]");
        if (d.duty_period <= 0) throw ConfigError(path + ".duty_period", "must be positive");
        if (d.duty_cycle < 1.0 && d.duty_period % det.interval != 0) {
            throw ConfigError(path + ".duty_period", "must be a multiple of detector.interval");
        }
        if (d.traffic_period < 0) throw ConfigError(path + ".traffic_period", "must not be negative");
        if (d.max_packets < 1) throw ConfigError(path + ".max_packets", "must be >= 1");
        if (d.provision_at < 0 || d.provision_at >= c.duration) {
            throw ConfigError(path + ".provision_at", "must lie within the scenario");
        }
        for (std::size_t k = 0; k < c.deception.canary_ports.size(); ++k) {
            const auto port = c.deception.canary_ports[k];
            if (std::find(d.services.begin(), d.services.end(), port) != d.services.end()) {
                throw ConfigError(indexed("deception.canary_ports", k),
                                  "port " + std::to_string(port) + " is in use on " + d.id, Errc::PortInUse);
            }
        }
    }

    for (std::size_t i = 0; i < c.campaigns.size(); ++i) {
        const auto& s = c.campaigns[i];
        const auto path = indexed("campaigns", i);
        if (s.at <= 0 || s.at >= c.duration) throw ConfigError(path + ".at", "must lie in (0, duration)");
        if (s.expiry <= s.at) throw ConfigError(path + ".expiry", "must be after the release time");
        if (s.version < 1) throw ConfigError(path + ".version", "must be >= 1");
        if (s.image_size < (c.deception.canaries ? deception::kCanarySize : 1)) {
            throw ConfigError(path + ".image_size", "image too small");
        }
        if (s.max_attempts < 1) throw ConfigError(path + ".max_attempts", "must be >= 1");
        for (std::size_t k = 0; k < s.targets.size(); ++k) {
            if (!ids.count(s.targets[k])) throw ConfigError(indexed(path + ".targets", k), "unknown device");
        }
    }

    for (std::size_t i = 0; i < c.attacks.size(); ++i) {
        const auto& a = c.attacks[i];
        const auto path = indexed("attacks", i);
        if (!ids.count(a.device)) throw ConfigError(path + ".device", "unknown device '" + a.device + "'");
        if (a.start < 0 || a.start >= c.duration) throw ConfigError(path + ".start", "must lie within the scenario");
        if (a.duration < 1) throw ConfigError(path + ".duration", "must be >= 1");
        if (a.actor.empty()) throw ConfigError(path + ".actor", "must not be empty");
        if (a.kind == AttackKind::TrafficFlood && !(a.factor >= 1.0)) {
            throw ConfigError(path + ".factor", "must be >= 1");
        }
        if (a.kind == AttackKind::CanaryProbe && a.target != "firmware" && a.target != "port" && a.target != "both") {
            throw ConfigError(path + ".target", "must be firmware, port or both");
        }
    }

    for (std::size_t i = 0; i < c.operations.size(); ++i) {
        const auto& o = c.operations[i];
        const auto path = indexed("operations", i);
        if (o.at < 0 || o.at >= c.duration) throw ConfigError(path + ".at", "must lie within the scenario");
        if (!ids.count(o.device)) throw ConfigError(path + ".device", "unknown device '" + o.device + "'");
        if (o.action != "blacklist" && o.action != "deprovision" && o.action != "reprovision" && o.action != "recover") {
            throw ConfigError(path + ".action", "unknown action '" + o.action + "'");
        }
        if (o.action == "reprovision" && (o.owner.empty() || o.secret.empty())) {
            throw ConfigError(path, "reprovision needs owner and secret");
        }
    }

    if (c.deception.mtd_interval < 0) throw ConfigError("deception.mtd_interval", "must not be negative");
    if (c.deception.mtd_interval > 0 && c.deception.mtd_pool_size < c.devices.size()) {
        throw ConfigError("deception.mtd_pool_size", "pool smaller than the fleet", Errc::PoolTooSmall);
    }
}

nlohmann::ordered_json to_json(const EventRecord& e)
{
    nlohmann::ordered_json j;
    j["time"] = e.time;
    j["actor"] = e.actor;
    j["kind"] = e.kind;
    j["detail"] = e.detail;
    return j;
}

nlohmann::ordered_json to_json(const ScenarioStats& s)
{
    nlohmann::ordered_json j;
    j["frames_sent"] = s.frames_sent;
    j["frames_delivered"] = s.frames_delivered;
    j["frames_dropped"] = s.frames_dropped;
    j["frames_lost_offline"] = s.frames_lost_offline;
    j["missing_fragment_events"] = s.missing_fragment_events;
    j["transfers_completed"] = s.transfers_completed;
    j["transfers_interrupted"] = s.transfers_interrupted;
    j["transfers_abandoned"] = s.transfers_abandoned;
    j["updates_accepted"] = s.updates_accepted;
    j["updates_rejected"] = s.updates_rejected;
    j["boots"] = s.boots;
    j["unverified_boots"] = s.unverified_boots;
    j["blacklisted_updates"] = s.blacklisted_updates;
    j["blacklisted_claims"] = s.blacklisted_claims;
    j["fail_states"] = s.fail_states;
    j["claims_succeeded"] = s.claims_succeeded;
    j["attacker_claims_succeeded"] = s.attacker_claims_succeeded;
    j["heartbeats"] = s.heartbeats;
    return j;
}

void write_report(const ScenarioReport& report, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::Io, "cannot write " + (dir / name).string());
        return out;
    };

    {
        auto out = open("events.jsonl");
        for (const auto& e : report.events) out << to_json(e).dump() << '\n';
    }
    {
        auto out = open("telemetry.csv");
        telemetry::write_csv(out, report.telemetry);
    }
    {
        auto out = open("anomalies.jsonl");
        detector::write_jsonl(out, report.anomalies);
    }
    {
        auto out = open("alerts.jsonl");
        deception::write_jsonl(out, report.alerts);
    }
    {
        auto out = open("devices.json");
        nlohmann::ordered_json devices = nlohmann::ordered_json::array();
        for (const auto& [id, d] : report.devices) {
            nlohmann::ordered_json j;
            j["device_id"] = id;
            j["status"] = identity::to_string(d.record.status);
            j["owner"] = d.record.owner ? nlohmann::ordered_json(*d.record.owner) : nlohmann::ordered_json(nullptr);
            j["needs_reprovision"] = d.record.needs_reprovision || d.state.needs_reprovision;
            j["mode"] = update::to_string(d.state.mode);
            j["active_slot"] = update::to_string(d.state.active_slot);
            j["active_version"] = d.state.active().version;
            j["last_booted"] = d.last_booted ? nlohmann::ordered_json(update::to_string(*d.last_booted))
                                             : nlohmann::ordered_json(nullptr);
            j["slots"] = nlohmann::ordered_json::array();
            for (const auto& s : d.state.slots) {
                j["slots"].push_back({{"image_digest", to_hex(s.image_digest)},
                                      {"version", s.version},
                                      {"gen_time", s.gen_time},
                                      {"verified", s.verified}});
            }
            j["address"] = d.address;
            devices.push_back(std::move(j));
        }
        nlohmann::ordered_json root;
        root["devices"] = std::move(devices);
        out << root.dump(2) << '\n';
    }
}

}  // namespace fleetguard::sim
