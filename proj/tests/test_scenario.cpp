#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fleetguard/error.hpp"
#include "fleetguard/scenario.hpp"
#include "scenario_oracle.hpp"

using namespace fleetguard;
using namespace fleetguard::sim;
using nlohmann::json;

namespace {

const std::string kScenarios = FLEETGUARD_SCENARIOS;

ScenarioConfig bundled(const std::string& name)
{
    return load_scenario(kScenarios + "/" + name + ".json");
}

json minimal()
{
    return json::parse(R"({"seed": 3, "duration": 200,
        "devices": [{"id": "a", "secret": "S!A", "owner": "ann"}, {"id": "b", "secret": "S!B"}],
        "detector": {"enabled": false}})");
}

/// Path of the ConfigError thrown by parse + validate, or "" if none.
std::string error_path(const json& j, Errc* code = nullptr)
{
    try {
        validate(parse_scenario(j));
    } catch (const ConfigError& e) {
        if (code) *code = e.code();
        return e.path();
    }
    return "";
}

std::vector<const EventRecord*> events_of(const ScenarioReport& r, const std::string& kind)
{
    std::vector<const EventRecord*> out;
    for (const auto& e : r.events) {
        if (e.kind == kind) out.push_back(&e);
    }
    return out;
}

std::string serialize(const ScenarioReport& r)
{
    std::ostringstream s;
    for (const auto& e : r.events) s << to_json(e).dump() << '\n';
    for (const auto& a : r.anomalies) s << detector::to_json(a).dump() << '\n';
    for (const auto& a : r.alerts) s << deception::to_json(a).dump() << '\n';
    telemetry::write_csv(s, r.telemetry);
    for (const auto& [id, d] : r.devices) s << id << update::to_json(d.state).dump() << identity::to_json(d.record).dump();
    s << to_json(r.stats).dump();
    return s.str();
}

}  // namespace

TEST_CASE("parse: defaults and groups")
{
    auto j = minimal();
    j["device_groups"] = json::parse(R"([{"count": 3, "prefix": "n-", "owner_prefix": "u-", "max_packets": 2}])");
    const auto c = parse_scenario(j);
    REQUIRE(c.devices.size() == 5);
    CHECK(c.devices[2].id == "n-0001");
    CHECK(c.devices[4].id == "n-0003");
    CHECK(c.devices[4].owner == "u-0003");
    CHECK(c.devices[4].max_packets == 2);
    CHECK(c.devices[1].owner.empty());
    CHECK(c.devices[0].link == "broadband");
    CHECK(std::any_of(c.links.begin(), c.links.end(), [](const LinkSpec& l) { return l.name == "sigfox" && l.mtu == 12; }));
    CHECK_NOTHROW(validate(c));
}

TEST_CASE("parse: errors name the offending field")
{
    auto j = minimal();
    j["extra"] = 1;
    CHECK(error_path(j) == "extra");

    j = minimal();
    j["devices"][1]["secret"] = 5;
    CHECK(error_path(j) == "devices[1].secret");

    j = minimal();
    j["devices"][1]["id"] = "a";
    CHECK(error_path(j) == "devices[1].id");

    j = minimal();
    j["devices"][0]["link"] = "carrier-pigeon";
    CHECK(error_path(j) == "devices[0].link");

    j = minimal();
    j["devices"][0]["duty_cycle"] = 0.0;
    CHECK(error_path(j) == "devices[0].duty_cycle");

    j = minimal();
    j["attacks"] = json::parse(R"([{"kind": "traffic_flood", "device": "a", "start": 500}])");
    CHECK(error_path(j) == "attacks[0].start");

    j = minimal();
    j["attacks"] = json::parse(R"([{"kind": "laser", "device": "a"}])");
    Errc code{};
    CHECK(error_path(j, &code) == "attacks[0].kind");
    CHECK(code == Errc::UnknownAttackKind);

    j = minimal();
    j["links"] = json::parse(R"([{"name": "lossy", "drop_rate": 1.0}])");
    CHECK(error_path(j) == "links[0].drop_rate");

    j = minimal();
    j["deception"] = json::parse(R"({"canary_ports": [443]})");
    CHECK(error_path(j, &code) == "deception.canary_ports[0]");
    CHECK(code == Errc::PortInUse);

    j = minimal();
    j["deception"] = json::parse(R"({"mtd_interval": 10, "mtd_pool_size": 1})");
    CHECK(error_path(j, &code) == "deception.mtd_pool_size");
    CHECK(code == Errc::PoolTooSmall);

    j = minimal();
    j["operations"] = json::parse(R"([{"at": 5, "action": "reprovision", "device": "a"}])");
    CHECK(error_path(j) == "operations[0]");

    j = minimal();
    j["detector"] = json::parse(R"({"window": 8, "baseline_buckets": 300})");
    CHECK(error_path(j) == "detector.baseline_buckets");

    try {
        load_scenario(kScenarios + "/does-not-exist.json");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::Io);
    }
}

TEST_CASE("empty scenario gives an empty report")
{
    const auto r = run_scenario(bundled("empty"));
    CHECK(r.events.empty());
    CHECK(r.devices.empty());
    CHECK(r.anomalies.empty());
    CHECK(r.alerts.empty());
    CHECK(r.telemetry.empty());
}

TEST_CASE("same config, same report; different seed, different report")
{
    auto c = bundled("lossy_link");
    const auto a = serialize(run_scenario(c));
    CHECK(a == serialize(run_scenario(c)));
    c.seed += 1;
    CHECK(a != serialize(run_scenario(c)));
}

TEST_CASE("event log times never go backwards")
{
    for (const auto* name : {"lifecycle", "offgrid_sigfox", "canary_probe"}) {
        const auto r = run_scenario(bundled(name));
        CAPTURE(name);
        CHECK(std::is_sorted(r.events.begin(), r.events.end(),
                             [](const EventRecord& x, const EventRecord& y) { return x.time < y.time; }));
    }
}

TEST_CASE("rollback_replay: Reject(Rollback), device stays on the newer version")
{
    const auto r = run_scenario(bundled("rollback_replay"));
    const auto verdicts = events_of(r, "update_verdict");
    const auto rejected = std::count_if(verdicts.begin(), verdicts.end(), [](const EventRecord* e) {
        return e->actor == "cam-01" && e->detail["verdict"] == "Reject(Rollback)";
    });
    CHECK(rejected == 1);
    CHECK(r.devices.at("cam-01").state.active().version == 2);
    CHECK(r.stats.unverified_boots == 0);
}

TEST_CASE("tamper_firmware: Reject(DigestMismatch)")
{
    const auto r = run_scenario(bundled("tamper_firmware"));
    const auto verdicts = events_of(r, "update_verdict");
    CHECK(std::any_of(verdicts.begin(), verdicts.end(), [](const EventRecord* e) {
        return e->actor == "plc-02" && e->detail["verdict"] == "Reject(DigestMismatch)";
    }));
    CHECK(r.devices.at("plc-02").state.active().version == 2);
    CHECK(r.stats.unverified_boots == 0);
}

TEST_CASE("identity_theft flags exactly the victim")
{
    const auto r = run_scenario(bundled("identity_theft"));
    CHECK(r.clone_flags == std::vector<std::string>{"lock-02"});
}

TEST_CASE("dictionary_attack: only mismatches, and the detector sees the session spike")
{
    const auto c = bundled("dictionary_attack");
    const auto r = run_scenario(c);
    const auto failed = events_of(r, "claim_failed");
    CHECK(failed.size() == c.attacks[0].attempts);
    for (const auto* e : failed) CHECK(e->detail["error"] == "SecretMismatch");
    CHECK(r.stats.attacker_claims_succeeded == 0);
    CHECK(r.devices.at("hub-01").record.status == identity::Status::Unprovisioned);

    const auto& a = c.attacks[0];
    const auto m = c.detector.config.profile_config.window_m;
    bool sessions_flagged = false;
    for (const auto& x : r.anomalies) {
        CHECK(x.device_id == "hub-01");
        CHECK(x.time + static_cast<Tick>(m) > a.start);
        CHECK(x.time < a.start + a.duration);
        sessions_flagged = sessions_flagged || x.metric == telemetry::Metric::SessionsIn;
    }
    CHECK(sessions_flagged);
}

TEST_CASE("traffic_flood: anomalies match the brute-force oracle and sit on the flood")
{
    const auto c = bundled("traffic_flood");
    const auto r = run_scenario(c);
    const auto& flood = c.attacks[0];
    const auto m = static_cast<Tick>(c.detector.config.profile_config.window_m);
    REQUIRE_FALSE(r.anomalies.empty());
    for (const auto& a : r.anomalies) {
        CHECK(a.device_id == flood.device);
        CHECK(a.time + m > flood.start);
        CHECK(a.time < flood.start + flood.duration);
    }
    for (const auto& dev : c.devices) {
        CAPTURE(dev.id);
        const auto expected = scenario_oracle::expected_anomalies(c, r, dev.id);
        const auto got = scenario_oracle::reported(r, dev.id);
        CHECK(scenario_oracle::subset(expected.required, got));
        CHECK(scenario_oracle::subset(got, expected.allowed));
    }
}

TEST_CASE("canary_probe raises alerts for the probing actor")
{
    const auto c = bundled("canary_probe");
    const auto r = run_scenario(c);
    REQUIRE_FALSE(r.alerts.empty());
    for (const auto& a : c.attacks) {
        CHECK(std::any_of(r.alerts.begin(), r.alerts.end(), [&](const deception::Alert& x) {
            return x.actor == a.actor && x.device_id == a.device && x.time >= a.start;
        }));
    }
    // Planted canaries never break verification.
    CHECK(r.stats.updates_rejected == 0);
    CHECK(r.stats.updates_accepted > 0);
}

TEST_CASE("off-grid devices finish interrupted updates, never FailState")
{
    const auto c = bundled("offgrid_sigfox");
    const auto r = run_scenario(c);
    CHECK(r.stats.transfers_interrupted > 0);
    CHECK(r.stats.fail_states == 0);
    for (const auto& [id, d] : r.devices) {
        CAPTURE(id);
        CHECK(d.state.mode != update::Mode::FailState);
        CHECK(d.last_booted.has_value());
        CHECK(d.state.active().version == c.campaigns[0].version);
    }
}

TEST_CASE("links: conservation and loss")
{
    for (const auto* name : {"rollback_replay", "tamper_firmware", "offgrid_sigfox", "lossy_link", "fleet_scale"}) {
        const auto c = bundled(name);
        const auto r = run_scenario(c);
        CAPTURE(name);
        const auto& s = r.stats;
        CHECK(s.frames_delivered + s.frames_dropped + s.frames_lost_offline == s.frames_sent);
        const bool perfect = std::all_of(c.devices.begin(), c.devices.end(), [&](const DeviceSpec& d) {
            const auto link = std::find_if(c.links.begin(), c.links.end(), [&](const LinkSpec& l) { return l.name == d.link; });
            return d.duty_cycle == 1.0 && link->drop_rate == 0.0;
        });
        if (perfect) CHECK(s.missing_fragment_events == 0);
    }
    const auto lossy = run_scenario(bundled("lossy_link"));
    CHECK(lossy.stats.frames_dropped > 0);
    CHECK(lossy.stats.missing_fragment_events > 0);
    CHECK(lossy.stats.updates_accepted == 2);
}

TEST_CASE("lifecycle: blacklisted devices get no updates and no claims")
{
    const auto r = run_scenario(bundled("lifecycle"));
    CHECK(r.stats.blacklisted_updates == 0);
    CHECK(r.stats.blacklisted_claims == 0);
    for (const auto* e : events_of(r, "transfer_started")) CHECK(e->detail["device"] != "tv-01");
    CHECK(events_of(r, "update_skipped").size() == 1);
    CHECK(r.devices.at("tv-01").record.status == identity::Status::Blacklisted);
    CHECK(r.devices.at("tv-02").record.owner == "judy");
    CHECK(r.devices.at("tv-02").state.active().version == 2);
}

TEST_CASE("every bundled scenario keeps the safety properties")
{
    for (const auto& entry : std::filesystem::directory_iterator(kScenarios)) {
        if (entry.path().extension() != ".json" || entry.path().stem() == "fleet_scale") continue;
        CAPTURE(entry.path().filename().string());
        const auto r = run_scenario(load_scenario(entry.path()));
        CHECK(r.stats.unverified_boots == 0);
        CHECK(r.stats.blacklisted_updates == 0);
        CHECK(r.stats.blacklisted_claims == 0);
        CHECK(r.stats.attacker_claims_succeeded == 0);
    }
}

TEST_CASE("write_report lays out the directory")
{
    const auto dir = std::filesystem::temp_directory_path() / "fleetguard-report-test";
    std::filesystem::remove_all(dir);
    const auto r = run_scenario(bundled("canary_probe"));
    write_report(r, dir);
    for (const auto* f : {"events.jsonl", "telemetry.csv", "anomalies.jsonl", "alerts.jsonl", "devices.json"}) {
        CHECK(std::filesystem::exists(dir / f));
    }
    std::ifstream in(dir / "devices.json");
    const auto devices = json::parse(in);
    CHECK(devices["devices"].size() == r.devices.size());
    std::ifstream csv(dir / "telemetry.csv");
    CHECK(telemetry::ingest_csv(csv) == r.telemetry);
}
