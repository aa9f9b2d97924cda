#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fleetguard/deception.hpp"
#include "fleetguard/detector.hpp"
#include "fleetguard/identity.hpp"
#include "fleetguard/telemetry.hpp"
#include "fleetguard/update_protocol.hpp"

namespace fleetguard::sim {

/// A simulated link. Frames are sent one per tick and arrive `latency`
/// ticks later unless dropped.
struct LinkSpec {
    std::string name;
    std::size_t mtu = 1500;
    Tick latency = 1;
    double drop_rate = 0.0;
};

struct DeviceSpec {
    std::string id;
    std::string secret;
    /// Empty: the device is registered but nobody claims it.
    std::string owner;
    identity::Channel channel = identity::Channel::PreProvisioned;
    std::uint64_t firmware_version = 1;
    std::string link = "broadband";
    /// Fraction of each duty period the device is powered. 1 = always on.
    double duty_cycle = 1.0;
    Tick duty_period = 200;
    Tick provision_at = 0;
    /// Traffic period in telemetry buckets; 0 picks one from the device's
    /// random stream (or the duty period for off-grid devices).
    Tick traffic_period = 0;
    std::uint32_t max_packets = 6;
    std::vector<std::uint16_t> services{443};
};

struct CampaignSpec {
    Tick at = 0;
    std::string firmware_id = "fw";
    std::uint64_t version = 2;
    std::size_t image_size = 256;
    Tick expiry = 0;
    /// Empty: every device.
    std::vector<std::string> targets;
    std::size_t max_attempts = 8;
};

enum class AttackKind { RollbackReplay, TamperFirmware, IdentityTheft, DictionaryAttack, TrafficFlood, CanaryProbe };

std::string_view to_string(AttackKind k);
/// Throws Error(UnknownAttackKind).
AttackKind parse_attack_kind(std::string_view s);

struct AttackSpec {
    AttackKind kind = AttackKind::TrafficFlood;
    std::string device;
    Tick start = 0;
    Tick duration = 1;
    std::string actor = "attacker";
    /// traffic_flood: packet multiplier.
    double factor = 10.0;
    /// dictionary_attack: number of guesses and optional word list.
    std::size_t attempts = 20;
    std::vector<std::string> dictionary;
    /// canary_probe: "firmware", "port" or "both"; port 0 = first canary port.
    std::string target = "both";
    std::uint16_t port = 0;
};

/// Operator actions: blacklist, deprovision, reprovision (new owner and
/// secret), recover (factory image, only meaningful in FailState).
struct OperationSpec {
    Tick at = 0;
    std::string action;
    std::string device;
    std::string owner;
    std::string secret;
};

struct DeceptionSpec {
    bool canaries = false;
    std::vector<std::uint16_t> canary_ports;
    Tick mtd_interval = 0;
    std::size_t mtd_pool_size = 0;
};

struct DetectorSpec {
    bool enabled = true;
    detector::DetectorConfig config;
    std::vector<telemetry::Metric> metrics{telemetry::Metric::PacketsIn, telemetry::Metric::PacketsOut,
                                           telemetry::Metric::SessionsIn};
    Tick interval = 1;
    /// Length of the attack-free calibration prefix, in buckets.
    std::size_t baseline_buckets = 0;
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    Tick duration = 0;
    std::size_t factory_image_size = 256;
    Tick factory_expiry = 0;
    std::vector<LinkSpec> links;
    std::vector<DeviceSpec> devices;
    std::vector<CampaignSpec> campaigns;
    std::vector<AttackSpec> attacks;
    std::vector<OperationSpec> operations;
    DeceptionSpec deception;
    DetectorSpec detector;
};

/// Reads the JSON scenario format (see docs/scenario-format.md). Missing
/// optional fields take the defaults above; `device_groups` entries expand
/// into numbered devices. Throws ConfigError naming the offending path, or
/// ConfigError with code UnknownAttackKind.
ScenarioConfig parse_scenario(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Cross-field checks; also run by run_scenario. Throws ConfigError.
void validate(const ScenarioConfig& config);

struct EventRecord {
    Tick time = 0;
    std::string actor;
    std::string kind;
    nlohmann::ordered_json detail;
};

nlohmann::ordered_json to_json(const EventRecord& e);

struct DeviceOutcome {
    identity::DeviceRecord record;
    update::DeviceUpdateState state;
    std::optional<update::Slot> last_booted;
    std::string address;
};

struct ScenarioStats {
    std::uint64_t frames_sent = 0;
    std::uint64_t frames_delivered = 0;
    std::uint64_t frames_dropped = 0;
    std::uint64_t frames_lost_offline = 0;
    std::uint64_t missing_fragment_events = 0;
    std::uint64_t transfers_completed = 0;
    std::uint64_t transfers_interrupted = 0;
    std::uint64_t transfers_abandoned = 0;
    std::uint64_t updates_accepted = 0;
    std::uint64_t updates_rejected = 0;
    std::uint64_t boots = 0;
    std::uint64_t unverified_boots = 0;
    std::uint64_t blacklisted_updates = 0;
    std::uint64_t blacklisted_claims = 0;
    std::uint64_t fail_states = 0;
    std::uint64_t claims_succeeded = 0;
    std::uint64_t attacker_claims_succeeded = 0;
    std::uint64_t heartbeats = 0;
};

nlohmann::ordered_json to_json(const ScenarioStats& s);

struct ScenarioReport {
    std::vector<EventRecord> events;
    std::map<std::string, DeviceOutcome> devices;
    std::vector<detector::AnomalyReport> anomalies;
    std::vector<deception::Alert> alerts;
    std::vector<telemetry::ConnectionEvent> telemetry;
    std::vector<std::string> clone_flags;
    ScenarioStats stats;
};

/// Runs the scenario on a single-threaded event loop. Identical configs
/// give identical reports.
ScenarioReport run_scenario(const ScenarioConfig& config);

/// Writes events.jsonl, telemetry.csv, anomalies.jsonl, alerts.jsonl and
/// devices.json into `dir`, creating it if needed.
void write_report(const ScenarioReport& report, const std::filesystem::path& dir);

}  // namespace fleetguard::sim
