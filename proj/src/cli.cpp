#include "fleetguard/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fleetguard/detector.hpp"
#include "fleetguard/error.hpp"
#include "fleetguard/identity.hpp"
#include "fleetguard/keystore.hpp"
#include "fleetguard/matrix_profile.hpp"
#include "fleetguard/scenario.hpp"
#include "fleetguard/telemetry.hpp"
#include "fleetguard/tsa.hpp"
#include "fleetguard/update_protocol.hpp"

namespace fleetguard {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kPassphraseEnv = "FLEETGUARD_PASSPHRASE";

Bytes read_bytes(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& ex) {
        throw Error(Errc::DecodeError, path + ": " + ex.what());
    }
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write " + path);
    out << text;
}

void write_bytes(const std::string& path, ByteView data)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

bool looks_like_json(const Bytes& raw)
{
    const auto it = std::find_if(raw.begin(), raw.end(), [](std::uint8_t c) { return !std::isspace(c); });
    return it != raw.end() && *it == '{';
}

json parse_json_bytes(const Bytes& raw, const std::string& path)
{
    try {
        return json::parse(raw.begin(), raw.end());
    } catch (const json::parse_error& ex) {
        throw Error(Errc::DecodeError, path + ": " + ex.what());
    }
}

/// Manifest in either the JSON rendering or the canonical binary encoding.
update::FirmwareManifest read_manifest(const std::string& path)
{
    const auto raw = read_bytes(path);
    if (looks_like_json(raw)) return update::manifest_from_json(parse_json_bytes(raw, path));
    return update::decode(raw);
}

/// Token as JSON or as a hex dump of its canonical encoding.
tsa::TimestampToken read_token(const std::string& path)
{
    const auto raw = read_bytes(path);
    if (looks_like_json(raw)) return tsa::token_from_json(parse_json_bytes(raw, path));
    std::string hex;
    for (auto c : raw) {
        if (!std::isspace(c)) hex.push_back(static_cast<char>(c));
    }
    return tsa::decode(from_hex(hex));
}

void emit_manifest(const update::FirmwareManifest& m, const std::string& format, const std::string& path,
                   std::ostream& out)
{
    if (format == "binary") {
        const auto bin = update::encode(m);
        if (path.empty()) {
            out.write(reinterpret_cast<const char*>(bin.data()), static_cast<std::streamsize>(bin.size()));
        } else {
            write_bytes(path, bin);
        }
        return;
    }
    const auto text = update::to_json(m).dump(2) + "\n";
    if (path.empty()) {
        out << text;
    } else {
        write_text(path, text);
    }
}

void emit_token(const tsa::TimestampToken& t, const std::string& format, const std::string& path, std::ostream& out)
{
    const auto text = format == "hex" ? to_hex(tsa::encode(t)) + "\n" : tsa::to_json(t).dump(2) + "\n";
    if (path.empty()) {
        out << text;
    } else {
        write_text(path, text);
    }
}

std::vector<telemetry::ConnectionEvent> read_telemetry(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    return telemetry::ingest_csv(in);
}

std::string format_double(double v)
{
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct Keys {
    std::string path;
    std::string passphrase;
};

std::string resolve_passphrase(const std::string& flag)
{
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv(kPassphraseEnv); env && *env) return env;
    throw Error(Errc::InvalidConfig, std::string("no passphrase: pass --passphrase or set ") + kPassphraseEnv);
}

struct SeriesOptions {
    std::string input;
    std::string device;
    std::string metric = "packets_in";
    Tick interval = 1;
    std::optional<Tick> start;
    std::optional<Tick> end;
};

void add_series_options(CLI::App* cmd, SeriesOptions& o, bool device_required)
{
    auto* dev = cmd->add_option("--device", o.device, "Device id");
    if (device_required) dev->required();
    cmd->add_option("--metric", o.metric, "Metric to bucketize")
        ->capture_default_str()
        ->check(CLI::IsMember({"packets_in", "packets_out", "open_connections", "sessions_in", "sessions_out"}));
    cmd->add_option("--interval", o.interval, "Bucket width in ticks")->capture_default_str();
    cmd->add_option("--start", o.start, "First tick (default: earliest event)");
    cmd->add_option("--end", o.end, "End tick, exclusive (default: last event + 1)");
}

std::pair<Tick, Tick> event_range(const std::vector<telemetry::ConnectionEvent>& events, const SeriesOptions& o)
{
    Tick lo = 0;
    Tick hi = 0;
    if (!events.empty()) {
        auto [mn, mx] = std::minmax_element(events.begin(), events.end(),
                                            [](const auto& a, const auto& b) { return a.time < b.time; });
        lo = mn->time;
        hi = mx->time + 1;
    }
    return {o.start.value_or(lo), o.end.value_or(hi)};
}

telemetry::TelemetrySeries load_series(const std::string& path, const SeriesOptions& o)
{
    const auto events = read_telemetry(path);
    const auto [start, end] = event_range(events, o);
    return telemetry::bucketize(events, o.device, telemetry::parse_metric(o.metric), o.interval, start, end);
}

std::map<std::string, telemetry::TelemetrySeries> load_fleet(const std::string& path, const SeriesOptions& o)
{
    const auto events = read_telemetry(path);
    const auto [start, end] = event_range(events, o);
    std::map<std::string, telemetry::TelemetrySeries> out;
    for (const auto& e : events) {
        if (!o.device.empty() && e.device_id != o.device) continue;
        if (out.count(e.device_id)) continue;
        out.emplace(e.device_id,
                    telemetry::bucketize(events, e.device_id, telemetry::parse_metric(o.metric), o.interval, start, end));
    }
    return out;
}

mp::MatrixProfile read_profile_csv(const std::string& path, const mp::ProfileConfig& config)
{
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "index,distance,neighbor") {
        throw ParseError(0, "expected header index,distance,neighbor");
    }
    mp::MatrixProfile p;
    p.config = config;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string index, distance, neighbor;
        if (!std::getline(ss, index, ',') || !std::getline(ss, distance, ',') || !std::getline(ss, neighbor)) {
            throw ParseError(row, "expected three columns");
        }
        try {
            if (std::stoull(index) != p.distances.size()) throw ParseError(row, "indices must be consecutive");
            p.distances.push_back(distance == "inf" ? std::numeric_limits<double>::infinity() : std::stod(distance));
            p.neighbor_index.push_back(std::stoll(neighbor));
        } catch (const std::logic_error&) {
            throw ParseError(row, "malformed number");
        }
    }
    return p;
}

/// Registry refusals are security outcomes, not usage errors.
bool is_refusal(Errc code)
{
    switch (code) {
        case Errc::SecretMismatch:
        case Errc::AlreadyClaimed:
        case Errc::Blacklisted:
        case Errc::InvalidState:
        case Errc::NotClaimed:
        case Errc::SecretReused:
        case Errc::DuplicateDevice:
        case Errc::UnknownDevice:
        case Errc::InvalidSession:
        case Errc::RecoveryRefused:
            return true;
        default:
            return false;
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Fleet security toolkit: matrix-profile detection, signed updates, provisioning, simulation",
                 "fleetguard"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    // mp
    auto* mp_cmd = app.add_subcommand("mp", "Matrix profile over bucketized telemetry");
    mp_cmd->require_subcommand(1);
    SeriesOptions mp_series;
    std::size_t window = 16;
    std::optional<std::size_t> exclusion;
    bool brute = false;
    bool fast = false;
    auto* mp_compute = mp_cmd->add_subcommand("compute", "Print the profile as CSV (index,distance,neighbor)");
    mp_compute->add_option("--input", mp_series.input, "Telemetry CSV")->required();
    add_series_options(mp_compute, mp_series, true);
    mp_compute->add_option("--window", window, "Subsequence length m")->capture_default_str();
    mp_compute->add_option("--exclusion", exclusion, "Exclusion radius (default m/2)");
    auto* fast_flag = mp_compute->add_flag("--fast", fast, "Diagonal-recurrence algorithm (default)");
    mp_compute->add_flag("--brute", brute, "Direct pairwise algorithm")->excludes(fast_flag);

    std::size_t k = 3;
    std::string profile_path;
    std::string discord_input;
    auto* mp_discords = mp_cmd->add_subcommand("discords", "Print the top-k discords as JSON");
    mp_discords->add_option("--k", k, "Number of discords")->capture_default_str();
    auto* prof_opt = mp_discords->add_option("--profile", profile_path, "Profile CSV from `mp compute`");
    mp_discords->add_option("--input", discord_input, "Telemetry CSV (profile computed on the fly)")->excludes(prof_opt);
    add_series_options(mp_discords, mp_series, false);
    mp_discords->add_option("--window", window, "Subsequence length m")->capture_default_str();
    mp_discords->add_option("--exclusion", exclusion, "Exclusion radius (default m/2)");

    // detect
    auto* detect_cmd = app.add_subcommand("detect", "Calibrate on a baseline and report anomalous windows");
    SeriesOptions det_series;
    std::string baseline_path;
    std::string detect_out;
    detector::DetectorConfig det_config;
    detect_cmd->add_option("--baseline", baseline_path, "Attack-free telemetry CSV")->required();
    detect_cmd->add_option("--input", det_series.input, "Telemetry CSV to scan")->required();
    add_series_options(detect_cmd, det_series, false);
    detect_cmd->add_option("--window", window, "Subsequence length m")->capture_default_str();
    detect_cmd->add_option("--exclusion", exclusion, "Exclusion radius (default m/2)");
    detect_cmd->add_option("--quantile", det_config.quantile, "Baseline quantile")->capture_default_str();
    detect_cmd->add_option("--margin", det_config.margin, "Threshold multiplier")->capture_default_str();
    detect_cmd->add_option("--out", detect_out, "Write anomalies.jsonl here instead of stdout");

    // keys
    auto* keys_cmd = app.add_subcommand("keys", "Manage an encrypted keystore");
    keys_cmd->require_subcommand(1);
    Keys keys;
    std::uint64_t seed = 1;
    std::vector<std::string> key_names{"publisher", "tsa"};
    auto* keys_init = keys_cmd->add_subcommand("init", "Create a keystore with fresh Ed25519 keys");
    keys_init->add_option("--out", keys.path, "Keystore file")->required();
    keys_init->add_option("--seed", seed, "Deterministic seed")->capture_default_str();
    keys_init->add_option("--passphrase", keys.passphrase, std::string("Passphrase (or $") + kPassphraseEnv + ")");
    keys_init->add_option("--key", key_names, "Key names to generate")->capture_default_str();
    auto* keys_show = keys_cmd->add_subcommand("show", "Print the public keys as JSON");
    keys_show->add_option("--keys", keys.path, "Keystore file")->required();
    keys_show->add_option("--passphrase", keys.passphrase, "Keystore passphrase");

    // manifest
    auto* manifest_cmd = app.add_subcommand("manifest", "Build and verify firmware manifests");
    manifest_cmd->require_subcommand(1);
    std::string firmware_path, manifest_path, state_path, out_path;
    std::string firmware_id = "fw";
    std::string publisher_key = "publisher";
    std::string tsa_key = "tsa";
    std::uint64_t version = 0;
    Tick expiry = 0;
    Tick now = 0;
    auto* m_build = manifest_cmd->add_subcommand("build", "Hash, timestamp and sign a firmware image");
    m_build->add_option("--firmware", firmware_path, "Firmware image")->required()->check(CLI::ExistingFile);
    m_build->add_option("--version", version, "Firmware version")->required();
    m_build->add_option("--expiry", expiry, "Expiry tick")->required();
    m_build->add_option("--keys", keys.path, "Keystore file")->required();
    m_build->add_option("--passphrase", keys.passphrase, "Keystore passphrase");
    m_build->add_option("--id", firmware_id, "Firmware id")->capture_default_str();
    m_build->add_option("--now", now, "Current tick")->capture_default_str();
    m_build->add_option("--publisher-key", publisher_key, "Signing key name")->capture_default_str();
    m_build->add_option("--tsa-key", tsa_key, "Timestamp key name")->capture_default_str();
    std::string format = "json";
    m_build->add_option("--out", out_path, "Manifest file (default stdout)");
    m_build->add_option("--format", format, "json or binary")->check(CLI::IsMember({"json", "binary"}))->capture_default_str();
    auto* m_verify = manifest_cmd->add_subcommand("verify", "Run the device-side checks; exit 1 on Reject");
    m_verify->add_option("--manifest", manifest_path, "Manifest, JSON or binary")->required();
    m_verify->add_option("--firmware", firmware_path, "Firmware image")->required();
    m_verify->add_option("--state", state_path, "Device state JSON")->required();
    m_verify->add_option("--now", now, "Current tick")->required();
    std::string to_format;
    auto* m_convert = manifest_cmd->add_subcommand("convert", "Translate between the JSON and binary forms");
    m_convert->add_option("--manifest", manifest_path, "Manifest, JSON or binary")->required();
    m_convert->add_option("--to", to_format, "json or binary")->required()->check(CLI::IsMember({"json", "binary"}));
    m_convert->add_option("--out", out_path, "Output file (default stdout)");

    // state
    auto* state_cmd = app.add_subcommand("state", "Device update state files");
    state_cmd->require_subcommand(1);
    auto* state_init = state_cmd->add_subcommand("init", "Factory state whose slot A holds the given manifest");
    state_init->add_option("--manifest", manifest_path, "Manifest, JSON or binary")->required();
    state_init->add_option("--keys", keys.path, "Keystore holding the trust anchors")->required();
    state_init->add_option("--passphrase", keys.passphrase, "Keystore passphrase");
    state_init->add_option("--publisher-key", publisher_key, "Publisher key name")->capture_default_str();
    state_init->add_option("--tsa-key", tsa_key, "Timestamp key name")->capture_default_str();
    state_init->add_option("--out", out_path, "State JSON file (default stdout)");

    // tsa
    auto* tsa_cmd = app.add_subcommand("tsa", "Trusted timestamp tokens");
    tsa_cmd->require_subcommand(1);
    std::string digest_hex, token_path, anchor_path;
    auto* tsa_issue = tsa_cmd->add_subcommand("issue", "Timestamp a file or digest");
    auto* issue_file = tsa_issue->add_option("--file", firmware_path, "File to hash");
    tsa_issue->add_option("--digest", digest_hex, "SHA-256 digest as hex")->excludes(issue_file);
    tsa_issue->add_option("--keys", keys.path, "Keystore file")->required();
    tsa_issue->add_option("--passphrase", keys.passphrase, "Keystore passphrase");
    tsa_issue->add_option("--tsa-key", tsa_key, "Timestamp key name")->capture_default_str();
    tsa_issue->add_option("--now", now, "Current tick")->capture_default_str();
    tsa_issue->add_option("--out", out_path, "Token file (default stdout)");
    tsa_issue->add_option("--format", format, "json or hex")->check(CLI::IsMember({"json", "hex"}))->capture_default_str();
    auto* tsa_verify = tsa_cmd->add_subcommand("verify", "Check a token; exit 1 unless Ok");
    tsa_verify->add_option("--token", token_path, "Token, JSON or hex")->required();
    auto* verify_file = tsa_verify->add_option("--file", firmware_path, "File to hash");
    tsa_verify->add_option("--digest", digest_hex, "SHA-256 digest as hex")->excludes(verify_file);
    auto* anchor_opt = tsa_verify->add_option("--anchor", anchor_path, "Public key JSON of the trusted TSA");
    tsa_verify->add_option("--keys", keys.path, "Keystore holding the TSA key")->excludes(anchor_opt);
    tsa_verify->add_option("--passphrase", keys.passphrase, "Keystore passphrase");
    tsa_verify->add_option("--tsa-key", tsa_key, "Timestamp key name")->capture_default_str();
    auto* tsa_convert = tsa_cmd->add_subcommand("convert", "Translate between the JSON and hex forms");
    tsa_convert->add_option("--token", token_path, "Token, JSON or hex")->required();
    tsa_convert->add_option("--to", to_format, "json or hex")->required()->check(CLI::IsMember({"json", "hex"}));
    tsa_convert->add_option("--out", out_path, "Output file (default stdout)");

    // identity
    auto* id_cmd = app.add_subcommand("identity", "Device registry; refusals exit 1");
    id_cmd->require_subcommand(1);
    std::string registry_path, device_id, secret, user;
    std::string channel = "PreProvisioned";
    auto add_registry = [&](CLI::App* c) {
        c->add_option("--registry", registry_path, "Registry JSON file")->required();
        c->add_option("--seed", seed, "Seed for session ids and device keys")->capture_default_str();
    };
    auto* id_register = id_cmd->add_subcommand("register", "Add a device and its claim secret");
    add_registry(id_register);
    id_register->add_option("--device", device_id, "Device id")->required();
    id_register->add_option("--secret", secret, "Claim secret")->required();
    auto* id_claim = id_cmd->add_subcommand("claim", "Rendezvous and claim a device");
    add_registry(id_claim);
    id_claim->add_option("--device", device_id, "Device id")->required();
    id_claim->add_option("--user", user, "Claiming user")->required();
    id_claim->add_option("--secret", secret, "Claim secret")->required();
    id_claim->add_option("--channel", channel, "Delivery channel of the secret")
        ->capture_default_str()
        ->check(CLI::IsMember({"PreProvisioned", "DeviceEnteredSecret", "DeviceDisplayedKey", "CompanionDevice"}));
    id_claim->add_option("--now", now, "Current tick")->capture_default_str();
    auto* id_blacklist = id_cmd->add_subcommand("blacklist", "Permanently refuse a device");
    add_registry(id_blacklist);
    id_blacklist->add_option("--device", device_id, "Device id")->required();
    auto* id_deprovision = id_cmd->add_subcommand("deprovision", "Release a claimed device");
    add_registry(id_deprovision);
    id_deprovision->add_option("--device", device_id, "Device id")->required();
    auto* id_show = id_cmd->add_subcommand("show", "Print the registry snapshot or one record");
    add_registry(id_show);
    id_show->add_option("--device", device_id, "Device id");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Run a scenario and write its report directory");
    std::string scenario_path, out_dir;
    sim_cmd->add_option("--scenario", scenario_path, "Scenario JSON")->required();
    sim_cmd->add_option("--out", out_dir, "Report directory")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    auto open_keystore = [&]() {
        return std::make_unique<keystore::Keystore>(read_json(keys.path), resolve_passphrase(keys.passphrase));
    };
    auto profile_config = [&]() {
        auto c = mp::ProfileConfig::for_window(window);
        if (exclusion) c.exclusion = *exclusion;
        return c;
    };

    try {
        if (mp_compute->parsed()) {
            const auto series = load_series(mp_series.input, mp_series);
            const auto config = profile_config();
            const auto profile =
                brute ? mp::compute_brute_force(series.values, config) : mp::compute_fast(series.values, config);
            out << "index,distance,neighbor\n";
            for (std::size_t i = 0; i < profile.distances.size(); ++i) {
                out << i << ',' << format_double(profile.distances[i]) << ',' << profile.neighbor_index[i] << '\n';
            }
            return kExitOk;
        }

        if (mp_discords->parsed()) {
            const auto config = profile_config();
            mp::MatrixProfile profile;
            if (!profile_path.empty()) {
                profile = read_profile_csv(profile_path, config);
            } else if (!discord_input.empty()) {
                if (mp_series.device.empty()) throw Error(Errc::InvalidConfig, "--device is required with --input");
                profile = mp::compute_fast(load_series(discord_input, mp_series).values, config);
            } else {
                throw Error(Errc::InvalidConfig, "pass --profile or --input");
            }
            ordered_json result = ordered_json::array();
            for (auto idx : mp::top_discords(profile, k, config.exclusion)) {
                result.push_back({{"index", idx}, {"distance", profile.distances[idx]}});
            }
            out << result.dump() << '\n';
            return kExitOk;
        }

        if (detect_cmd->parsed()) {
            det_config.profile_config = profile_config();
            det_config.validate();
            SeriesOptions base_opts = det_series;
            base_opts.start.reset();
            base_opts.end.reset();
            const auto input = load_fleet(det_series.input, det_series);
            const auto baseline = load_fleet(baseline_path, base_opts);
            std::map<std::string, double> thresholds;
            for (const auto& [id, s] : baseline) {
                if (input.count(id)) thresholds[id] = detector::calibrate(s, det_config);
            }
            const auto reports = detector::detect_fleet(input, thresholds, det_config);
            if (detect_out.empty()) {
                detector::write_jsonl(out, reports);
            } else {
                std::ofstream f(detect_out, std::ios::trunc);
                if (!f) throw Error(Errc::Io, "cannot write " + detect_out);
                detector::write_jsonl(f, reports);
            }
            return reports.empty() ? kExitOk : kExitNegative;
        }

        if (keys_init->parsed()) {
            keystore::Keystore ks(seed);
            ordered_json pubs = ordered_json::array();
            for (const auto& name : key_names) pubs.push_back(keystore::to_json(ks.generate_key(keystore::KeyId(name))));
            write_text(keys.path, ks.export_state(resolve_passphrase(keys.passphrase)).dump(2) + "\n");
            out << pubs.dump(2) << '\n';
            return kExitOk;
        }

        if (keys_show->parsed()) {
            auto ks = open_keystore();
            ordered_json pubs = ordered_json::array();
            for (const auto& p : ks->public_keys()) pubs.push_back(keystore::to_json(p));
            out << pubs.dump(2) << '\n';
            return kExitOk;
        }

        if (m_build->parsed()) {
            const auto pass = resolve_passphrase(keys.passphrase);
            auto ks = std::make_unique<keystore::Keystore>(read_json(keys.path), pass);
            tsa::Tsa authority(*ks, keystore::KeyId(tsa_key), ks->counter("tsa"));
            const auto fw = read_bytes(firmware_path);
            const auto manifest = update::build_manifest(fw, firmware_id, version, expiry, *ks,
                                                         keystore::KeyId(publisher_key), authority, now);
            ks->set_counter("tsa", authority.last_serial());
            write_text(keys.path, ks->export_state(pass).dump(2) + "\n");
            emit_manifest(manifest, format, out_path, out);
            return kExitOk;
        }

        if (m_convert->parsed()) {
            emit_manifest(read_manifest(manifest_path), to_format, out_path, out);
            return kExitOk;
        }

        if (m_verify->parsed()) {
            const auto manifest = read_manifest(manifest_path);
            const auto state = update::state_from_json(read_json(state_path));
            const auto fw = read_bytes(firmware_path);
            const auto verdict = update::device_verify(state, manifest, fw, now);
            out << update::to_string(verdict) << '\n';
            return verdict.accepted() ? kExitOk : kExitNegative;
        }

        if (state_init->parsed()) {
            auto ks = open_keystore();
            const auto manifest = read_manifest(manifest_path);
            const auto state = update::factory_state(ks->public_key(keystore::KeyId(tsa_key)),
                                                     ks->public_key(keystore::KeyId(publisher_key)), manifest);
            const auto text = update::to_json(state).dump(2) + "\n";
            if (out_path.empty()) {
                out << text;
            } else {
                write_text(out_path, text);
            }
            return kExitOk;
        }

        auto imprint = [&]() -> Digest {
            if (!firmware_path.empty()) return crypto::sha256(ByteView(read_bytes(firmware_path)));
            if (!digest_hex.empty()) {
                const auto raw = from_hex(digest_hex);
                if (raw.size() != sizeof(Digest)) throw Error(Errc::BadImprintLength, "digest must be 32 bytes");
                return to_digest(raw);
            }
            throw Error(Errc::InvalidConfig, "pass --file or --digest");
        };

        if (tsa_issue->parsed()) {
            const auto pass = resolve_passphrase(keys.passphrase);
            auto ks = std::make_unique<keystore::Keystore>(read_json(keys.path), pass);
            tsa::Tsa authority(*ks, keystore::KeyId(tsa_key), ks->counter("tsa"));
            const auto token = authority.issue_token(imprint(), now);
            ks->set_counter("tsa", authority.last_serial());
            write_text(keys.path, ks->export_state(pass).dump(2) + "\n");
            emit_token(token, format, out_path, out);
            return kExitOk;
        }

        if (tsa_convert->parsed()) {
            emit_token(read_token(token_path), to_format, out_path, out);
            return kExitOk;
        }

        if (tsa_verify->parsed()) {
            keystore::PublicKeyInfo anchor;
            if (!anchor_path.empty()) {
                anchor = keystore::public_key_from_json(read_json(anchor_path));
            } else if (!keys.path.empty()) {
                anchor = open_keystore()->public_key(keystore::KeyId(tsa_key));
            } else {
                throw Error(Errc::InvalidConfig, "pass --anchor or --keys");
            }
            const auto token = read_token(token_path);
            const auto status = tsa::verify_token(token, imprint(), anchor);
            out << tsa::to_string(status) << '\n';
            return status == tsa::TokenStatus::Ok ? kExitOk : kExitNegative;
        }

        if (id_cmd->parsed()) {
            std::unique_ptr<identity::Registry> registry;
            if (std::ifstream probe(registry_path); probe) {
                registry = std::make_unique<identity::Registry>(read_json(registry_path), seed);
            } else if (id_register->parsed()) {
                registry = std::make_unique<identity::Registry>(seed);
            } else {
                throw Error(Errc::Io, "cannot open " + registry_path);
            }
            auto save = [&]() { write_text(registry_path, registry->snapshot().dump(2) + "\n"); };

            identity::DeviceRecord rec;
            if (id_register->parsed()) {
                rec = registry->register_device(device_id, to_bytes(secret));
            } else if (id_claim->parsed()) {
                auto session = registry->device_connect(device_id, now);
                identity::ClaimRequest req{user, device_id, to_bytes(secret), identity::parse_channel(channel)};
                try {
                    rec = registry->claim(session, req);
                } catch (const Error&) {
                    registry->close_session(session.session_id);
                    save();
                    throw;
                }
                registry->close_session(session.session_id);
            } else if (id_blacklist->parsed()) {
                rec = registry->blacklist(device_id);
            } else if (id_deprovision->parsed()) {
                rec = registry->deprovision(device_id);
            } else {
                if (device_id.empty()) {
                    out << registry->snapshot().dump(2) << '\n';
                } else {
                    out << identity::to_json(registry->record(device_id)).dump(2) << '\n';
                }
                return kExitOk;
            }
            save();
            out << identity::to_json(rec).dump(2) << '\n';
            return kExitOk;
        }

        if (sim_cmd->parsed()) {
            const auto config = sim::load_scenario(scenario_path);
            const auto report = sim::run_scenario(config);
            sim::write_report(report, out_dir);
            ordered_json summary;
            summary["events"] = report.events.size();
            summary["anomalies"] = report.anomalies.size();
            summary["alerts"] = report.alerts.size();
            summary["clone_flags"] = report.clone_flags;
            summary["stats"] = sim::to_json(report.stats);
            out << summary.dump(2) << '\n';
            const auto& s = report.stats;
            const bool safety_violated = s.unverified_boots > 0 || s.blacklisted_updates > 0 || s.blacklisted_claims > 0;
            return safety_violated ? kExitNegative : kExitOk;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << " (at " << e.path() << ")\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return is_refusal(e.code()) ? kExitNegative : kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace fleetguard
