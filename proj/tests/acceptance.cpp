// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fleetguard/cli.hpp"
#include "fleetguard/deception.hpp"
#include "fleetguard/error.hpp"
#include "fleetguard/matrix_profile.hpp"
#include "fleetguard/scenario.hpp"
#include "fleetguard/transport.hpp"
#include "fleetguard/update_protocol.hpp"
#include "identity_ops.hpp"
#include "oracles.hpp"
#include "update_traces.hpp"

using namespace fleetguard;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = FLEETGUARD_FIXTURES;
const std::string kScenarios = FLEETGUARD_SCENARIOS;

// Pinned tolerances and limits.
constexpr double kProfileTolerance = 1e-9;
constexpr double kCorrelationTolerance = 1e-9;
constexpr double kDetectorSeconds = 10.0;
constexpr double kOracleSeconds = 30.0;
constexpr double kTraceSeconds = 60.0;
constexpr double kFleetSeconds = 60.0;

struct Result {
    bool pass = false;
    std::string detail;
};

class Stopwatch
{
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// 1. Flood detection on periodic telemetry, 0 FP / 0 FN over 20 seeds.
Result detector_fidelity()
{
    constexpr int kRuns = 20;
    constexpr Tick kDuration = 2000;
    constexpr Tick kFloodLength = 20;
    constexpr std::size_t kWindow = 16;
    std::size_t false_pos = 0, false_neg = 0, anomalies = 0;
    Stopwatch clock;
    for (int run = 1; run <= kRuns; ++run) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(run));
        sim::ScenarioConfig c;
        c.seed = static_cast<std::uint64_t>(run) * 7919;
        c.duration = kDuration;
        c.links = {{"broadband", 1500, 1, 0.0}};
        for (const auto* id : {"dev-a", "dev-b", "dev-c"}) {
            sim::DeviceSpec d;
            d.id = id;
            d.secret = std::string("S!") + id;
            d.owner = "owner";
            c.devices.push_back(d);
        }
        c.factory_expiry = 100000;
        c.detector.config.profile_config = mp::ProfileConfig::for_window(kWindow);
        c.detector.baseline_buckets = 500;
        sim::AttackSpec flood;
        flood.kind = sim::AttackKind::TrafficFlood;
        flood.device = c.devices[static_cast<std::size_t>(run) % c.devices.size()].id;
        flood.start = 600 + static_cast<Tick>(rng() % static_cast<std::uint64_t>(kDuration - kFloodLength - 600));
        flood.duration = kFloodLength;
        flood.factor = 10.0;
        c.attacks.push_back(flood);

        const auto report = sim::run_scenario(c);
        bool hit = false;
        for (const auto& a : report.anomalies) {
            ++anomalies;
            const bool overlaps = a.device_id == flood.device && a.time + static_cast<Tick>(kWindow) > flood.start
                                  && a.time < flood.start + flood.duration;
            if (overlaps) {
                hit = true;
            } else {
                ++false_pos;
            }
        }
        if (!hit) ++false_neg;
    }
    const double s = clock.seconds();
    return {false_pos == 0 && false_neg == 0 && s < kDetectorSeconds,
            fmt("%d runs, %zu anomalies, %zu FP, %zu FN, %.2f s (limit %.0f s)", kRuns, anomalies, false_pos,
                false_neg, s, kDetectorSeconds)};
}

// 2. compute_fast against compute_brute_force and the independent oracle,
// plus affine invariance, on 100 random series.
Result oracle_equivalence()
{
    std::mt19937_64 rng(2);
    double worst_fast = 0.0, worst_oracle = 0.0, worst_affine = 0.0;
    std::size_t inf_mismatch = 0;
    Stopwatch clock;
    const std::size_t windows[] = {4, 8, 16};
    auto gap = [&](double a, double b) {
        if (std::isinf(a) || std::isinf(b)) {
            if (std::isinf(a) != std::isinf(b)) ++inf_mismatch;
            return 0.0;
        }
        return std::abs(a - b);
    };
    for (int k = 0; k < 100; ++k) {
        const std::size_t m = windows[k % 3];
        const std::size_t n = 2 * m + 2 + rng() % (500 - 2 * m - 1);
        const auto x = oracle::random_series(rng, n);
        const auto config = mp::ProfileConfig::for_window(m);
        const auto fast = mp::compute_fast(x, config);
        const auto brute = mp::compute_brute_force(x, config);
        const auto ref = oracle::brute_profile(x, m, config.exclusion);
        std::uniform_real_distribution<double> scale(0.1, 50.0), shift(-1000.0, 1000.0);
        const double a = scale(rng), b = shift(rng);
        std::vector<double> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
        const auto moved = mp::compute_fast(y, config);
        for (std::size_t i = 0; i < fast.distances.size(); ++i) {
            worst_fast = std::max(worst_fast, gap(fast.distances[i], brute.distances[i]));
            worst_oracle = std::max(worst_oracle, gap(fast.distances[i], ref.distances[i]));
            worst_affine = std::max(worst_affine, gap(fast.distances[i], moved.distances[i]));
        }
    }
    const double s = clock.seconds();
    const bool ok = worst_fast <= kProfileTolerance && worst_oracle <= kProfileTolerance
                    && worst_affine <= kProfileTolerance && inf_mismatch == 0 && s < kOracleSeconds;
    return {ok, fmt("100 series, max |fast-brute| %.3g, max |fast-oracle| %.3g, max affine drift %.3g "
                    "(tolerance %.0e), %.2f s (limit %.0f s)",
                    worst_fast, worst_oracle, worst_affine, kProfileTolerance, s, kOracleSeconds)};
}

// 3. znorm_distance against sqrt(2m(1-r)) on 1000 random pairs.
Result correlation_identity()
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const std::size_t m = 2 + rng() % 63;
        std::vector<double> a(m), b(m);
        for (auto& v : a) v = noise(rng) * 10.0;
        for (auto& v : b) v = noise(rng) * 3.0 + 5.0;
        worst = std::max(worst, std::abs(mp::znorm_distance(a, b) - oracle::correlation_distance(a, b)));
    }
    return {worst <= kCorrelationTolerance,
            fmt("1000 pairs, max deviation %.3g (tolerance %.0e)", worst, kCorrelationTolerance)};
}

// 4. 10,000 adversarial update traces.
Result update_safety()
{
    traces::World world;
    std::mt19937_64 rng(4);
    traces::Outcome out;
    Stopwatch clock;
    for (int t = 0; t < 10000; ++t) traces::run_trace(world, rng, out);
    const double s = clock.seconds();
    const bool ok = out.unverified_boots == 0 && out.reason_mismatches == 0 && out.monotonicity_violations == 0
                    && s < kTraceSeconds;
    return {ok, fmt("10000 traces, %zu steps, %zu accepts, %zu rejects, %zu boots, %zu unverified boots, "
                    "%zu wrong reasons, %.2f s (limit %.0f s)",
                    out.steps, out.accepts, out.rejects, out.boots, out.unverified_boots, out.reason_mismatches, s,
                    kTraceSeconds)};
}

nlohmann::json read_json(const std::string& name)
{
    std::ifstream in(kFixtures + "/" + name);
    return nlohmann::json::parse(in);
}

Bytes read_bytes(const std::string& name)
{
    const auto text = slurp(kFixtures + "/" + name);
    return Bytes(text.begin(), text.end());
}

// 5. The four device_verify fixtures.
Result fixture_vectors()
{
    struct Case {
        const char* state;
        const char* manifest;
        const char* firmware;
        Tick now;
        update::Verdict expected;
    };
    using update::RejectReason;
    using update::Verdict;
    const Case cases[] = {
        {"state_v1.json", "manifest_v2.json", "fw_v2.bin", 50, Verdict::accept()},
        {"state_v2.json", "manifest_v1.json", "fw_v1.bin", 50, Verdict::reject(RejectReason::Rollback)},
        {"state_v1.json", "manifest_v2.json", "fw_v2.bin", 1000, Verdict::reject(RejectReason::Expired)},
        {"state_v1.json", "manifest_v2.json", "fw_v2_tampered.bin", 50, Verdict::reject(RejectReason::DigestMismatch)},
    };
    std::string detail;
    bool ok = true;
    for (const auto& c : cases) {
        const auto state = update::state_from_json(read_json(c.state));
        const auto manifest = update::manifest_from_json(read_json(c.manifest));
        const auto before = state;
        const auto got = update::device_verify(state, manifest, read_bytes(c.firmware), c.now);
        const bool match = got == c.expected && state == before;
        ok = ok && match;
        if (!detail.empty()) detail += ", ";
        detail += update::to_string(got) + (match ? "" : " (expected " + update::to_string(c.expected) + ")");
    }
    return {ok, detail};
}

// 6. 10,000 registry operation sequences.
Result provisioning_lifecycle()
{
    identity_ops::Outcome out;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) identity_ops::run_sequence(seed, 25, out);
    const bool ok = out.illegal_transitions == 0 && out.owner_violations == 0 && out.secret_leaks == 0;
    return {ok, fmt("10000 sequences, %zu operations, %zu illegal transitions, %zu owner violations, "
                    "%zu snapshots leaking a secret, %zu distinct transitions seen",
                    out.operations, out.illegal_transitions, out.owner_violations, out.secret_leaks, out.seen.size())};
}

// 7. Fragmentation at a 12-byte MTU.
Result constrained_transport()
{
    constexpr std::size_t kMtu = 12;
    std::mt19937_64 rng(7);
    std::size_t round_trip_failures = 0, oversize = 0, drops_checked = 0, drops_missed = 0;
    for (int k = 0; k < 1000; ++k) {
        Bytes payload(rng() % (transport::max_payload(kMtu) + 1));
        for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
        const auto frames = transport::fragment(payload, kMtu, static_cast<std::uint16_t>(k));
        for (const auto& f : frames) oversize += f.size() > kMtu;
        if (transport::reassemble(frames) != payload) ++round_trip_failures;
        if (frames.size() < 2) {
            // A lone frame dropped leaves nothing to reassemble.
            ++drops_checked;
            try {
                transport::reassemble(std::vector<Bytes>{});
                ++drops_missed;
            } catch (const Error& e) {
                drops_missed += e.code() != Errc::MissingFragment;
            }
            continue;
        }
        for (std::size_t drop = 0; drop < frames.size(); ++drop) {
            auto cut = frames;
            cut.erase(cut.begin() + static_cast<std::ptrdiff_t>(drop));
            ++drops_checked;
            try {
                transport::reassemble(cut);
                ++drops_missed;
            } catch (const Error& e) {
                drops_missed += e.code() != Errc::MissingFragment;
            }
        }
    }
    const bool ok = round_trip_failures == 0 && oversize == 0 && drops_missed == 0;
    return {ok, fmt("1000 payloads at mtu %zu, %zu round-trip failures, %zu oversize frames, "
                    "%zu single-drop cases, %zu without MissingFragment",
                    kMtu, round_trip_failures, oversize, drops_checked, drops_missed)};
}

std::vector<fs::path> bundled_scenarios()
{
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(kScenarios)) {
        if (e.path().extension() == ".json") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

int simulate(const fs::path& scenario, const fs::path& dir)
{
    std::ostringstream out, err;
    return run_cli({"simulate", "--scenario", scenario.string(), "--out", dir.string()}, out, err);
}

// 8. simulate twice per bundled scenario, byte-identical directories.
Result determinism()
{
    const auto root = fs::temp_directory_path() / "fleetguard-acceptance";
    std::size_t scenarios = 0, differing = 0, files = 0;
    std::string bad;
    for (const auto& path : bundled_scenarios()) {
        ++scenarios;
        const auto a = root / "a" / path.stem();
        const auto b = root / "b" / path.stem();
        fs::remove_all(a);
        fs::remove_all(b);
        const int ca = simulate(path, a);
        const int cb = simulate(path, b);
        bool same = ca == cb;
        for (const auto& e : fs::directory_iterator(a)) {
            ++files;
            same = same && fs::exists(b / e.path().filename()) && slurp(e.path()) == slurp(b / e.path().filename());
        }
        same = same && std::distance(fs::directory_iterator(a), fs::directory_iterator{})
                           == std::distance(fs::directory_iterator(b), fs::directory_iterator{});
        if (!same) {
            ++differing;
            bad += " " + path.stem().string();
        }
    }
    return {differing == 0 && scenarios > 0,
            fmt("%zu scenarios, %zu report files compared, %zu differing%s", scenarios, files, differing, bad.c_str())};
}

// 9. The 1000-device scenario.
Result fleet_scale(bool updates_green, bool lifecycle_green)
{
    const auto config = sim::load_scenario(kScenarios + "/fleet_scale.json");
    Stopwatch clock;
    const auto report = sim::run_scenario(config);
    const double s = clock.seconds();

    std::size_t claimed = 0, updated = 0, bad_owner = 0;
    for (const auto& [id, d] : report.devices) {
        claimed += d.record.status == identity::Status::Claimed;
        updated += d.state.active().version >= 2;
        bad_owner += (d.record.status == identity::Status::Claimed) != d.record.owner.has_value();
    }
    std::ostringstream dump;
    for (const auto& [id, d] : report.devices) dump << identity::to_json(d.record).dump();
    std::size_t leaks = 0;
    for (const auto& d : config.devices) leaks += dump.str().find(d.secret) != std::string::npos;

    const bool ok = config.devices.size() == 1000 && s < kFleetSeconds && report.stats.unverified_boots == 0
                    && claimed == 1000 && updated == 1000 && bad_owner == 0 && leaks == 0 && updates_green
                    && lifecycle_green;
    return {ok, fmt("%zu devices, %zu claimed, %zu updated, %zu anomalies, %zu unverified boots, %zu owner "
                    "violations, %zu leaked secrets, %.2f s (limit %.0f s), criteria 4 and 6 %s",
                    config.devices.size(), claimed, updated, report.anomalies.size(),
                    static_cast<std::size_t>(report.stats.unverified_boots), bad_owner, leaks, s, kFleetSeconds,
                    updates_green && lifecycle_green ? "green" : "not green")};
}

// 10. Canary alerts and MTD injectivity.
Result deception_checks()
{
    std::size_t runs = 0, unattributed = 0, probes = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto config = sim::load_scenario(kScenarios + "/canary_probe.json");
        config.seed = seed;
        const auto report = sim::run_scenario(config);
        ++runs;
        for (const auto& a : config.attacks) {
            if (a.kind != sim::AttackKind::CanaryProbe) continue;
            ++probes;
            const bool found = std::any_of(report.alerts.begin(), report.alerts.end(), [&](const deception::Alert& x) {
                return x.actor == a.actor && x.device_id == a.device;
            });
            unattributed += !found;
        }
    }

    std::vector<std::string> devices;
    for (int i = 0; i < 50; ++i) devices.push_back("dev-" + std::to_string(i));
    std::vector<std::string> pool;
    for (int i = 0; i < 64; ++i) pool.push_back("10.0.1." + std::to_string(i));
    crypto::Drbg rng(10, "mtd");
    auto schedule = deception::mtd_initial(devices, pool, 5, rng);
    std::size_t non_injective = 0, unmoved = 0;
    for (int k = 1; k <= 1000; ++k) {
        auto next = deception::mtd_rotate(schedule, 5 * k, rng);
        std::set<std::string> used;
        for (const auto& [dev, addr] : next.assignment) {
            used.insert(addr);
            unmoved += schedule.assignment.at(dev) == addr;
        }
        non_injective += used.size() != devices.size();
        schedule = std::move(next);
    }
    const bool ok = probes > 0 && unattributed == 0 && non_injective == 0 && unmoved == 0;
    return {ok, fmt("%zu canary_probe runs, %zu probes, %zu without an attributable alert; 1000 rotations, "
                    "%zu non-injective, %zu addresses unchanged",
                    runs, probes, unattributed, non_injective, unmoved)};
}

Result guarded(const std::function<Result()>& f)
{
    try {
        return f();
    } catch (const std::exception& e) {
        return {false, std::string("threw: ") + e.what()};
    }
}

}  // namespace

int main()
{
    int failed = 0;
    auto report = [&](int n, const char* name, const Result& r) {
        std::printf("[%s] %d %s: %s\n", r.pass ? "PASS" : "FAIL", n, name, r.detail.c_str());
        std::fflush(stdout);
        failed += !r.pass;
        return r.pass;
    };
    report(1, "detector fidelity", guarded(detector_fidelity));
    report(2, "matrix profile oracle equivalence", guarded(oracle_equivalence));
    report(3, "correlation identity", guarded(correlation_identity));
    const bool updates = report(4, "update protocol safety", guarded(update_safety));
    report(5, "rollback and expiry vectors", guarded(fixture_vectors));
    const bool lifecycle = report(6, "provisioning lifecycle", guarded(provisioning_lifecycle));
    report(7, "constrained transport", guarded(constrained_transport));
    report(8, "determinism", guarded(determinism));
    report(9, "fleet scale", guarded([&] { return fleet_scale(updates, lifecycle); }));
    report(10, "deception", guarded(deception_checks));
    std::printf("%d of 10 criteria passed\n", 10 - failed);
    return failed;
}
