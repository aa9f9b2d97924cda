#include "fleetguard/detector.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <ostream>
#include <thread>

#include "fleetguard/error.hpp"

namespace fleetguard::detector {

void DetectorConfig::validate() const
{
    profile_config.validate();
    if (!(quantile > 0.0 && quantile <= 1.0)) {
        throw Error(Errc::InvalidConfig, "quantile must lie in (0, 1]");
    }
    if (!(margin >= 1.0)) throw Error(Errc::InvalidConfig, "margin must be >= 1");
}

double interpolated_quantile(std::span<const double> sample, double q)
{
    if (sample.empty()) throw Error(Errc::InsufficientLength, "quantile of an empty sample");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double threshold_from_profile(const mp::MatrixProfile& profile, const DetectorConfig& config)
{
    config.validate();
    std::vector<double> finite;
    for (double d : profile.distances) {
        if (std::isfinite(d)) finite.push_back(d);
    }
    return config.margin * interpolated_quantile(finite, config.quantile);
}

double calibrate(const telemetry::TelemetrySeries& baseline, const DetectorConfig& config)
{
    config.validate();
    return threshold_from_profile(mp::compute_fast(baseline.values, config.profile_config), config);
}

std::vector<AnomalyReport> detect(const telemetry::TelemetrySeries& series, double threshold,
                                  const DetectorConfig& config)
{
    config.validate();
    const auto profile = mp::compute_fast(series.values, config.profile_config);
    std::vector<AnomalyReport> reports;
    for (std::size_t i = 0; i < profile.distances.size(); ++i) {
        const double d = profile.distances[i];
        if (std::isfinite(d) && d > threshold) {
            reports.push_back({series.device_id, series.metric, i,
                               series.start_time + static_cast<Tick>(i) * series.interval, d, threshold});
        }
    }
    return reports;
}

std::vector<AnomalyReport> detect_fleet(const std::map<std::string, telemetry::TelemetrySeries>& series,
                                        const std::map<std::string, double>& thresholds,
                                        const DetectorConfig& config)
{
    config.validate();
    std::vector<std::pair<const telemetry::TelemetrySeries*, double>> jobs;
    for (const auto& [device, s] : series) {
        auto it = thresholds.find(device);
        if (it == thresholds.end()) throw Error(Errc::MissingThreshold, device);
        jobs.emplace_back(&s, it->second);
    }

    std::vector<std::vector<AnomalyReport>> results(jobs.size());
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), jobs.size()));
    std::vector<std::future<void>> pending;
    for (std::size_t w = 0; w < workers; ++w) {
        pending.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t k = w; k < jobs.size(); k += workers) {
                results[k] = detect(*jobs[k].first, jobs[k].second, config);
            }
        }));
    }
    for (auto& p : pending) p.get();

    // std::map iteration already yields device order; detect sorts windows.
    std::vector<AnomalyReport> out;
    for (auto& r : results) out.insert(out.end(), r.begin(), r.end());
    return out;
}

nlohmann::ordered_json to_json(const AnomalyReport& report)
{
    nlohmann::ordered_json j;
    j["device_id"] = report.device_id;
    j["metric"] = telemetry::to_string(report.metric);
    j["window_index"] = report.window_index;
    j["time"] = report.time;
    j["score"] = report.score;
    j["threshold"] = report.threshold;
    return j;
}

AnomalyReport anomaly_from_json(const nlohmann::json& j)
{
    AnomalyReport r;
    r.device_id = j.at("device_id").get<std::string>();
    r.metric = telemetry::parse_metric(j.at("metric").get<std::string>());
    r.window_index = j.at("window_index").get<std::size_t>();
    r.time = j.at("time").get<Tick>();
    r.score = j.at("score").get<double>();
    r.threshold = j.at("threshold").get<double>();
    return r;
}

void write_jsonl(std::ostream& out, std::span<const AnomalyReport> reports)
{
    for (const auto& r : reports) out << to_json(r).dump() << '\n';
}

}  // namespace fleetguard::detector
