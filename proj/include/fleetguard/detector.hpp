#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fleetguard/matrix_profile.hpp"
#include "fleetguard/telemetry.hpp"

namespace fleetguard::detector {

struct DetectorConfig {
    mp::ProfileConfig profile_config = mp::ProfileConfig::for_window(16);
    double quantile = 0.99;
    double margin = 2.0;

    /// Throws Error(InvalidConfig) unless 0 < quantile <= 1 and margin >= 1.
    void validate() const;
};

/// A window whose matrix-profile distance exceeded the device threshold.
struct AnomalyReport {
    std::string device_id;
    telemetry::Metric metric = telemetry::Metric::PacketsIn;
    std::size_t window_index = 0;
    Tick time = 0;
    double score = 0.0;
    double threshold = 0.0;

    bool operator==(const AnomalyReport&) const = default;
};

/// Empirical quantile with linear interpolation between order statistics
/// (position q * (N - 1) in the sorted sample). Throws on an empty sample.
double interpolated_quantile(std::span<const double> sample, double q);

/// margin * quantile of the finite profile distances.
double threshold_from_profile(const mp::MatrixProfile& profile, const DetectorConfig& config);

/// Threshold from an attack-free baseline series.
double calibrate(const telemetry::TelemetrySeries& baseline, const DetectorConfig& config);

/// One report per window whose distance is strictly above `threshold`,
/// sorted by window index.
std::vector<AnomalyReport> detect(const telemetry::TelemetrySeries& series, double threshold,
                                  const DetectorConfig& config);

/// Per-device detect over a fleet, ordered by (device_id, window_index).
/// Devices are profiled concurrently. Throws Error(MissingThreshold).
std::vector<AnomalyReport> detect_fleet(const std::map<std::string, telemetry::TelemetrySeries>& series,
                                        const std::map<std::string, double>& thresholds,
                                        const DetectorConfig& config);

nlohmann::ordered_json to_json(const AnomalyReport& report);
AnomalyReport anomaly_from_json(const nlohmann::json& j);
/// One JSON object per line, keys in declaration order.
void write_jsonl(std::ostream& out, std::span<const AnomalyReport> reports);

}  // namespace fleetguard::detector
