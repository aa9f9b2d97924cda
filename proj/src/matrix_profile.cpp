#include "fleetguard/matrix_profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "fleetguard/error.hpp"

namespace fleetguard::mp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Re-score band on squared distance. Recurrence error is orders of magnitude
// below this on any series that fits in memory.
constexpr double kRescoreBand = 1e-6;

struct WindowStats {
    double mean = 0.0;
    double std = 0.0;
    double centered_norm = 0.0;  // sqrt(sum (x - mean)^2)
};

WindowStats window_stats(std::span<const double> w)
{
    WindowStats s;
    double sum = 0.0;
    for (double x : w) sum += x;
    s.mean = sum / static_cast<double>(w.size());
    double ss = 0.0;
    for (double x : w) ss += (x - s.mean) * (x - s.mean);
    s.centered_norm = std::sqrt(ss);
    s.std = std::sqrt(ss / static_cast<double>(w.size()));
    return s;
}

void check_length(std::size_t n, const ProfileConfig& config)
{
    config.validate();
    const auto need = min_series_length(config);
    if (n < need) {
        throw Error(Errc::InsufficientLength, "series of length " + std::to_string(n) + " needs at least "
                                                  + std::to_string(need) + " values");
    }
}

std::span<const double> window(std::span<const double> values, std::size_t i, std::size_t m)
{
    return values.subspan(i, m);
}

bool admissible(std::size_t i, std::size_t j, std::size_t exclusion)
{
    return (i > j ? i - j : j - i) > exclusion;
}

}  // namespace

ProfileConfig ProfileConfig::for_window(std::size_t m)
{
    ProfileConfig c;
    c.window_m = m;
    c.exclusion = std::max<std::size_t>(1, m / 2);
    return c;
}

void ProfileConfig::validate() const
{
    if (window_m < 2) throw Error(Errc::InvalidConfig, "window_m must be >= 2");
    if (exclusion < 1) throw Error(Errc::InvalidConfig, "exclusion must be >= 1");
    if (!(epsilon_std > 0.0)) throw Error(Errc::InvalidConfig, "epsilon_std must be positive");
}

std::size_t min_series_length(const ProfileConfig& config)
{
    return config.window_m + config.exclusion + 1;
}

double znorm_distance(std::span<const double> a, std::span<const double> b, double epsilon_std)
{
    if (a.size() != b.size()) {
        throw Error(Errc::LengthMismatch,
                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " samples");
    }
    const std::size_t m = a.size();
    if (m < 2) throw Error(Errc::InvalidConfig, "subsequences need at least 2 samples");

    const auto sa = window_stats(a);
    const auto sb = window_stats(b);
    const bool flat_a = sa.std < epsilon_std;
    const bool flat_b = sb.std < epsilon_std;
    if (flat_a && flat_b) return 0.0;
    if (flat_a || flat_b) return std::sqrt(2.0 * static_cast<double>(m));

    double acc = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
        const double d = (a[t] - sa.mean) / sa.std - (b[t] - sb.mean) / sb.std;
        acc += d * d;
    }
    return std::sqrt(acc);
}

MatrixProfile compute_brute_force(std::span<const double> values, const ProfileConfig& config)
{
    check_length(values.size(), config);
    const std::size_t m = config.window_m;
    const std::size_t count = values.size() - m + 1;

    MatrixProfile profile;
    profile.config = config;
    profile.distances.assign(count, kInf);
    profile.neighbor_index.assign(count, -1);

    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < count; ++j) {
            if (!admissible(i, j, config.exclusion)) continue;
            const double d = znorm_distance(window(values, i, m), window(values, j, m), config.epsilon_std);
            if (d < profile.distances[i]) {
                profile.distances[i] = d;
                profile.neighbor_index[i] = static_cast<std::int64_t>(j);
            }
        }
    }
    return profile;
}

MatrixProfile compute_fast(std::span<const double> values, const ProfileConfig& config)
{
    check_length(values.size(), config);
    const std::size_t m = config.window_m;
    const std::size_t count = values.size() - m + 1;
    const double two_m = 2.0 * static_cast<double>(m);

    std::vector<double> mean(count), inv_norm(count);
    std::vector<char> flat(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto s = window_stats(window(values, i, m));
        mean[i] = s.mean;
        flat[i] = s.std < config.epsilon_std;
        inv_norm[i] = flat[i] ? 0.0 : 1.0 / s.centered_norm;
    }

    // Covariance update terms for stepping (i, j) -> (i + 1, j + 1).
    std::vector<double> df(count, 0.0), dg(count, 0.0);
    for (std::size_t i = 0; i + 1 < count; ++i) {
        df[i] = 0.5 * (values[i + m] - values[i]);
        dg[i] = (values[i + m] - mean[i + 1]) + (values[i] - mean[i]);
    }

    auto squared = [&](std::size_t i, std::size_t j, double cov) {
        if (flat[i] && flat[j]) return 0.0;
        if (flat[i] || flat[j]) return two_m;
        const double corr = std::clamp(cov * inv_norm[i] * inv_norm[j], -1.0, 1.0);
        return std::max(0.0, two_m * (1.0 - corr));
    };

    // Walks every admissible pair once, diagonal by diagonal.
    auto for_each_pair = [&](auto&& visit) {
        for (std::size_t k = config.exclusion + 1; k < count; ++k) {
            double cov = 0.0;
            for (std::size_t t = 0; t < m; ++t) {
                cov += (values[t] - mean[0]) * (values[k + t] - mean[k]);
            }
            for (std::size_t i = 0; i + k < count; ++i) {
                const std::size_t j = i + k;
                if (i > 0) cov += df[i - 1] * dg[j - 1] + df[j - 1] * dg[i - 1];
                visit(i, j, squared(i, j, cov));
            }
        }
    };

    std::vector<double> best_sq(count, kInf);
    for_each_pair([&](std::size_t i, std::size_t j, double d2) {
        best_sq[i] = std::min(best_sq[i], d2);
        best_sq[j] = std::min(best_sq[j], d2);
    });

    MatrixProfile profile;
    profile.config = config;
    profile.distances.assign(count, kInf);
    profile.neighbor_index.assign(count, -1);

    auto offer = [&](std::size_t i, std::size_t j, double d) {
        auto& best = profile.distances[i];
        auto& nn = profile.neighbor_index[i];
        if (d < best || (d == best && static_cast<std::int64_t>(j) < nn)) {
            best = d;
            nn = static_cast<std::int64_t>(j);
        }
    };

    // Pairs touching a flat window already have their exact distance. The
    // rest are re-scored directly when they come within the band of the
    // window's minimum, so near-ties resolve as in the brute-force scan.
    const double flat_other = std::sqrt(two_m);
    std::vector<std::vector<std::uint32_t>> candidates(count);
    for_each_pair([&](std::size_t i, std::size_t j, double d2) {
        if (flat[i] || flat[j]) {
            const double d = (flat[i] && flat[j]) ? 0.0 : flat_other;
            offer(i, j, d);
            offer(j, i, d);
            return;
        }
        if (d2 <= best_sq[i] + kRescoreBand) candidates[i].push_back(static_cast<std::uint32_t>(j));
        if (d2 <= best_sq[j] + kRescoreBand) candidates[j].push_back(static_cast<std::uint32_t>(i));
    });
    for (std::size_t i = 0; i < count; ++i) {
        auto& c = candidates[i];
        std::sort(c.begin(), c.end());
        for (const auto j : c) {
            offer(i, j, znorm_distance(window(values, i, m), window(values, j, m), config.epsilon_std));
            // Nothing beats an exact zero at a smaller index.
            if (profile.distances[i] == 0.0) break;
        }
        std::vector<std::uint32_t>().swap(c);
    }
    return profile;
}

MatrixProfile append_and_update(const MatrixProfile& profile, std::span<const double> values,
                                double new_value, const ProfileConfig& config)
{
    if (!(profile.config == config)) {
        throw Error(Errc::ConfigMismatch, "profile was computed with a different configuration");
    }
    check_length(values.size(), config);
    const std::size_t m = config.window_m;
    if (profile.distances.size() != values.size() - m + 1
        || profile.neighbor_index.size() != profile.distances.size()) {
        throw Error(Errc::ConfigMismatch, "profile does not match the series it is extended from");
    }

    std::vector<double> extended(values.begin(), values.end());
    extended.push_back(new_value);
    const std::span<const double> series(extended);
    const std::size_t last = profile.distances.size();

    MatrixProfile out = profile;
    out.distances.push_back(kInf);
    out.neighbor_index.push_back(-1);
    const auto fresh = window(series, last, m);
    for (std::size_t j = 0; j < last; ++j) {
        if (!admissible(last, j, config.exclusion)) continue;
        const double d = znorm_distance(window(series, j, m), fresh, config.epsilon_std);
        // `last` is larger than every existing neighbor, so ties keep the old one.
        if (d < out.distances[j]) {
            out.distances[j] = d;
            out.neighbor_index[j] = static_cast<std::int64_t>(last);
        }
        if (d < out.distances[last]) {
            out.distances[last] = d;
            out.neighbor_index[last] = static_cast<std::int64_t>(j);
        }
    }
    return out;
}

std::vector<std::size_t> top_discords(const MatrixProfile& profile, std::size_t k, std::size_t exclusion)
{
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < profile.distances.size(); ++i) {
        if (std::isfinite(profile.distances[i])) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return profile.distances[a] > profile.distances[b];
    });

    std::vector<std::size_t> chosen;
    for (auto i : order) {
        if (chosen.size() >= k) break;
        const bool clear = std::all_of(chosen.begin(), chosen.end(), [&](std::size_t c) {
            return (i > c ? i - c : c - i) >= exclusion;
        });
        if (clear) chosen.push_back(i);
    }
    return chosen;
}

}  // namespace fleetguard::mp
