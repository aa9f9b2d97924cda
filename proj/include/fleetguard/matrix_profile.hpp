#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fleetguard::mp {

/// Subsequence length, trivial-match exclusion radius and the standard
/// deviation below which a window counts as constant.
struct ProfileConfig {
    std::size_t window_m = 16;
    std::size_t exclusion = 8;
    double epsilon_std = 1e-12;

    /// Window `m` with the usual exclusion radius floor(m/2), at least 1.
    static ProfileConfig for_window(std::size_t m);

    /// Throws Error(InvalidConfig) unless window_m >= 2, exclusion >= 1 and
    /// epsilon_std > 0.
    void validate() const;

    bool operator==(const ProfileConfig&) const = default;
};

/// `distances[i]` is the smallest z-normalized distance from window i to any
/// window j with |i - j| > exclusion; `neighbor_index[i]` is that j (smallest
/// on ties). A window with no admissible partner has an infinite distance and
/// neighbor -1; that only happens on series barely long enough to profile.
struct MatrixProfile {
    std::vector<double> distances;
    std::vector<std::int64_t> neighbor_index;
    ProfileConfig config;
};

/// Euclidean distance between z-normalized copies (population std).
/// Two constant windows are at distance 0; a constant window against a
/// non-constant one is at sqrt(2m). Throws Error(LengthMismatch) or
/// Error(InvalidConfig) when m < 2.
double znorm_distance(std::span<const double> a, std::span<const double> b, double epsilon_std = 1e-12);

/// Smallest series length that profiles under `config`.
std::size_t min_series_length(const ProfileConfig& config);

/// All-pairs reference implementation, O(n^2 m).
MatrixProfile compute_brute_force(std::span<const double> values, const ProfileConfig& config);

/// Same contract as compute_brute_force in O(n^2) using diagonal
/// covariance recurrences. Near-minimal candidates are re-scored with the
/// direct formula so exact repeats come out as exact zeros.
MatrixProfile compute_fast(std::span<const double> values, const ProfileConfig& config);

/// Profile of `values ++ [new_value]` given the profile of `values`.
/// Throws Error(ConfigMismatch) if `config` differs from the profile's or
/// the profile does not belong to `values`.
MatrixProfile append_and_update(const MatrixProfile& profile, std::span<const double> values,
                                double new_value, const ProfileConfig& config);

/// Greedy top-k discords: largest finite distance first (smaller index on
/// ties), skipping candidates closer than `exclusion` to an already chosen
/// index. May return fewer than k.
std::vector<std::size_t> top_discords(const MatrixProfile& profile, std::size_t k, std::size_t exclusion);

}  // namespace fleetguard::mp
