#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "fleetguard/error.hpp"
#include "fleetguard/matrix_profile.hpp"
#include "oracles.hpp"

using namespace fleetguard;
using namespace fleetguard::mp;

namespace {

ProfileConfig cfg(std::size_t m, std::size_t excl)
{
    ProfileConfig c;
    c.window_m = m;
    c.exclusion = excl;
    return c;
}

void check_against_oracle(const std::vector<double>& x, const ProfileConfig& c, const MatrixProfile& p)
{
    const auto o = oracle::brute_profile(x, c.window_m, c.exclusion);
    REQUIRE(p.distances.size() == o.distances.size());
    for (std::size_t i = 0; i < o.distances.size(); ++i) {
        if (std::isinf(o.distances[i])) {
            CHECK(std::isinf(p.distances[i]));
            CHECK(p.neighbor_index[i] == -1);
        } else {
            CHECK(std::abs(p.distances[i] - o.distances[i]) <= 1e-9);
        }
    }
}

}  // namespace

TEST_CASE("znorm_distance: worked values")
{
    CHECK(znorm_distance(std::vector<double>{1, 5, 2}, std::vector<double>{1, 5, 2}) == 0.0);
    CHECK(znorm_distance(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}) == doctest::Approx(0.0));
    CHECK(znorm_distance(std::vector<double>{0, 0, 0}, std::vector<double>{1, 2, 3}) == doctest::Approx(std::sqrt(6.0)));
    CHECK(znorm_distance(std::vector<double>{4, 4, 4}, std::vector<double>{7, 7, 7}) == 0.0);
}

TEST_CASE("znorm_distance: errors")
{
    try {
        znorm_distance(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3});
        FAIL("expected LengthMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::LengthMismatch);
    }
    CHECK_THROWS_AS(znorm_distance(std::vector<double>{1}, std::vector<double>{1}), Error);
}

TEST_CASE("znorm_distance: correlation identity on random length-8 pairs")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0, 1);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> a(8), b(8);
        for (auto& v : a) v = n(rng);
        for (auto& v : b) v = n(rng);
        CHECK(std::abs(znorm_distance(a, b) - oracle::correlation_distance(a, b)) <= 1e-9);
    }
}

TEST_CASE("config validation")
{
    CHECK_THROWS_AS(cfg(1, 1).validate(), Error);
    CHECK_THROWS_AS(cfg(4, 0).validate(), Error);
    CHECK(ProfileConfig::for_window(16).exclusion == 8);
    CHECK(ProfileConfig::for_window(3).exclusion == 1);
    CHECK(ProfileConfig::for_window(2).exclusion == 1);
    CHECK(min_series_length(cfg(3, 1)) == 5);
}

TEST_CASE("brute force: exact periodicity gives a zero profile")
{
    const std::vector<double> x{0, 1, 0, 1, 0, 1, 0, 1};
    const auto p = compute_brute_force(x, cfg(2, 1));
    for (double d : p.distances) CHECK(d == 0.0);
    const auto f = compute_fast(x, cfg(2, 1));
    for (double d : f.distances) CHECK(std::abs(d) <= 1e-9);
}

TEST_CASE("brute force: spike series discord covers the spike")
{
    const std::vector<double> x{0, 0, 1, 0, 0, 10, 0, 0, 1, 0, 0};
    const auto c = cfg(3, 1);
    const auto p = compute_brute_force(x, c);
    check_against_oracle(x, c, p);

    const auto o = oracle::brute_profile(x, 3, 1);
    std::size_t arg = 0;
    for (std::size_t i = 0; i < o.distances.size(); ++i) {
        if (o.distances[i] > o.distances[arg]) arg = i;
    }
    CHECK(arg <= 5);
    CHECK(arg + 3 > 5);

    const auto top = top_discords(p, 1, 1);
    REQUIRE(top.size() == 1);
    CHECK(top[0] == arg);
}

TEST_CASE("insufficient length")
{
    const std::vector<double> x{1, 2, 3};
    try {
        compute_brute_force(x, cfg(3, 1));
        FAIL("expected InsufficientLength");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InsufficientLength);
    }
    CHECK_THROWS_AS(compute_fast(x, cfg(3, 1)), Error);
}

TEST_CASE("fast and brute force agree with the oracle on random series")
{
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> len(30, 160);
    for (int t = 0; t < 30; ++t) {
        const std::size_t m = std::vector<std::size_t>{4, 8, 16}[t % 3];
        const auto c = ProfileConfig::for_window(m);
        const auto x = oracle::random_series(rng, len(rng));
        const auto brute = compute_brute_force(x, c);
        const auto fast = compute_fast(x, c);
        check_against_oracle(x, c, brute);
        check_against_oracle(x, c, fast);
        CHECK(brute.neighbor_index == fast.neighbor_index);
    }
}

TEST_CASE("profile invariants: bounds, neighbour distance, exclusion")
{
    std::mt19937_64 rng(1234);
    for (int t = 0; t < 20; ++t) {
        const auto c = ProfileConfig::for_window(8);
        const auto x = oracle::random_series(rng, 120);
        const auto p = compute_fast(x, c);
        for (std::size_t i = 0; i < p.distances.size(); ++i) {
            if (std::isinf(p.distances[i])) continue;
            CHECK(p.distances[i] >= 0.0);
            CHECK(p.distances[i] <= 2.0 * std::sqrt(8.0) + 1e-9);
            const auto j = static_cast<std::size_t>(p.neighbor_index[i]);
            CHECK((i > j ? i - j : j - i) > c.exclusion);
            const std::span<const double> xs(x);
            CHECK(std::abs(znorm_distance(xs.subspan(i, 8), xs.subspan(j, 8)) - p.distances[i]) <= 1e-9);
        }
    }
}

TEST_CASE("affine invariance")
{
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> scale(0.1, 50.0), shift(-100, 100);
    for (int t = 0; t < 20; ++t) {
        const auto c = ProfileConfig::for_window(8);
        const auto x = oracle::random_series(rng, 100);
        const double a = scale(rng), b = shift(rng);
        std::vector<double> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
        const auto px = compute_fast(x, c);
        const auto py = compute_fast(y, c);
        for (std::size_t i = 0; i < px.distances.size(); ++i) CHECK(std::abs(px.distances[i] - py.distances[i]) <= 1e-9);
    }
}

TEST_CASE("constant stretches follow the constant-window rule in both algorithms")
{
    std::vector<double> x(40, 3.0);
    for (std::size_t i = 20; i < 30; ++i) x[i] = static_cast<double>(i % 3);
    const auto c = cfg(4, 2);
    check_against_oracle(x, c, compute_brute_force(x, c));
    check_against_oracle(x, c, compute_fast(x, c));
}

TEST_CASE("windows without an admissible partner")
{
    const std::vector<double> x{1, 3, 2, 5, 4, 6};
    const auto c = cfg(3, 2);
    const auto p = compute_brute_force(x, c);
    REQUIRE(p.distances.size() == 4);
    CHECK(std::isinf(p.distances[1]));
    CHECK(p.neighbor_index[1] == -1);
    check_against_oracle(x, c, compute_fast(x, c));
}

TEST_CASE("append_and_update matches recomputation")
{
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n(0, 1);
    const auto c = ProfileConfig::for_window(6);
    auto x = oracle::random_series(rng, 40);
    auto p = compute_fast(x, c);
    for (int step = 0; step < 30; ++step) {
        const double v = n(rng);
        auto next = append_and_update(p, x, v, c);
        for (std::size_t i = 0; i < p.distances.size(); ++i) CHECK(next.distances[i] <= p.distances[i]);
        x.push_back(v);
        check_against_oracle(x, c, next);
        CHECK(next.neighbor_index == compute_brute_force(x, c).neighbor_index);
        p = std::move(next);
    }
}

TEST_CASE("append_and_update: constant series stays at zero, mismatched config rejected")
{
    std::vector<double> x(20, 1.5);
    const auto c = cfg(4, 2);
    auto p = compute_fast(x, c);
    auto next = append_and_update(p, x, 1.5, c);
    for (double d : next.distances) CHECK(d == 0.0);
    try {
        append_and_update(p, x, 1.0, cfg(5, 2));
        FAIL("expected ConfigMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ConfigMismatch);
    }
}

TEST_CASE("top_discords: tie-break, separation, short profiles")
{
    MatrixProfile zero;
    zero.distances.assign(10, 0.0);
    zero.neighbor_index.assign(10, 5);
    CHECK(top_discords(zero, 2, 3) == std::vector<std::size_t>{0, 3});
    CHECK(top_discords(zero, 100, 3) == std::vector<std::size_t>{0, 3, 6, 9});

    MatrixProfile p;
    p.distances = {1, 5, 4.9, 2, 3, 0.5};
    p.neighbor_index.assign(6, 0);
    CHECK(top_discords(p, 3, 2) == std::vector<std::size_t>{1, 4});
    CHECK(top_discords(p, 1, 2) == std::vector<std::size_t>{1});
}

TEST_CASE("fast is quicker than brute force on a 2000-point random walk with m = 50")
{
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0, 1);
    std::vector<double> x(2000);
    double acc = 0;
    for (auto& v : x) v = acc += n(rng);
    const auto c = ProfileConfig::for_window(50);
    const auto t0 = std::chrono::steady_clock::now();
    const auto fast = compute_fast(x, c);
    const auto t1 = std::chrono::steady_clock::now();
    const auto brute = compute_brute_force(x, c);
    const auto t2 = std::chrono::steady_clock::now();
    const double speedup = std::chrono::duration<double>(t2 - t1).count() / std::chrono::duration<double>(t1 - t0).count();
    MESSAGE("fast/brute speedup: " << speedup);
    CHECK(speedup >= 5.0);
    for (std::size_t i = 0; i < fast.distances.size(); ++i) CHECK(std::abs(fast.distances[i] - brute.distances[i]) <= 1e-9);
}
