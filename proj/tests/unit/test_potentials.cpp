#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "../oracles.hpp"
#include "ballsim/potentials.hpp"

using namespace ballsim;

namespace {

LoadState make(std::vector<Load> loads) { return LoadState::from_loads(loads); }

}  // namespace

TEST_CASE("delta examples") {
    CHECK(compute_delta(make({2, 0, 0, 0})) == Rational(3));
    CHECK(compute_delta(make({1, 1, 1})) == Rational(0));
    CHECK(compute_delta(make({1, 0, 0})) == Rational(4, 3));
    CHECK(compute_delta(LoadState(5)) == Rational(0));
}

TEST_CASE("delta equals twice the overloaded mass") {
    std::mt19937_64 g(5);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + g() % 40;
        oracle::Loads x(n);
        for (auto& v : x) v = static_cast<Load>(g() % 20);
        const auto s = LoadState::from_loads(x);
        CHECK(compute_delta(s) == overload_mass_doubled(s));
        double brute = 0;
        const double avg = static_cast<double>(oracle::total(x)) / static_cast<double>(n);
        for (auto v : x) brute += std::abs(static_cast<double>(v) - avg);
        CHECK(compute_delta(s).to_double() == doctest::Approx(brute).epsilon(1e-12));
    }
}

TEST_CASE("log phi examples") {
    CHECK(compute_log_phi(make({0, 0}), 0.5) == kNegInfinity);
    CHECK(std::isinf(compute_log_phi(make({1, 0}), 0.5)));
    // y = (2, 1, -1, -2): only the first bin has y >= 2.
    CHECK(compute_log_phi(make({4, 3, 1, 0}), 0.25) == doctest::Approx(0.5));
    CHECK(compute_log_phi(make({4, 3, 1, 0}), 0.25, 0) == doctest::Approx(std::log(std::exp(0.5) + std::exp(0.25))));

    const std::size_t n = 10000;
    std::vector<Load> spike(n, 100);
    spike[0] += 100;
    const auto s = make(spike);
    const double y = 100.0 - 100.0 / static_cast<double>(n);
    CHECK(compute_log_phi(s, 1.0) == doctest::Approx(y));
}

TEST_CASE("log phi matches the direct sum") {
    std::mt19937_64 g(6);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + g() % 30;
        const auto x = oracle::random_spiked_loads(g, n, 12);
        const auto s = LoadState::from_loads(x);
        for (double alpha : {0.05, 0.1, 0.5, 1.0}) {
            for (Load min_y : {Load{0}, Load{2}}) {
                CHECK(compute_log_phi(s, alpha, min_y) ==
                      doctest::Approx(std::log(oracle::phi(x, alpha, min_y))).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("potential relations") {
    std::mt19937_64 g(7);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + g() % 30;
        oracle::Loads x(n);
        for (auto& v : x) v = static_cast<Load>(g() % 15);
        const auto s = LoadState::from_loads(x);
        for (double alpha : {0.05, 0.25, 1.0}) {
            const double log_phi = compute_log_phi(s, alpha);
            const double phi = std::isinf(log_phi) ? 0.0 : std::exp(log_phi);
            CHECK(phi + 1e-9 >= alpha * (compute_delta(s).to_double() / 2 - 2.0 * static_cast<double>(n)));
            const double max_y = gap(s).to_double();
            CHECK(max_y <= std::max(2.0, log_phi / alpha) + 1e-9);
        }
    }
}

TEST_CASE("good event examples") {
    CHECK(good_event(make({1, 0, 0, 0})));
    CHECK_FALSE(good_event(LoadState(40)));
    std::vector<Load> flat(40, 3);
    CHECK_FALSE(good_event(make(flat)));
    flat[0] = 4;
    CHECK(underloaded_count(make(flat)) == 39);
    CHECK(good_event(make(flat)));

    // One underloaded bin out of 100 and Delta = 2 * 99/100 < 10.
    std::vector<Load> almost(100, 1);
    almost[0] = 0;
    CHECK(underloaded_count(make(almost)) == 1);
    CHECK_FALSE(good_event(make(almost)));
    // Delta large enough on its own.
    std::vector<Load> heavy(100, 0);
    heavy[0] = 6;
    CHECK(good_event(make(heavy)));
}

TEST_CASE("snapshot fields") {
    const auto s = make({4, 3, 1, 0});
    const auto snap = take_snapshot(s, 0.25);
    CHECK(snap.gap == Rational(2));
    CHECK(snap.delta == Rational(6));
    CHECK(snap.log_phi == doctest::Approx(0.5));
    CHECK(snap.underloaded_count == 2);
    CHECK(snap.good_event);
}

TEST_CASE("good event density windows") {
    std::vector<std::uint8_t> flags = {0, 1, 1, 0, 1, 0, 0};
    CHECK(good_event_density(flags, 1, 2) == 2);
    CHECK(good_event_density(flags, 2, 3) == 2);
    CHECK(good_event_density(flags, 4, 2) == 1);
    CHECK_THROWS_AS(good_event_density(flags, 5, 2), std::out_of_range);
    CHECK_THROWS_AS(good_event_density(flags, -1, 2), std::out_of_range);

    const auto scan = scan_good_event_density(flags, 2);
    CHECK(scan.windows == 4);
    CHECK(scan.min_count == 1);
    CHECK(scan.min_t0 == 3);
    CHECK(scan.below_bound == 0);
    CHECK(scan_good_event_density(std::vector<std::uint8_t>(100, 0), 40).below_bound == 59);

    std::mt19937_64 g(8);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::uint8_t> f(2 + g() % 200);
        for (auto& v : f) v = static_cast<std::uint8_t>(g() % 2);
        const auto n = static_cast<std::int64_t>(1 + g() % 20);
        const auto sc = scan_good_event_density(f, n);
        std::int64_t windows = 0;
        std::int64_t min_count = n + 2;
        for (std::int64_t t0 = 1; t0 + n < static_cast<std::int64_t>(f.size()); ++t0) {
            std::int64_t c = 0;
            for (std::int64_t r = t0; r <= t0 + n; ++r) c += f[static_cast<std::size_t>(r)];
            ++windows;
            min_count = std::min(min_count, c);
            CHECK(good_event_density(f, t0, n) == c);
        }
        CHECK(sc.windows == windows);
        if (windows > 0) CHECK(sc.min_count == min_count);
    }
}

TEST_CASE("good event series push") {
    GoodEventSeries series;
    series.push(LoadState(10));
    series.push(true);
    CHECK(series.size() == 2);
    CHECK(series.flags()[0] == 0);
    CHECK(series.flags()[1] == 1);
}
