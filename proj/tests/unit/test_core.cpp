#include <doctest.h>

#include <random>
#include <set>
#include <vector>

#include "../oracles.hpp"
#include "ballsim/load_state.hpp"
#include "ballsim/rational.hpp"
#include "ballsim/rng.hpp"

using namespace ballsim;

namespace {

LoadState make(std::vector<Load> loads, bool tie_order = false) { return LoadState::from_loads(loads, tie_order); }

}  // namespace

TEST_CASE("rational arithmetic is exact and normalized") {
    CHECK(Rational(2, 4) == Rational(1, 2));
    CHECK(Rational(1, -2) == Rational(-1, 2));
    CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
    CHECK(Rational(4, 3).ceil() == 2);
    CHECK(Rational(-4, 3).ceil() == -1);
    CHECK(Rational(-4, 3).floor() == -2);
    CHECK(Rational(7).str() == "7");
    CHECK(Rational(-3, 6).str() == "-1/2");
    CHECK(Rational(1, 3) < Rational(1, 2));
}

TEST_CASE("rng streams are deterministic and distinct") {
    Rng a(7, 0), b(7, 0), c(7, 1), d(8, 0);
    std::vector<std::uint64_t> va, vb, vc, vd;
    for (int k = 0; k < 8; ++k) {
        va.push_back(a());
        vb.push_back(b());
        vc.push_back(c());
        vd.push_back(d());
    }
    CHECK(va == vb);
    CHECK(va != vc);
    CHECK(va != vd);
    Rng r(1);
    for (int k = 0; k < 10000; ++k) CHECK(r.below(7) < 7);
}

TEST_CASE("normalized_load examples") {
    auto s = make({0, 0});
    CHECK(normalized_load(s, 0).numerator == 0);
    CHECK(normalized_load(s, 0).denominator == 2);
    CHECK_FALSE(normalized_load(s, 0).underloaded());

    s = make({3, 1, 0, 0});
    CHECK(normalized_load(s, 0).value() == Rational(2));

    s = make({2, 0, 0, 0});
    CHECK(normalized_load(s, 1).value() == Rational(-1, 2));
    CHECK(normalized_load(s, 1).underloaded());

    CHECK_THROWS_AS(normalized_load(s, 4), std::out_of_range);
}

TEST_CASE("deficit examples") {
    CHECK(deficit(make({2, 0, 0, 0}), 1) == 1);
    CHECK(deficit(make({9, 0, 0}), 1) == 3);
    CHECK(deficit(make({5, 4, 0}), 2) == 3);
    CHECK_THROWS_AS(deficit(make({2, 0, 0, 0}), 0), std::invalid_argument);
    CHECK_THROWS_AS(deficit(make({1, 1}), 0), std::invalid_argument);
}

TEST_CASE("gap examples") {
    CHECK(gap(make({0, 0, 0})) == Rational(0));
    CHECK(gap(make({3, 1, 0, 0})) == Rational(2));
    CHECK(gap(make({2, 0, 0})) == Rational(4, 3));
}

TEST_CASE("sorted_ranks examples use the stable tie rule") {
    CHECK(sorted_ranks(make({1, 1, 2})) == std::vector<Bin>{2, 0, 1});
    CHECK(sorted_ranks(make({0, 0})) == std::vector<Bin>{0, 1});
    CHECK(sorted_ranks(make({5, 0, 5})) == std::vector<Bin>{0, 2, 1});
}

TEST_CASE("level index stays consistent under random ball additions") {
    std::mt19937_64 g(11);
    for (bool tie : {false, true}) {
        for (std::size_t n : {1U, 2U, 3U, 10U, 57U}) {
            LoadState s(n, tie);
            std::uniform_int_distribution<Bin> bin(0, static_cast<Bin>(n - 1));
            std::uniform_int_distribution<Load> count(1, 4);
            for (int step = 0; step < 600; ++step) {
                s.add_balls(bin(g), count(g));
                s.finish_round(1);
                if (step % 37 == 0) REQUIRE(s.consistent());
            }
            REQUIRE(s.consistent());
            oracle::Loads x(s.loads().begin(), s.loads().end());
            CHECK(s.total() == oracle::total(x));
            std::vector<std::size_t> expect = oracle::ranks(x);
            auto got = sorted_ranks(s);
            CHECK(std::vector<std::size_t>(got.begin(), got.end()) == expect);
            const auto rank_of = stable_rank_of(s);
            for (std::size_t r = 0; r < n; ++r) CHECK(rank_of[expect[r]] == r);
            std::set<Bin> seen;
            for (std::size_t r = 0; r < n; ++r) seen.insert(s.bin_at_rank(r));
            CHECK(seen.size() == n);
            for (std::size_t r = 1; r < n; ++r) CHECK(s.load(s.bin_at_rank(r - 1)) >= s.load(s.bin_at_rank(r)));
        }
    }
}

TEST_CASE("core invariants on random states") {
    std::mt19937_64 g(5);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + g() % 30;
        std::vector<Load> loads(n);
        for (auto& l : loads) l = static_cast<Load>(g() % 12);
        const auto s = make(loads);
        std::int64_t numerator_sum = 0;
        const Rational gp = gap(s);
        CHECK(gp >= Rational(0));
        for (Bin i = 0; i < n; ++i) {
            const auto y = normalized_load(s, i);
            numerator_sum += y.numerator;
            CHECK(gp >= y.value());
            CHECK(y.underloaded() == oracle::underloaded(loads, i));
            if (y.underloaded()) {
                const auto d = deficit(s, i);
                CHECK(d == oracle::deficit(loads, i));
                CHECK(Rational(d - 1) < -y.value());
                CHECK(-y.value() <= Rational(d));
            }
        }
        CHECK(numerator_sum == 0);
        CHECK(s.ceil_average() * static_cast<Load>(n) >= s.total());
    }
}
