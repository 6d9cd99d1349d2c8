#include <doctest.h>

#include <random>
#include <vector>

#include "../oracles.hpp"
#include "ballsim/conditions.hpp"
#include "ballsim/unfolding.hpp"

using namespace ballsim;

namespace {

LoadState make(std::vector<Load> loads) { return LoadState::from_loads(loads); }

RoundOutcome outcome(Bin chosen, std::vector<std::pair<Bin, Load>> deltas) {
    RoundOutcome o;
    o.chosen = chosen;
    o.sampled = {chosen};
    o.samples_used = 1;
    for (const auto& [b, k] : deltas) o.add(b, k);
    return o;
}

}  // namespace

TEST_CASE("condition P examples") {
    CHECK_FALSE(check_condition_p(ProbabilityVector{{0.25, 0.25, 0.25, 0.25}}, 4));
    const auto v = check_condition_p(ProbabilityVector{{0.3, 0.25, 0.25, 0.2}}, 4);
    REQUIRE(v);
    CHECK(v->k == 1);
    CHECK(v->prefix == doctest::Approx(0.3));
    CHECK(v->bound == doctest::Approx(0.25));
    CHECK_THROWS_AS(check_condition_p(ProbabilityVector{{0.5, 0.5}}, 3), std::invalid_argument);

    for (std::size_t n : {1U, 2U, 5U, 64U, 1000U}) {
        ProbabilityVector two;
        RankMass exact{std::vector<std::uint32_t>(n), static_cast<std::uint32_t>(n * n)};
        for (std::size_t i = 1; i <= n; ++i) {
            two.probs.push_back(static_cast<double>(2 * i - 1) / static_cast<double>(n * n));
            exact.units[i - 1] = static_cast<std::uint32_t>(2 * i - 1);
        }
        CHECK_FALSE(check_condition_p(two, n));
        CHECK_FALSE(check_condition_p(exact, n));
    }
}

TEST_CASE("condition P agrees with the brute-force prefix loop") {
    std::mt19937_64 g(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + g() % 50;
        std::vector<double> p(n);
        if (trial % 2 == 0) {
            p = oracle::random_majorized(g, n);
        } else {
            double s = 0;
            for (auto& v : p) s += (v = u(g));
            for (auto& v : p) v /= s;
        }
        CHECK(check_condition_p(ProbabilityVector{p}, n).has_value() == !oracle::majorized_by_uniform(p));
    }
}

TEST_CASE("MAX_BIAS fails condition P and MIN_BIAS passes") {
    for (std::size_t n : {4U, 10U, 100U}) {
        const auto max = check_condition_p(make_bias_vector(BiasKind::MaxBias, n, 2, 2), n);
        REQUIRE(max);
        CHECK(max->k == 1);
        CHECK_FALSE(check_condition_p(make_bias_vector(BiasKind::MinBias, n, 2, 2), n));
    }
}

TEST_CASE("tie classes are relabeled before a P violation is reported") {
    // Bins 0 and 1 tie; the stable order ranks bin 0 first.
    const auto s = make({1, 1, 0});
    RankMass p{{2, 0, 1}, 3};
    CHECK(check_condition_p(p, 3));
    CHECK_FALSE(check_condition_p(p, s));
    RankMass q{{1, 2, 0}, 3};
    CHECK(check_condition_p(q, s));
}

TEST_CASE("effective_vector_memory examples") {
    auto p = effective_vector_memory(make({1, 0}), 0);
    CHECK(p.units == std::vector<std::uint32_t>{1, 1});
    CHECK(p.denominator == 2);

    p = effective_vector_memory(make({3, 0, 0}), 1);
    CHECK(p.units == std::vector<std::uint32_t>{0, 2, 1});

    p = effective_vector_memory(make({4, 4, 4, 4, 4}), 3);
    CHECK(p.units == std::vector<std::uint32_t>(5, 1));
}

TEST_CASE("effective_vector_memory matches enumeration and satisfies P") {
    std::mt19937_64 g(41);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + g() % 25;
        oracle::Loads x(n);
        for (auto& v : x) v = static_cast<Load>(g() % 5);
        const std::size_t cache = g() % n;
        const auto s = LoadState::from_loads(x);
        const auto p = effective_vector_memory(s, static_cast<Bin>(cache));
        const auto order = oracle::ranks(x);
        std::vector<std::uint32_t> expect(n, 0);
        for (std::size_t u = 0; u < n; ++u) {
            const auto committed = oracle::memory_commit(x, cache, u);
            for (std::size_t r = 0; r < n; ++r) {
                if (order[r] == committed) ++expect[r];
            }
        }
        CHECK(p.units == expect);
        std::uint64_t sum = 0;
        for (auto v : p.units) sum += v;
        CHECK(sum == p.denominator);
        CHECK_FALSE(check_condition_p(p, s));
    }
}

TEST_CASE("condition W examples") {
    const auto s = make({2, 0, 0, 0});
    CHECK_FALSE(check_condition_w(s, outcome(1, {{1, 2}})));

    // W = 4, ceil = 1: both receivers end at ceil.
    const auto t = make({4, 0, 0, 0, 0, 0, 0, 0});
    const auto two_at_ceil = check_condition_w(t, outcome(1, {{1, 1}, {2, 1}}));
    REQUIRE(two_at_ceil);
    CHECK(two_at_ceil->rule == WRule::AtCeil);
    CHECK_FALSE(check_condition_w(make({6, 0, 0, 0}), outcome(1, {{1, 2}, {2, 1}})));

    const auto v = make({10, 0, 0, 0, 0});
    const auto a = check_condition_w(v, outcome(1, {{1, 1}, {2, 3}, {3, 3}}));
    REQUIRE(a);
    CHECK(a->rule == WRule::BallCount);
    const auto b = check_condition_w(make({6, 1, 0, 0}), outcome(2, {{1, 3}}));
    REQUIRE(b);
    CHECK(b->rule == WRule::AboveCeilPlusOne);
    CHECK(b->bin == 1);

    const auto c = check_condition_w(s, outcome(1, {{1, 1}, {0, 1}}));
    REQUIRE(c);
    CHECK(c->rule == WRule::ReceiverOverloaded);
    CHECK(c->bin == 0);

    const auto d = check_condition_w(make({3, 1, 1, 0}), outcome(3, {{1, 1}, {2, 1}, {3, 1}}));
    REQUIRE(d);
    CHECK(d->rule == WRule::AtCeil);

    const auto e = check_condition_w(s, outcome(0, {{0, 2}}));
    REQUIRE(e);
    CHECK(e->rule == WRule::OverloadedSingle);

    CHECK_THROWS_AS(check_condition_w(s, [] {
                        auto o = outcome(1, {{1, 2}});
                        o.balls_placed = 3;
                        return o;
                    }()),
                    std::invalid_argument);
}

TEST_CASE("condition W: duplicated delta entries are merged") {
    const auto s = make({2, 0, 0, 0});
    CHECK_FALSE(check_condition_w(s, outcome(1, {{1, 1}, {1, 1}})));
}

TEST_CASE("packing and tight_packing outcomes always satisfy P and W") {
    for (auto kind : {ProcessKind::Packing, ProcessKind::TightPacking}) {
        for (std::size_t n : {2U, 3U, 10U, 100U}) {
            ProcessConfig c;
            c.kind = kind;
            c.seed = 7 + n;
            ConditionAuditor auditor(AuditMode::Strict);
            RunHooks hooks;
            hooks.before_round = [&](const LoadState& b, const RoundOutcome& o, const Process& p) {
                auditor.observe(b, o, p);
            };
            CHECK_NOTHROW(run(c, n, 100000, hooks));
            CHECK(auditor.summary().passed());
            CHECK(auditor.summary().rounds == 100000);
        }
    }
}

TEST_CASE("audit_trace counts violations of a non-filling process") {
    ProcessConfig c;
    c.kind = ProcessKind::OneChoice;
    c.seed = 1;
    RunOptions opt;
    opt.record_outcomes = true;
    std::int64_t underloaded_samples = 0;
    RunHooks hooks;
    hooks.before_round = [&](const LoadState& b, const RoundOutcome& o, const Process&) {
        if (b.underloaded(o.chosen)) ++underloaded_samples;
    };
    const auto r = run(c, 10, 2000, hooks, opt);
    const auto summary = audit_trace(10, r.outcomes, SamplingLaw::Uniform, AuditMode::Audit);
    CHECK(summary.w_violations == underloaded_samples);
    CHECK(summary.w_violations > 0);
    CHECK(summary.p_violations == 0);
    CHECK_THROWS_AS(audit_trace(10, r.outcomes, SamplingLaw::Uniform, AuditMode::Strict), ConditionViolation);

    c.kind = ProcessKind::Packing;
    const auto p = run(c, 10, 2000, {}, opt);
    CHECK(audit_trace(10, p.outcomes, SamplingLaw::Uniform, AuditMode::Strict).passed());
}

TEST_CASE("coupling form is implied by condition W and accepts folded memory rounds") {
    std::mt19937_64 g(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + g() % 10;
        oracle::Loads x(n);
        for (auto& v : x) v = static_cast<Load>(g() % 6);
        const auto s = LoadState::from_loads(x);
        RoundOutcome o;
        tight_packing_outcome(s, static_cast<Bin>(g() % n), o);
        CHECK_FALSE(check_condition_w(s, o));
        CHECK_FALSE(check_coupling_form(s, o));
    }
    std::int64_t rounds = 0;
    std::int64_t violations = 0;
    MemoryFolder folder(20, [&](const LoadState& start, const FoldedRound& r) {
        ++rounds;
        if (check_coupling_form(start, r.outcome)) ++violations;
    });
    ProcessConfig c;
    c.kind = ProcessKind::Memory;
    RunHooks hooks;
    hooks.after_round = [&](const LoadState&, const RoundOutcome& o) { folder.feed(AtomicStep::from_outcome(o)); };
    run(c, 20, 50000, hooks);
    CHECK(rounds > 0);
    CHECK(violations == 0);
}
