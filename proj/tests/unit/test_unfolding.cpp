#include <doctest.h>

#include <vector>

#include "ballsim/unfolding.hpp"

using namespace ballsim;

namespace {

AtomicStep step(Bin bin) { return {bin, bin, std::nullopt, std::nullopt}; }

std::vector<AtomicStep> memory_run(std::size_t n, std::int64_t steps, std::uint64_t seed, LoadState* end = nullptr) {
    ProcessConfig c;
    c.kind = ProcessKind::Memory;
    c.seed = seed;
    RunOptions opt;
    opt.record_outcomes = true;
    auto r = run(c, n, steps, {}, opt);
    if (end) *end = r.state;
    std::vector<AtomicStep> out;
    for (const auto& o : r.outcomes) out.push_back(AtomicStep::from_outcome(o));
    return out;
}

}  // namespace

TEST_CASE("folding examples") {
    // Empty start: bin 0 is not underloaded, so step 1 is a round by itself.
    // Then loads [1, 0]: bin 1 has deficit 1 and its round takes 2 steps.
    const std::vector<AtomicStep> steps = {step(0), step(1), step(1)};
    const auto folded = fold_memory_trace(2, steps);
    CHECK_FALSE(folded.truncated);
    REQUIRE(folded.rounds.size() == 2);
    CHECK(folded.rounds[0].step_count == 1);
    CHECK(folded.rounds[1].first_step == 1);
    CHECK(folded.rounds[1].step_count == 2);
    CHECK(folded.rounds[1].outcome.chosen == 1);
    CHECK(folded.rounds[1].outcome.balls_placed == 2);
    CHECK(folded.rounds[1].outcome.deltas == std::vector<std::pair<Bin, Load>>{{1, 2}});

    const std::vector<AtomicStep> mixed = {step(0), step(1), step(0)};
    const auto m = fold_memory_trace(2, mixed);
    REQUIRE(m.rounds.size() == 2);
    CHECK(m.rounds[1].outcome.deltas == std::vector<std::pair<Bin, Load>>{{1, 1}, {0, 1}});
}

TEST_CASE("truncated trace leaves a partial round") {
    const std::vector<AtomicStep> steps = {step(0), step(1)};
    const auto folded = fold_memory_trace(2, steps);
    CHECK(folded.truncated);
    REQUIRE(folded.rounds.size() == 2);
    CHECK_FALSE(folded.rounds[1].complete);
    CHECK(folded.rounds[1].step_count == 1);
    CHECK_THROWS_AS(fold_memory_trace(2, std::vector<AtomicStep>{step(2)}), std::out_of_range);
}

TEST_CASE("folded rounds replay to the atomic end state") {
    for (std::size_t n : {2U, 7U, 50U}) {
        LoadState end(n);
        const auto steps = memory_run(n, 5000, 11 + n, &end);
        const auto folded = fold_memory_trace(n, steps);
        LoadState replay(n);
        std::size_t covered = 0;
        for (const auto& r : folded.rounds) {
            CHECK(r.first_step == covered);
            covered += r.step_count;
            for (const auto& [bin, k] : r.outcome.deltas) replay.add_balls(bin, k);
            replay.finish_round(r.outcome.balls_placed);
        }
        CHECK(covered == steps.size());
        for (Bin i = 0; i < n; ++i) CHECK(replay.load(i) == end.load(i));
        for (std::size_t k = 0; k + 1 < folded.rounds.size(); ++k) CHECK(folded.rounds[k].complete);
        CHECK(folded.truncated == !folded.rounds.back().complete);
    }
}

TEST_CASE("streaming folder sees the folded state at each boundary") {
    const auto steps = memory_run(20, 3000, 5);
    LoadState atomic(20);
    std::size_t consumed = 0;
    bool consistent = true;
    MemoryFolder folder(20, [&](const LoadState& start, const FoldedRound& r) {
        LoadState check(20);
        for (std::size_t k = 0; k < r.first_step; ++k) check.add_balls(steps[k].bin, 1);
        for (Bin i = 0; i < 20; ++i) consistent = consistent && check.load(i) == start.load(i);
        consumed = r.first_step + r.step_count;
    });
    for (const auto& s : steps) folder.feed(s);
    CHECK(consistent);
    CHECK(folder.steps_seen() == steps.size());
    CHECK(consumed + (folder.pending() ? folder.pending()->step_count : 0) == steps.size());
}

TEST_CASE("bad allocation count extremes") {
    const auto steps = memory_run(10, 1000, 3);
    CHECK(bad_allocation_count(10, steps, 0.0) == 1000);
    CHECK(bad_allocation_count(10, steps, 1001.0) == 0);

    // Loads after each step of [0, 0, 0]: gaps 2/3, 1/3, 0.
    const std::vector<AtomicStep> three = {step(0), step(1), step(2)};
    CHECK(bad_allocation_count(3, three, 0.5) == 1);
    CHECK(bad_allocation_count(3, three, 1.0 / 3.0) == 2);
}
