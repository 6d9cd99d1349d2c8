#include "ballsim/unfolding.hpp"

#include <algorithm>
#include <stdexcept>

namespace ballsim {

AtomicStep AtomicStep::from_outcome(const RoundOutcome& outcome) {
    if (outcome.balls_placed != 1 || outcome.sampled.empty()) {
        throw std::invalid_argument("AtomicStep: outcome is not a single-ball Memory step");
    }
    return {outcome.chosen, outcome.sampled.front(), outcome.cache_before, outcome.cache_after};
}

MemoryFolder::MemoryFolder(std::size_t n, RoundCallback on_round) : folded_(n), on_round_(std::move(on_round)) {}

void MemoryFolder::feed(const AtomicStep& step) {
    if (step.bin >= folded_.n()) throw std::out_of_range("MemoryFolder: bin index out of range");
    if (!open_) {
        FoldedRound round;
        round.first_step = steps_;
        round.cache_at_start = step.cache_before;
        round.outcome.chosen = step.bin;
        round.outcome.samples_used = 1;
        round.outcome.sampled.push_back(step.sampled);
        round.outcome.cache_before = step.cache_before;
        round.complete = false;
        needed_ = folded_.underloaded(step.bin) ? deficit(folded_, step.bin) + 1 : 1;
        open_ = std::move(round);
    }
    FoldedRound& round = *open_;
    auto& deltas = round.outcome.deltas;
    auto it = std::find_if(deltas.begin(), deltas.end(), [&](const auto& d) { return d.first == step.bin; });
    if (it == deltas.end()) {
        deltas.emplace_back(step.bin, 1);
    } else {
        ++it->second;
    }
    ++round.outcome.balls_placed;
    round.outcome.cache_after = step.cache_after;
    ++round.step_count;
    ++steps_;
    if (round.outcome.balls_placed == needed_) {
        round.complete = true;
        if (on_round_) on_round_(folded_, round);
        apply_outcome(folded_, round.outcome);
        open_.reset();
    }
}

std::optional<FoldedRound> MemoryFolder::pending() const { return open_; }

FoldResult fold_memory_trace(std::size_t n, std::span<const AtomicStep> steps) {
    FoldResult result;
    MemoryFolder folder(n, [&](const LoadState&, const FoldedRound& round) { result.rounds.push_back(round); });
    for (const auto& step : steps) folder.feed(step);
    if (auto partial = folder.pending()) {
        result.truncated = true;
        result.rounds.push_back(*partial);
    }
    return result;
}

void BadAllocationCounter::observe(const LoadState& after_step) {
    ++steps_;
    const auto n = static_cast<double>(after_step.n());
    const auto excess = static_cast<double>(static_cast<std::int64_t>(after_step.n()) * after_step.max_load() -
                                            after_step.total());
    if (excess >= threshold_ * n) ++count_;
}

std::int64_t bad_allocation_count(std::size_t n, std::span<const AtomicStep> steps, double threshold) {
    LoadState state(n);
    BadAllocationCounter counter(threshold);
    for (const auto& step : steps) {
        state.add_balls(step.bin, 1);
        state.finish_round(1);
        counter.observe(state);
    }
    return counter.count();
}

}  // namespace ballsim
