#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ballsim/load_state.hpp"
#include "ballsim/processes.hpp"

namespace ballsim {

/// One Memory step: a single ball placed into `bin`.
struct AtomicStep {
    Bin bin = 0;
    Bin sampled = 0;
    std::optional<Bin> cache_before;
    std::optional<Bin> cache_after;

    static AtomicStep from_outcome(const RoundOutcome& outcome);
    bool operator==(const AtomicStep&) const = default;
};

/// A group of consecutive atomic steps forming one round of the folded process.
struct FoldedRound {
    std::size_t first_step = 0;
    std::size_t step_count = 0;
    RoundOutcome outcome;             ///< chosen = bin of the first step, deltas aggregated
    std::optional<Bin> cache_at_start;///< Memory cache when the round began
    bool complete = true;
};

/**
 * Streaming folder for Memory traces.
 *
 * Round boundaries are greedy: the first step of a round commits to bin i;
 * against the round-start loads, an overloaded i closes the round after that
 * step, an underloaded i keeps it open for deficit(i) + 1 steps. The folder
 * holds the folded process's own state, which equals the atomic state at
 * every boundary, so the callback sees the exact round-start configuration.
 */
class MemoryFolder {
public:
    using RoundCallback = std::function<void(const LoadState& round_start, const FoldedRound& round)>;

    MemoryFolder(std::size_t n, RoundCallback on_round);

    void feed(const AtomicStep& step);
    /// Folded state after the last completed round.
    [[nodiscard]] const LoadState& state() const { return folded_; }
    [[nodiscard]] std::size_t steps_seen() const { return steps_; }
    [[nodiscard]] std::int64_t rounds_completed() const { return folded_.rounds(); }
    /// The round still open at the end of the trace, if any.
    [[nodiscard]] std::optional<FoldedRound> pending() const;

private:
    LoadState folded_;
    RoundCallback on_round_;
    std::size_t steps_ = 0;
    std::optional<FoldedRound> open_;
    Load needed_ = 0;
};

struct FoldResult {
    std::vector<FoldedRound> rounds;  ///< complete rounds, then the partial one if the trace was truncated
    bool truncated = false;
};

FoldResult fold_memory_trace(std::size_t n, std::span<const AtomicStep> steps);

/// Atomic steps s (1-based) whose post-step gap is >= threshold.
std::int64_t bad_allocation_count(std::size_t n, std::span<const AtomicStep> steps, double threshold);

/// Streaming form of bad_allocation_count over loads observed after each atomic step.
class BadAllocationCounter {
public:
    explicit BadAllocationCounter(double threshold) : threshold_(threshold) {}
    void observe(const LoadState& after_step);
    [[nodiscard]] std::int64_t count() const { return count_; }
    [[nodiscard]] std::int64_t steps() const { return steps_; }

private:
    double threshold_;
    std::int64_t count_ = 0;
    std::int64_t steps_ = 0;
};

}  // namespace ballsim
