#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "ballsim/rational.hpp"

namespace ballsim {

using Bin = std::uint32_t;
using Load = std::int64_t;

/**
 * Load configuration of n bins plus the run counters.
 *
 * Bins are 0-based. Besides the raw loads the state keeps a level index
 * (load value -> number of bins, number of bins strictly above) and a
 * permutation of the bins sorted by non-increasing load. Both are updated
 * incrementally in O(1) per ball, which keeps rank and threshold queries
 * cheap: realized gaps are small, so the number of distinct levels is small.
 *
 * The permutation orders bins arbitrarily within a level. The stable
 * "ascending bin index within a level" order used for reporting is either
 * derived on demand (sorted_ranks) or, when constructed with
 * track_tie_order, maintained per level in ordered sets.
 */
class LoadState {
public:
    explicit LoadState(std::size_t n, bool track_tie_order = false);

    /// State holding the given loads with t = S = 0 unless overridden.
    static LoadState from_loads(std::span<const Load> loads, bool track_tie_order = false);

    [[nodiscard]] std::size_t n() const { return loads_.size(); }
    [[nodiscard]] Load load(Bin i) const { return loads_.at(i); }
    [[nodiscard]] std::span<const Load> loads() const { return loads_; }

    /// W: total balls.
    [[nodiscard]] std::int64_t total() const { return total_; }
    /// t: completed rounds.
    [[nodiscard]] std::int64_t rounds() const { return rounds_; }
    /// S: bins sampled so far.
    [[nodiscard]] std::int64_t samples() const { return samples_; }

    [[nodiscard]] Load max_load() const { return base_ + static_cast<Load>(counts_.size()) - 1; }
    [[nodiscard]] Load min_load() const { return base_; }

    /// Number of bins whose load equals `level`.
    [[nodiscard]] std::size_t count_at(Load level) const;
    /// Number of bins whose load is strictly greater than `level`.
    [[nodiscard]] std::size_t count_above(Load level) const;

    /// ceil(W / n).
    [[nodiscard]] Load ceil_average() const {
        const auto n = static_cast<std::int64_t>(n_);
        return (total_ + n - 1) / n;
    }
    /// y_i < 0, decided as n * x_i < W.
    [[nodiscard]] bool underloaded(Bin i) const {
        return static_cast<std::int64_t>(n_) * loads_[i] < total_;
    }

    /// Bin at position `rank` of the bucket order (0 = heaviest; ties in arbitrary order).
    [[nodiscard]] Bin bin_at_rank(std::size_t rank) const { return order_[rank]; }
    /// Position of bin i in the bucket order.
    [[nodiscard]] std::size_t bucket_rank(Bin i) const { return rank_of_[i]; }

    [[nodiscard]] bool tracks_tie_order() const { return track_tie_order_; }
    /// Bins at `level` in ascending index order; requires track_tie_order.
    [[nodiscard]] const std::set<Bin>& bins_at(Load level) const;

    /// Adds `count` >= 1 balls to bin i.
    void add_balls(Bin i, Load count);
    /// Closes a round: t += 1, S += samples_used.
    void finish_round(std::int64_t samples_used) {
        ++rounds_;
        samples_ += samples_used;
    }
    /// Overrides the counters (used when rebuilding a state from a record).
    void set_counters(std::int64_t rounds, std::int64_t samples) {
        rounds_ = rounds;
        samples_ = samples;
    }

    /// Recomputes every derived structure from scratch and compares; for tests and debug runs.
    [[nodiscard]] bool consistent() const;

    friend bool operator==(const LoadState& a, const LoadState& b) {
        return a.loads_ == b.loads_ && a.total_ == b.total_ && a.rounds_ == b.rounds_ &&
               a.samples_ == b.samples_;
    }

private:
    void move_up_one(Bin i);
    std::size_t level_slot(Load level) const { return static_cast<std::size_t>(level - base_); }

    std::size_t n_;
    bool track_tie_order_;
    std::vector<Load> loads_;
    std::int64_t total_ = 0;
    std::int64_t rounds_ = 0;
    std::int64_t samples_ = 0;

    Load base_ = 0;
    std::vector<std::uint32_t> counts_;
    std::vector<std::uint32_t> above_;
    std::vector<Bin> order_;
    std::vector<std::uint32_t> rank_of_;
    std::vector<std::set<Bin>> tie_sets_;
};

/// y_i = numerator / denominator with numerator = n * x_i - W, denominator = n.
struct NormalizedLoad {
    std::int64_t numerator = 0;
    std::int64_t denominator = 1;

    [[nodiscard]] bool underloaded() const { return numerator < 0; }
    [[nodiscard]] Rational value() const { return Rational(numerator, denominator); }
    [[nodiscard]] double to_double() const {
        return static_cast<double>(numerator) / static_cast<double>(denominator);
    }
};

NormalizedLoad normalized_load(const LoadState& state, Bin i);

/// ceil(-y_i) for an underloaded bin; throws std::invalid_argument otherwise.
std::int64_t deficit(const LoadState& state, Bin i);

/// max_i x_i - W / n.
Rational gap(const LoadState& state);

/// Bins by non-increasing load, ties by ascending bin index.
std::vector<Bin> sorted_ranks(const LoadState& state);

/// Inverse of sorted_ranks: rank of every bin under the stable tie rule.
std::vector<std::uint32_t> stable_rank_of(const LoadState& state);

}  // namespace ballsim
