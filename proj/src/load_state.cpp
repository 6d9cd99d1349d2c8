#include "ballsim/load_state.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ballsim {

LoadState::LoadState(std::size_t n, bool track_tie_order)
    : n_(n), track_tie_order_(track_tie_order), loads_(n, 0) {
    if (n == 0) throw std::invalid_argument("LoadState: n must be positive");
    if (n > UINT32_MAX) throw std::invalid_argument("LoadState: n too large");
    counts_.assign(1, static_cast<std::uint32_t>(n));
    above_.assign(1, 0);
    order_.resize(n);
    rank_of_.resize(n);
    std::iota(order_.begin(), order_.end(), Bin{0});
    std::iota(rank_of_.begin(), rank_of_.end(), 0U);
    if (track_tie_order_) {
        tie_sets_.resize(1);
        for (Bin i = 0; i < n; ++i) tie_sets_[0].insert(tie_sets_[0].end(), i);
    }
}

LoadState LoadState::from_loads(std::span<const Load> loads, bool track_tie_order) {
    LoadState state(loads.size(), track_tie_order);
    for (Bin i = 0; i < loads.size(); ++i) {
        if (loads[i] < 0) throw std::invalid_argument("LoadState: negative load");
        if (loads[i] > 0) state.add_balls(i, loads[i]);
    }
    return state;
}

std::size_t LoadState::count_at(Load level) const {
    if (level < base_ || level > max_load()) return 0;
    return counts_[level_slot(level)];
}

std::size_t LoadState::count_above(Load level) const {
    if (level < base_) return n_;
    if (level > max_load()) return 0;
    return above_[level_slot(level)];
}

const std::set<Bin>& LoadState::bins_at(Load level) const {
    static const std::set<Bin> kEmpty;
    if (!track_tie_order_) throw std::logic_error("LoadState: tie order not tracked");
    if (level < base_ || level > max_load()) return kEmpty;
    return tie_sets_[level_slot(level)];
}

void LoadState::move_up_one(Bin i) {
    const Load level = loads_[i];
    if (level == max_load()) {
        counts_.push_back(0);
        above_.push_back(0);
        if (track_tie_order_) tie_sets_.emplace_back();
    }
    const std::size_t slot = level_slot(level);
    // The first position of this level's block becomes the tail of the block above.
    const std::size_t boundary = above_[slot];
    const Bin other = order_[boundary];
    const std::size_t pos = rank_of_[i];
    order_[boundary] = i;
    order_[pos] = other;
    rank_of_[other] = static_cast<std::uint32_t>(pos);
    rank_of_[i] = static_cast<std::uint32_t>(boundary);

    --counts_[slot];
    ++counts_[slot + 1];
    ++above_[slot];
    ++loads_[i];
}

void LoadState::add_balls(Bin i, Load count) {
    if (i >= n_) throw std::out_of_range("LoadState: bin index " + std::to_string(i));
    if (count < 1) throw std::invalid_argument("LoadState: must add at least one ball");
    const Load from = loads_[i];
    for (Load k = 0; k < count; ++k) move_up_one(i);
    total_ += count;
    if (track_tie_order_) {
        tie_sets_[level_slot(from)].erase(i);
        tie_sets_[level_slot(loads_[i])].insert(i);
    }
    while (counts_.front() == 0) {
        counts_.erase(counts_.begin());
        above_.erase(above_.begin());
        if (track_tie_order_) tie_sets_.erase(tie_sets_.begin());
        ++base_;
    }
}

bool LoadState::consistent() const {
    if (std::accumulate(loads_.begin(), loads_.end(), std::int64_t{0}) != total_) return false;
    const auto [lo, hi] = std::minmax_element(loads_.begin(), loads_.end());
    if (*lo != base_ || *hi != max_load()) return false;
    for (Load level = base_; level <= max_load(); ++level) {
        const auto eq = std::count(loads_.begin(), loads_.end(), level);
        const auto gt = std::count_if(loads_.begin(), loads_.end(), [&](Load x) { return x > level; });
        if (static_cast<std::size_t>(eq) != count_at(level)) return false;
        if (static_cast<std::size_t>(gt) != count_above(level)) return false;
        if (track_tie_order_ && tie_sets_[level_slot(level)].size() != static_cast<std::size_t>(eq)) return false;
    }
    for (std::size_t r = 0; r < n_; ++r) {
        if (rank_of_[order_[r]] != r) return false;
        if (r > 0 && loads_[order_[r - 1]] < loads_[order_[r]]) return false;
    }
    return rounds_ >= 0 && samples_ >= 0;
}

NormalizedLoad normalized_load(const LoadState& state, Bin i) {
    if (i >= state.n()) throw std::out_of_range("normalized_load: bin index " + std::to_string(i));
    const auto n = static_cast<std::int64_t>(state.n());
    return {n * state.load(i) - state.total(), n};
}

std::int64_t deficit(const LoadState& state, Bin i) {
    const NormalizedLoad y = normalized_load(state, i);
    if (!y.underloaded()) throw std::invalid_argument("deficit: bin " + std::to_string(i) + " is not underloaded");
    return (-y.numerator + y.denominator - 1) / y.denominator;
}

Rational gap(const LoadState& state) {
    const auto n = static_cast<std::int64_t>(state.n());
    return Rational(n * state.max_load() - state.total(), n);
}

std::vector<std::uint32_t> stable_rank_of(const LoadState& state) {
    const std::size_t levels = static_cast<std::size_t>(state.max_load() - state.min_load()) + 1;
    std::vector<std::uint32_t> next(levels);
    for (std::size_t s = 0; s < levels; ++s) {
        next[s] = static_cast<std::uint32_t>(state.count_above(state.min_load() + static_cast<Load>(s)));
    }
    std::vector<std::uint32_t> rank(state.n());
    for (Bin i = 0; i < state.n(); ++i) {
        rank[i] = next[static_cast<std::size_t>(state.load(i) - state.min_load())]++;
    }
    return rank;
}

std::vector<Bin> sorted_ranks(const LoadState& state) {
    const auto rank = stable_rank_of(state);
    std::vector<Bin> order(state.n());
    for (Bin i = 0; i < state.n(); ++i) order[rank[i]] = i;
    return order;
}

}  // namespace ballsim
