#include "ballsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ballsim/potentials.hpp"

namespace ballsim {

namespace {

double log_add(double a, double b) {
    if (a == kNegInfinity) return b;
    if (b == kNegInfinity) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace

Rational expected_balls_one_step(const LoadState& state, const RankMass& p) {
    if (p.size() != state.n()) throw std::invalid_argument("expected_balls_one_step: vector length differs from n");
    const auto rank = stable_rank_of(state);
    std::int64_t weighted = 0;
    for (Bin i = 0; i < state.n(); ++i) {
        if (state.underloaded(i)) weighted += deficit(state, i) * static_cast<std::int64_t>(p.units[rank[i]]);
    }
    return Rational(1) + Rational(weighted, p.denominator);
}

double expected_balls_one_step(const LoadState& state, const ProbabilityVector& p) {
    if (p.size() != state.n()) throw std::invalid_argument("expected_balls_one_step: vector length differs from n");
    const auto rank = stable_rank_of(state);
    long double sum = 1;
    for (Bin i = 0; i < state.n(); ++i) {
        if (state.underloaded(i)) sum += static_cast<long double>(deficit(state, i)) * p[rank[i]];
    }
    return static_cast<double>(sum);
}

Rational expected_balls_one_step(const LoadState& state) {
    return expected_balls_one_step(state, RankMass::uniform(state.n()));
}

double expected_phi_log_ratio(const LoadState& state, double alpha, Load min_y, ProcessKind process) {
    if (!(alpha > 0)) throw std::invalid_argument("expected_phi_log_ratio: alpha must be positive");
    const double log_phi = compute_log_phi(state, alpha, min_y);
    if (log_phi == kNegInfinity) throw std::invalid_argument("expected_phi_log_ratio: potential is an empty sum");
    const auto n = static_cast<std::int64_t>(state.n());
    const double nd = static_cast<double>(n);
    const double log_n = std::log(nd);

    if (process == ProcessKind::TightPacking) {
        double log_expect = kNegInfinity;
        RoundOutcome out;
        for (Bin i = 0; i < state.n(); ++i) {
            LoadState next = state;
            tight_packing_outcome(next, i, out);
            apply_outcome(next, out);
            log_expect = log_add(log_expect, compute_log_phi(next, alpha, min_y) - log_n);
        }
        return log_expect - log_phi;
    }
    if (process != ProcessKind::Packing) {
        throw std::invalid_argument("expected_phi_log_ratio: only packing and tight_packing are supported");
    }

    struct Level {
        Load load;
        std::int64_t count;
    };
    std::vector<Level> levels;
    for (Load l = state.min_load(); l <= state.max_load(); ++l) {
        if (state.count_at(l) > 0) levels.push_back({l, static_cast<std::int64_t>(state.count_at(l))});
    }
    const Load ceil_avg = state.ceil_average();
    double log_expect = kNegInfinity;
    for (const Level& sampled : levels) {
        const bool under = n * sampled.load < state.total();
        const Load added = under ? ceil_avg + 1 - sampled.load : 1;
        const std::int64_t total = state.total() + added;
        const Load moved_to = sampled.load + added;
        double log_next = kNegInfinity;
        auto accumulate = [&](Load load, std::int64_t count) {
            if (count <= 0 || n * load - total < min_y * n) return;
            log_next = log_add(log_next, std::log(static_cast<double>(count)) +
                                             alpha * static_cast<double>(n * load - total) / nd);
        };
        bool moved_counted = false;
        for (const Level& other : levels) {
            std::int64_t count = other.count;
            if (other.load == sampled.load) --count;
            if (other.load == moved_to) {
                ++count;
                moved_counted = true;
            }
            accumulate(other.load, count);
        }
        if (!moved_counted) accumulate(moved_to, 1);
        if (log_next == kNegInfinity) continue;
        log_expect = log_add(log_expect, std::log(static_cast<double>(sampled.count)) - log_n + log_next);
    }
    return log_expect - log_phi;
}

LoadState sqrt_spike_configuration(std::size_t n) {
    const auto root = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    if (root * root != n || n < 4) throw std::invalid_argument("sqrt_spike_configuration: n must be a perfect square >= 4");
    // Baseline 1 keeps every load non-negative; the average stays exactly 1.
    std::vector<Load> loads(n, 1);
    loads[0] = 1 + static_cast<Load>(root);
    for (std::size_t i = n - root; i < n; ++i) loads[i] = 0;
    return LoadState::from_loads(loads);
}

std::vector<std::pair<std::int64_t, Rational>> throughput_series(std::span<const CounterSample> samples) {
    std::vector<std::pair<std::int64_t, Rational>> series;
    series.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.round >= 1) series.emplace_back(s.round, Rational(s.balls, s.round));
    }
    return series;
}

std::vector<std::pair<std::int64_t, Rational>> sample_efficiency_series(std::span<const CounterSample> samples) {
    std::vector<std::pair<std::int64_t, Rational>> series;
    series.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.samples >= 1) series.emplace_back(s.round, Rational(s.balls, s.samples));
    }
    return series;
}

}  // namespace ballsim
