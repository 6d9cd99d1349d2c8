#include "ballsim/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ballsim {

Rational compute_delta(const LoadState& state) {
    const auto n = static_cast<std::int64_t>(state.n());
    std::int64_t sum = 0;
    for (Load level = state.min_load(); level <= state.max_load(); ++level) {
        const auto count = static_cast<std::int64_t>(state.count_at(level));
        sum += count * std::llabs(n * level - state.total());
    }
    return Rational(sum, n);
}

Rational overload_mass_doubled(const LoadState& state) {
    const auto n = static_cast<std::int64_t>(state.n());
    std::int64_t sum = 0;
    for (Bin i = 0; i < state.n(); ++i) {
        const std::int64_t y = n * state.load(i) - state.total();
        if (y > 0) sum += y;
    }
    return Rational(2 * sum, n);
}

double compute_log_phi(const LoadState& state, double alpha, Load min_y) {
    const auto n = static_cast<std::int64_t>(state.n());
    const double nd = static_cast<double>(n);
    double peak = kNegInfinity;
    // Levels whose normalized load reaches min_y: n * L - W >= min_y * n.
    Load level = state.max_load();
    for (; level >= state.min_load() && n * level - state.total() >= min_y * n; --level) {
        if (state.count_at(level) == 0) continue;
        const double term = std::log(static_cast<double>(state.count_at(level))) +
                            alpha * static_cast<double>(n * level - state.total()) / nd;
        peak = std::max(peak, term);
    }
    if (peak == kNegInfinity) return kNegInfinity;
    double acc = 0;
    for (Load l = state.max_load(); l > level; --l) {
        if (state.count_at(l) == 0) continue;
        const double term = std::log(static_cast<double>(state.count_at(l))) +
                            alpha * static_cast<double>(n * l - state.total()) / nd;
        acc += std::exp(term - peak);
    }
    return peak + std::log(acc);
}

std::size_t underloaded_count(const LoadState& state) {
    return state.n() - state.count_above(state.ceil_average() - 1);
}

bool good_event(const LoadState& state) {
    const auto n = static_cast<std::int64_t>(state.n());
    if (20 * static_cast<std::int64_t>(underloaded_count(state)) >= n) return true;
    const Rational delta = compute_delta(state);
    // delta >= n / 10  <=>  10 * num >= n * den
    return static_cast<__int128>(10) * delta.num() >= static_cast<__int128>(n) * delta.den();
}

PotentialSnapshot take_snapshot(const LoadState& state, double alpha) {
    PotentialSnapshot s;
    s.round = state.rounds();
    s.gap = gap(state);
    s.delta = compute_delta(state);
    s.log_phi = compute_log_phi(state, alpha);
    s.alpha = alpha;
    s.underloaded_count = underloaded_count(state);
    const auto n = static_cast<std::int64_t>(state.n());
    s.good_event = 20 * static_cast<std::int64_t>(s.underloaded_count) >= n ||
                   static_cast<__int128>(10) * s.delta.num() >= static_cast<__int128>(n) * s.delta.den();
    return s;
}

std::int64_t good_event_density(std::span<const std::uint8_t> flags, std::int64_t t0, std::int64_t n) {
    if (t0 < 0 || n < 0 || t0 + n >= static_cast<std::int64_t>(flags.size())) {
        throw std::out_of_range("good_event_density: window exceeds trace");
    }
    std::int64_t count = 0;
    for (std::int64_t r = t0; r <= t0 + n; ++r) count += flags[static_cast<std::size_t>(r)];
    return count;
}

DensityScan scan_good_event_density(std::span<const std::uint8_t> flags, std::int64_t n) {
    DensityScan scan;
    const auto size = static_cast<std::int64_t>(flags.size());
    if (size <= n + 1) return scan;
    std::vector<std::int64_t> prefix(flags.size() + 1, 0);
    for (std::size_t r = 0; r < flags.size(); ++r) prefix[r + 1] = prefix[r] + flags[r];
    scan.min_count = n + 1;
    for (std::int64_t t0 = 1; t0 + n < size; ++t0) {
        const std::int64_t count = prefix[static_cast<std::size_t>(t0 + n + 1)] - prefix[static_cast<std::size_t>(t0)];
        ++scan.windows;
        if (count < scan.min_count) {
            scan.min_count = count;
            scan.min_t0 = t0;
        }
        // count >= n/40  <=>  40 * count >= n
        if (40 * count < n) ++scan.below_bound;
    }
    return scan;
}

}  // namespace ballsim
