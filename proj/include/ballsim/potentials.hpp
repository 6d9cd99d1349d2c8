#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ballsim/load_state.hpp"
#include "ballsim/rational.hpp"

namespace ballsim {

inline constexpr double kNegInfinity = -std::numeric_limits<double>::infinity();

/// Potentials of one load configuration.
struct PotentialSnapshot {
    std::int64_t round = 0;
    Rational gap;
    Rational delta;               ///< sum_i |y_i|
    double log_phi = kNegInfinity;///< ln sum_{y_i >= 2} exp(alpha * y_i)
    double alpha = 0;
    std::size_t underloaded_count = 0;
    bool good_event = false;
};

/// sum_i |y_i|, exact.
Rational compute_delta(const LoadState& state);

/// Twice the excess of overloaded bins, 2 * sum_{y_i > 0} y_i; equals compute_delta.
Rational overload_mass_doubled(const LoadState& state);

/**
 * ln of sum over bins with y_i >= min_y of exp(alpha * y_i), evaluated by
 * log-sum-exp over load levels. Returns kNegInfinity for an empty sum.
 * The default support y >= 2 is the potential tracked by the simulator;
 * min_y = 0 gives the variant over all overloaded bins.
 */
double compute_log_phi(const LoadState& state, double alpha, Load min_y = 2);

/// |B_-|: bins with y_i < 0.
std::size_t underloaded_count(const LoadState& state);

/// |B_-| >= n/20 or Delta >= n/10, decided in integers.
bool good_event(const LoadState& state);

PotentialSnapshot take_snapshot(const LoadState& state, double alpha);

/**
 * Per-round record of the good event, indexed by round t (entry t describes
 * the state after t rounds; entry 0 is the empty start).
 */
class GoodEventSeries {
public:
    void push(const LoadState& state) { flags_.push_back(good_event(state) ? 1 : 0); }
    void push(bool flag) { flags_.push_back(flag ? 1 : 0); }

    [[nodiscard]] std::size_t size() const { return flags_.size(); }
    [[nodiscard]] std::span<const std::uint8_t> flags() const { return flags_; }

private:
    std::vector<std::uint8_t> flags_;
};

/// Rounds r in [t0, t0 + n] with the good event; throws std::out_of_range if the window exceeds the series.
std::int64_t good_event_density(std::span<const std::uint8_t> flags, std::int64_t t0, std::int64_t n);

struct DensityScan {
    std::int64_t windows = 0;
    std::int64_t min_count = 0;
    std::int64_t min_t0 = 0;
    std::int64_t below_bound = 0;  ///< windows with count < n/40
};

/// Every window [t0, t0 + n] with t0 >= 1 that fits in the series.
DensityScan scan_good_event_density(std::span<const std::uint8_t> flags, std::int64_t n);

}  // namespace ballsim
