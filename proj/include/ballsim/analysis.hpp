#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ballsim/load_state.hpp"
#include "ballsim/probability.hpp"
#include "ballsim/processes.hpp"
#include "ballsim/rational.hpp"

namespace ballsim {

/**
 * Expected balls placed in one round of a filling rule (1 ball for an
 * overloaded sample, deficit + 1 for an underloaded one) when the sampled
 * bin follows `p` over stable ranks: 1 + sum_{i in B-} ceil(-y_i) p_rank(i).
 */
Rational expected_balls_one_step(const LoadState& state, const RankMass& p);
double expected_balls_one_step(const LoadState& state, const ProbabilityVector& p);
/// Uniform sampling, exact.
Rational expected_balls_one_step(const LoadState& state);

/**
 * ln(E[Phi^{t+1} | state] / Phi^t) for one round of Packing or TightPacking
 * with a uniform sample, by exact enumeration of the n equally likely
 * samples. Phi sums exp(alpha * y_i) over bins with y_i >= min_y and every
 * branch is evaluated in log domain, so configurations with huge normalized
 * loads do not overflow. Packing groups samples by load level (O(levels^2));
 * TightPacking evaluates each sample on a copy of the state.
 *
 * Throws std::invalid_argument if Phi^t is an empty sum.
 */
double expected_phi_log_ratio(const LoadState& state, double alpha, Load min_y = 2,
                              ProcessKind process = ProcessKind::Packing);

/// Normalized loads y = (sqrt n, 0 x (n - sqrt n - 1), -1 x sqrt n) as integer loads; n must be a perfect square.
LoadState sqrt_spike_configuration(std::size_t n);

/// (t, W^t, S^t) observed at some round.
struct CounterSample {
    std::int64_t round = 0;
    std::int64_t balls = 0;
    std::int64_t samples = 0;
};

/// (t, mu^t = W^t / t) for every sample with t >= 1.
std::vector<std::pair<std::int64_t, Rational>> throughput_series(std::span<const CounterSample> samples);
/// (t, eta^t = W^t / S^t) for every sample with S^t >= 1.
std::vector<std::pair<std::int64_t, Rational>> sample_efficiency_series(std::span<const CounterSample> samples);

}  // namespace ballsim
