#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "ballsim/processes.hpp"
#include "ballsim/rational.hpp"

namespace ballsim {

/// State summary recorded at a chosen round of one repetition.
struct Checkpoint {
    std::int64_t round = 0;
    Rational gap;
    std::int64_t balls = 0;
    std::int64_t samples = 0;
    Rational delta;
    double log_phi = 0;
};

struct RepetitionResult {
    std::uint64_t stream = 0;
    Rational final_gap;
    std::int64_t final_balls = 0;
    std::int64_t final_samples = 0;
    std::vector<Checkpoint> checkpoints;
};

struct GapSummary {
    double mean = 0;
    double median = 0;
    std::int64_t mode = 0;
    std::int64_t min = 0;
    std::int64_t max = 0;
};

/// Integer histogram key of a gap: ceil(gap), i.e. max load minus floor(W/n).
std::int64_t gap_bucket(const Rational& gap);

struct ExperimentResult {
    ProcessConfig config;
    std::size_t n = 0;
    std::int64_t rounds = 0;
    int reps = 0;
    std::vector<RepetitionResult> repetitions;  ///< indexed by repetition
    std::map<std::int64_t, std::int64_t> histogram;
    GapSummary summary;
    double wall_seconds = 0;
};

struct ExperimentOptions {
    std::vector<std::int64_t> checkpoints;  ///< rounds (ascending, <= m) to record in every repetition
    double alpha = 0.1;                     ///< potential parameter for checkpoint log_phi
    unsigned threads = 0;                   ///< 0: worker_count()
};

/// Worker count: BALLSIM_THREADS if set, else the hardware concurrency.
unsigned worker_count();

/// Runs fn(0..count-1) on a pool; each index is handled exactly once.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Simulates one repetition (RNG stream = rep) and records the requested checkpoints.
RepetitionResult run_repetition(const ProcessConfig& config, std::size_t n, std::int64_t rounds, std::uint64_t rep,
                                const ExperimentOptions& options = {});

GapSummary summarize_gaps(const std::vector<Rational>& gaps);

/// Gap(m) over `reps` independent repetitions.
ExperimentResult gap_distribution_experiment(const ProcessConfig& config, std::size_t n, std::int64_t rounds,
                                             int reps, const ExperimentOptions& options = {});

struct ExceedanceResult {
    double threshold = 0;
    int exceed = 0;
    int reps = 0;
    double fraction = 0;
    ExperimentResult detail;
};

/// Fraction of repetitions whose Gap(m) >= threshold.
ExceedanceResult lower_bound_experiment(const ProcessConfig& config, std::size_t n, std::int64_t rounds, int reps,
                                        double threshold);

struct CheckpointMean {
    std::int64_t round = 0;
    double mean_delta_over_n = 0;
    double mean_log_phi_over_n = 0;
    double max_log_phi_over_n = 0;
    double median_gap = 0;
};

/// Sample means of Delta/n and log Phi/n at each checkpoint over `reps` repetitions.
std::vector<CheckpointMean> delta_boundedness_experiment(const ProcessConfig& config, std::size_t n,
                                                         const std::vector<std::int64_t>& checkpoints, int reps,
                                                         double alpha = 0.1);

/// first, 2*first, 4*first, ... up to and including last.
std::vector<std::int64_t> geometric_checkpoints(std::int64_t first, std::int64_t last);

double median(std::vector<double> values);

}  // namespace ballsim
