#include "ballsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include "ballsim/potentials.hpp"

namespace ballsim {

std::int64_t gap_bucket(const Rational& gap) { return gap.ceil(); }

unsigned worker_count() {
    if (const char* env = std::getenv("BALLSIM_THREADS"); env != nullptr && *env != '\0') {
        const long value = std::strtol(env, nullptr, 10);
        if (value >= 1) return static_cast<unsigned>(value);
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = worker_count();
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    const std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

RepetitionResult run_repetition(const ProcessConfig& config, std::size_t n, std::int64_t rounds, std::uint64_t rep,
                                const ExperimentOptions& options) {
    RepetitionResult result;
    result.stream = rep;
    std::size_t next = 0;
    const auto& wanted = options.checkpoints;
    RunHooks hooks;
    if (!wanted.empty()) {
        hooks.after_round = [&](const LoadState& state, const RoundOutcome&) {
            while (next < wanted.size() && wanted[next] == state.rounds()) {
                result.checkpoints.push_back({state.rounds(), gap(state), state.total(), state.samples(),
                                              compute_delta(state), compute_log_phi(state, options.alpha)});
                ++next;
            }
        };
    }
    RunOptions run_options;
    run_options.stream = rep;
    const RunResult run_result = run(config, n, rounds, hooks, run_options);
    result.final_gap = gap(run_result.state);
    result.final_balls = run_result.state.total();
    result.final_samples = run_result.state.samples();
    return result;
}

double median(std::vector<double> values) {
    if (values.empty()) return 0;
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

GapSummary summarize_gaps(const std::vector<Rational>& gaps) {
    GapSummary s;
    if (gaps.empty()) return s;
    std::map<std::int64_t, std::int64_t> histogram;
    std::vector<double> values;
    values.reserve(gaps.size());
    for (const auto& g : gaps) {
        ++histogram[gap_bucket(g)];
        values.push_back(g.to_double());
    }
    double sum = 0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    s.median = median(values);
    s.min = histogram.begin()->first;
    s.max = histogram.rbegin()->first;
    std::int64_t best = -1;
    for (const auto& [bucket, count] : histogram) {
        if (count > best) {
            best = count;
            s.mode = bucket;
        }
    }
    return s;
}

ExperimentResult gap_distribution_experiment(const ProcessConfig& config, std::size_t n, std::int64_t rounds,
                                             int reps, const ExperimentOptions& options) {
    if (reps < 1) throw ConfigError("reps must be >= 1");
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    if (n < 1) throw ConfigError("bins must be >= 1");
    config.validate();
    for (std::size_t k = 0; k < options.checkpoints.size(); ++k) {
        if (options.checkpoints[k] < 1 || options.checkpoints[k] > rounds ||
            (k > 0 && options.checkpoints[k] <= options.checkpoints[k - 1])) {
            throw ConfigError("checkpoints must be ascending rounds within [1, m]");
        }
    }
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult result;
    result.config = config;
    result.n = n;
    result.rounds = rounds;
    result.reps = reps;
    result.repetitions.resize(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), options.threads, [&](std::size_t rep) {
        result.repetitions[rep] = run_repetition(config, n, rounds, rep, options);
    });
    std::vector<Rational> gaps;
    gaps.reserve(result.repetitions.size());
    for (const auto& r : result.repetitions) {
        gaps.push_back(r.final_gap);
        ++result.histogram[gap_bucket(r.final_gap)];
    }
    result.summary = summarize_gaps(gaps);
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

ExceedanceResult lower_bound_experiment(const ProcessConfig& config, std::size_t n, std::int64_t rounds, int reps,
                                        double threshold) {
    ExceedanceResult result;
    result.threshold = threshold;
    result.reps = reps;
    result.detail = gap_distribution_experiment(config, n, rounds, reps);
    for (const auto& r : result.detail.repetitions) {
        if (r.final_gap.to_double() >= threshold) ++result.exceed;
    }
    result.fraction = static_cast<double>(result.exceed) / static_cast<double>(reps);
    return result;
}

std::vector<CheckpointMean> delta_boundedness_experiment(const ProcessConfig& config, std::size_t n,
                                                         const std::vector<std::int64_t>& checkpoints, int reps,
                                                         double alpha) {
    if (checkpoints.empty()) throw ConfigError("at least one checkpoint required");
    ExperimentOptions options;
    options.checkpoints = checkpoints;
    options.alpha = alpha;
    const auto experiment = gap_distribution_experiment(config, n, checkpoints.back(), reps, options);
    const double nd = static_cast<double>(n);
    std::vector<CheckpointMean> means;
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
        CheckpointMean m;
        m.round = checkpoints[k];
        m.max_log_phi_over_n = kNegInfinity;
        std::vector<double> gaps;
        for (const auto& rep : experiment.repetitions) {
            const Checkpoint& c = rep.checkpoints.at(k);
            m.mean_delta_over_n += c.delta.to_double() / nd;
            const double lp = c.log_phi == kNegInfinity ? 0.0 : c.log_phi / nd;
            m.mean_log_phi_over_n += lp;
            m.max_log_phi_over_n = std::max(m.max_log_phi_over_n, lp);
            gaps.push_back(c.gap.to_double());
        }
        m.mean_delta_over_n /= reps;
        m.mean_log_phi_over_n /= reps;
        m.median_gap = median(gaps);
        means.push_back(m);
    }
    return means;
}

std::vector<std::int64_t> geometric_checkpoints(std::int64_t first, std::int64_t last) {
    if (first < 1 || last < first) throw ConfigError("invalid checkpoint range");
    std::vector<std::int64_t> points;
    for (std::int64_t r = first; r < last; r *= 2) points.push_back(r);
    points.push_back(last);
    return points;
}

}  // namespace ballsim
