#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ballsim/load_state.hpp"
#include "ballsim/probability.hpp"
#include "ballsim/rng.hpp"

namespace ballsim {

enum class ProcessKind {
    OneChoice,
    DChoice,
    OnePlusBeta,
    Quantile,
    Packing,
    TightPacking,
    Memory,
    BiasedPacking,
};

/// Adversarial (a,b)-biased vectors shipped with the library.
enum class BiasKind {
    MaxBias,  ///< b/n on the heaviest ranks, 1/(an) on the rest.
    MinBias,  ///< mirror image: b/n on the lightest ranks.
};

std::string_view to_string(ProcessKind kind);
std::optional<ProcessKind> parse_process_kind(std::string_view name);
std::string_view to_string(BiasKind kind);
std::optional<BiasKind> parse_bias_kind(std::string_view name);

/// Thrown for invalid process parameters; the CLI maps it to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ProcessConfig {
    ProcessKind kind = ProcessKind::Packing;
    int d = 2;
    double beta = 0.5;
    double quantile = 0.5;
    double bias_a = 2.0;
    double bias_b = 2.0;
    BiasKind bias = BiasKind::MaxBias;
    std::uint64_t seed = 0;

    /// Throws ConfigError when a parameter relevant to `kind` is out of range.
    void validate() const;
};

/**
 * Everything one round did. `deltas` is sparse (bin, balls added); every
 * value is >= 1 and they sum to balls_placed.
 */
struct RoundOutcome {
    std::vector<Bin> sampled;
    Bin chosen = 0;
    std::vector<std::pair<Bin, Load>> deltas;
    Load balls_placed = 0;
    int samples_used = 0;
    std::optional<Bin> cache_before;
    std::optional<Bin> cache_after;

    void clear() {
        sampled.clear();
        deltas.clear();
        chosen = 0;
        balls_placed = 0;
        samples_used = 0;
        cache_before.reset();
        cache_after.reset();
    }
    void add(Bin bin, Load balls) {
        deltas.emplace_back(bin, balls);
        balls_placed += balls;
    }

    bool operator==(const RoundOutcome&) const = default;
};

/// Adds the outcome's balls to the state and closes the round.
void apply_outcome(LoadState& state, const RoundOutcome& outcome);

// Allocation rules with the random draws supplied by the caller. They do not
// mutate the state; tests use them to replay hand-picked samples.
void one_choice_outcome(const LoadState& state, Bin sample, RoundOutcome& out);
void d_choice_outcome(const LoadState& state, std::span<const Bin> samples, RoundOutcome& out);
/// True when the first Quantile sample has load at least the delta-quantile load.
bool quantile_takes_second(const LoadState& state, double delta, Bin first);
void quantile_outcome(const LoadState& state, double delta, Bin first, std::optional<Bin> second,
                      RoundOutcome& out);
void packing_outcome(const LoadState& state, Bin sample, RoundOutcome& out);
void tight_packing_outcome(const LoadState& state, Bin sample, RoundOutcome& out);
void memory_outcome(const LoadState& state, std::optional<Bin> cache, Bin sample, RoundOutcome& out);

/// Throws std::invalid_argument unless p sums to 1 and every entry is in [1/(an), b/n].
void validate_bias_box(const ProbabilityVector& p, double a, double b);

/// MAX_BIAS / MIN_BIAS vector for n bins.
ProbabilityVector make_bias_vector(BiasKind kind, std::size_t n, double a, double b);

/**
 * Rank sampler for the biased Packing process.
 *
 * The vector is produced per round by `fn` from the current state; when fn is
 * empty the fixed vector given at construction is used and validated once.
 * A sampled rank is mapped to a bin through the state's bucket order.
 */
class BiasedSampler {
public:
    using VectorFn = std::function<ProbabilityVector(const LoadState&)>;

    BiasedSampler(ProbabilityVector fixed, double a, double b);
    BiasedSampler(VectorFn fn, double a, double b);

    /// Vector in force for this state (validated).
    [[nodiscard]] ProbabilityVector vector_for(const LoadState& state) const;
    std::size_t sample_rank(const LoadState& state, Rng& rng) const;

private:
    void rebuild(const ProbabilityVector& p) const;

    VectorFn fn_;
    double a_;
    double b_;
    mutable ProbabilityVector current_;
    mutable std::vector<double> cumulative_;
};

/**
 * A configured process: owns its per-run state (the Memory cache, the bias
 * sampler) and produces one RoundOutcome per round.
 */
class Process {
public:
    Process(const ProcessConfig& config, std::size_t n);

    [[nodiscard]] const ProcessConfig& config() const { return config_; }
    [[nodiscard]] std::optional<Bin> cache() const { return cache_; }
    void set_cache(std::optional<Bin> cache) { cache_ = cache; }
    /// Replaces the fixed bias vector with a state-dependent one.
    void set_bias_function(BiasedSampler::VectorFn fn);

    /// Draws the round's samples and decides the allocation without touching the state.
    void plan(const LoadState& state, Rng& rng, RoundOutcome& out) const;
    /// Applies a planned outcome and updates process memory.
    void commit(LoadState& state, const RoundOutcome& outcome);

    /// Exact sampling distribution of the committed bin over stable ranks,
    /// when the process samples a single bin per round from a known law.
    [[nodiscard]] std::optional<RankMass> exact_rank_mass(const LoadState& state) const;
    /// Sampling vector of the biased Packing process for this state.
    [[nodiscard]] std::optional<ProbabilityVector> bias_vector(const LoadState& state) const;
    /// True when every round samples uniformly (law independent of the state).
    [[nodiscard]] bool samples_uniformly() const;

private:
    ProcessConfig config_;
    std::size_t n_;
    std::optional<Bin> cache_;
    std::optional<BiasedSampler> sampler_;
};

// One-round steps: draw, decide and apply.
RoundOutcome step_one_choice(LoadState& state, Rng& rng);
RoundOutcome step_d_choice(LoadState& state, Rng& rng, int d);
RoundOutcome step_one_plus_beta(LoadState& state, Rng& rng, double beta);
RoundOutcome step_quantile(LoadState& state, Rng& rng, double delta = 0.5);
RoundOutcome step_packing(LoadState& state, Rng& rng);
RoundOutcome step_tight_packing(LoadState& state, Rng& rng);
RoundOutcome step_memory(LoadState& state, Rng& rng, std::optional<Bin>& cache);
RoundOutcome step_biased_packing(LoadState& state, Rng& rng, const BiasedSampler& sampler);

/// Per-round callbacks. before_round sees the state the outcome was planned on.
struct RunHooks {
    std::function<void(const LoadState& before, const RoundOutcome& outcome, const Process& process)> before_round;
    std::function<void(const LoadState& after, const RoundOutcome& outcome)> after_round;
};

struct RunOptions {
    std::uint64_t stream = 0;      ///< repetition index; (seed, stream) selects the RNG stream
    bool record_outcomes = false;  ///< keep every RoundOutcome in the result
    bool debug_checks = false;     ///< re-verify the level index every round
};

struct RunResult {
    LoadState state;
    std::vector<RoundOutcome> outcomes;
    std::optional<Bin> final_cache;
};

/// Runs `rounds` rounds of the configured process from the empty state.
RunResult run(const ProcessConfig& config, std::size_t n, std::int64_t rounds, const RunHooks& hooks = {},
              const RunOptions& options = {});

/// True for kinds whose rule needs ordered tie sets in the state.
bool needs_tie_order(ProcessKind kind);

}  // namespace ballsim
