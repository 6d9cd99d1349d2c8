#include "ballsim/processes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "ballsim/conditions.hpp"

namespace ballsim {

namespace {

constexpr std::array<std::pair<ProcessKind, std::string_view>, 8> kProcessNames{{
    {ProcessKind::OneChoice, "one_choice"},
    {ProcessKind::DChoice, "d_choice"},
    {ProcessKind::OnePlusBeta, "one_plus_beta"},
    {ProcessKind::Quantile, "quantile"},
    {ProcessKind::Packing, "packing"},
    {ProcessKind::TightPacking, "tight_packing"},
    {ProcessKind::Memory, "memory"},
    {ProcessKind::BiasedPacking, "biased_packing"},
}};

Bin uniform_bin(const LoadState& state, Rng& rng) { return static_cast<Bin>(rng.below(state.n())); }

void check_bin(const LoadState& state, Bin i) {
    if (i >= state.n()) throw std::out_of_range("bin index " + std::to_string(i) + " out of range");
}

}  // namespace

std::string_view to_string(ProcessKind kind) {
    for (const auto& [k, name] : kProcessNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

std::optional<ProcessKind> parse_process_kind(std::string_view name) {
    for (const auto& [k, known] : kProcessNames) {
        if (known == name) return k;
    }
    if (name == "two_choice") return ProcessKind::DChoice;
    return std::nullopt;
}

std::string_view to_string(BiasKind kind) { return kind == BiasKind::MaxBias ? "max_bias" : "min_bias"; }

std::optional<BiasKind> parse_bias_kind(std::string_view name) {
    if (name == "max_bias") return BiasKind::MaxBias;
    if (name == "min_bias") return BiasKind::MinBias;
    return std::nullopt;
}

void ProcessConfig::validate() const {
    switch (kind) {
        case ProcessKind::DChoice:
            if (d < 1) throw ConfigError("d must be >= 1");
            break;
        case ProcessKind::OnePlusBeta:
            if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must be in (0, 1]");
            break;
        case ProcessKind::Quantile:
            if (!(quantile > 0.0 && quantile < 1.0)) throw ConfigError("quantile must be in (0, 1)");
            break;
        case ProcessKind::BiasedPacking:
            if (!(bias_a >= 1.0) || !(bias_b >= 1.0)) throw ConfigError("bias bounds a, b must be >= 1");
            break;
        default:
            break;
    }
}

bool needs_tie_order(ProcessKind kind) { return kind == ProcessKind::TightPacking; }

void apply_outcome(LoadState& state, const RoundOutcome& outcome) {
    for (const auto& [bin, balls] : outcome.deltas) state.add_balls(bin, balls);
    state.finish_round(outcome.samples_used);
}

void one_choice_outcome(const LoadState& state, Bin sample, RoundOutcome& out) {
    check_bin(state, sample);
    out.clear();
    out.sampled.push_back(sample);
    out.chosen = sample;
    out.samples_used = 1;
    out.add(sample, 1);
}

void d_choice_outcome(const LoadState& state, std::span<const Bin> samples, RoundOutcome& out) {
    if (samples.empty()) throw std::invalid_argument("d_choice_outcome: no samples");
    out.clear();
    Bin best = samples.front();
    for (Bin s : samples) {
        check_bin(state, s);
        out.sampled.push_back(s);
        const Load xs = state.load(s);
        const Load xb = state.load(best);
        if (xs < xb || (xs == xb && s < best)) best = s;
    }
    out.chosen = best;
    out.samples_used = static_cast<int>(samples.size());
    out.add(best, 1);
}

bool quantile_takes_second(const LoadState& state, double delta, Bin first) {
    check_bin(state, first);
    const auto n = static_cast<double>(state.n());
    const auto q = static_cast<std::size_t>(std::max(1.0, std::ceil(delta * n - 1e-9)));
    // Load of the rank-q bin is <= x_first iff fewer than q bins are strictly heavier.
    return state.count_above(state.load(first)) < q;
}

void quantile_outcome(const LoadState& state, double delta, Bin first, std::optional<Bin> second,
                      RoundOutcome& out) {
    out.clear();
    out.sampled.push_back(first);
    if (quantile_takes_second(state, delta, first)) {
        if (!second) throw std::invalid_argument("quantile_outcome: second sample required");
        check_bin(state, *second);
        out.sampled.push_back(*second);
        out.chosen = *second;
        out.samples_used = 2;
    } else {
        out.chosen = first;
        out.samples_used = 1;
    }
    out.add(out.chosen, 1);
}

void packing_outcome(const LoadState& state, Bin sample, RoundOutcome& out) {
    check_bin(state, sample);
    out.clear();
    out.sampled.push_back(sample);
    out.chosen = sample;
    out.samples_used = 1;
    out.add(sample, state.underloaded(sample) ? deficit(state, sample) + 1 : 1);
}

void tight_packing_outcome(const LoadState& state, Bin sample, RoundOutcome& out) {
    check_bin(state, sample);
    out.clear();
    out.sampled.push_back(sample);
    out.chosen = sample;
    out.samples_used = 1;
    if (!state.underloaded(sample)) {
        out.add(sample, 1);
        return;
    }
    const Load ceil_avg = state.ceil_average();
    Load remaining = deficit(state, sample) + 1;
    bool first = true;
    // Heaviest underloaded bins in stable order: first one to ceil(W/n)+1, the rest
    // up to ceil(W/n)-1, the last one possibly partially.
    auto visit = [&](Bin bin) {
        const Load x = state.load(bin);
        const Load want = first ? ceil_avg + 1 - x : std::min(remaining, ceil_avg - 1 - x);
        first = false;
        if (want > 0) {
            out.add(bin, want);
            remaining -= want;
        }
        return remaining > 0;
    };
    const Load top = std::min(ceil_avg - 1, state.max_load());
    if (state.tracks_tie_order()) {
        for (Load level = top; level >= state.min_load() && remaining > 0; --level) {
            for (Bin bin : state.bins_at(level)) {
                if (!visit(bin)) break;
            }
        }
    } else {
        for (Bin bin : sorted_ranks(state)) {
            if (remaining == 0) break;
            if (state.load(bin) > top) continue;
            visit(bin);
        }
    }
    if (remaining != 0) throw std::logic_error("tight_packing_outcome: balls left after exhausting underloaded bins");
}

void memory_outcome(const LoadState& state, std::optional<Bin> cache, Bin sample, RoundOutcome& out) {
    check_bin(state, sample);
    out.clear();
    out.sampled.push_back(sample);
    out.samples_used = 1;
    out.cache_before = cache;
    if (!cache) {
        out.chosen = sample;
        out.cache_after = sample;
    } else {
        check_bin(state, *cache);
        const Load xs = state.load(sample);
        const Load xc = state.load(*cache);
        if (xs < xc) {
            out.chosen = sample;
            out.cache_after = sample;
        } else if (xs == xc) {
            out.chosen = sample;
            out.cache_after = cache;
        } else {
            out.chosen = *cache;
            out.cache_after = cache;
        }
    }
    out.add(out.chosen, 1);
}

void validate_bias_box(const ProbabilityVector& p, double a, double b) {
    const auto n = static_cast<double>(p.size());
    if (p.size() == 0) throw std::invalid_argument("bias vector is empty");
    const double lo = 1.0 / (a * n);
    const double hi = b / n;
    long double sum = 0;
    for (std::size_t r = 0; r < p.size(); ++r) {
        const double v = p[r];
        if (!(v >= lo * (1 - 1e-12)) || !(v <= hi * (1 + 1e-12))) {
            throw std::invalid_argument("bias vector entry " + std::to_string(r) + " = " + std::to_string(v) +
                                        " outside [1/(an), b/n]");
        }
        sum += v;
    }
    if (std::fabs(static_cast<double>(sum - 1.0L)) > 1e-12) {
        throw std::invalid_argument("bias vector does not sum to 1");
    }
}

ProbabilityVector make_bias_vector(BiasKind kind, std::size_t n, double a, double b) {
    if (!(a >= 1.0) || !(b >= 1.0)) throw ConfigError("bias bounds a, b must be >= 1");
    const auto nd = static_cast<double>(n);
    const double lo = 1.0 / (a * nd);
    const double hi = b / nd;
    ProbabilityVector p{std::vector<double>(n, lo)};
    if (hi - lo > 0) {
        // Largest number of ranks that can carry b/n with every other rank at 1/(an).
        auto heavy = static_cast<std::size_t>(std::floor((1.0 - lo * nd) / (hi - lo)));
        heavy = std::min(heavy, n);
        for (std::size_t r = 0; r < heavy; ++r) p.probs[r] = hi;
        if (heavy < n) {
            long double rest = 1.0L;
            for (std::size_t r = 0; r < n; ++r) {
                if (r != heavy) rest -= p.probs[r];
            }
            p.probs[heavy] = static_cast<double>(rest);
        }
    } else {
        p = ProbabilityVector::uniform(n);
    }
    if (kind == BiasKind::MinBias) std::reverse(p.probs.begin(), p.probs.end());
    return p;
}

BiasedSampler::BiasedSampler(ProbabilityVector fixed, double a, double b) : a_(a), b_(b) {
    validate_bias_box(fixed, a_, b_);
    rebuild(fixed);
}

BiasedSampler::BiasedSampler(VectorFn fn, double a, double b) : fn_(std::move(fn)), a_(a), b_(b) {}

void BiasedSampler::rebuild(const ProbabilityVector& p) const {
    current_ = p;
    cumulative_.resize(p.size());
    double acc = 0;
    for (std::size_t r = 0; r < p.size(); ++r) {
        acc += p[r];
        cumulative_[r] = acc;
    }
}

ProbabilityVector BiasedSampler::vector_for(const LoadState& state) const {
    if (fn_) {
        ProbabilityVector p = fn_(state);
        if (p.size() != state.n()) throw std::invalid_argument("bias vector length differs from n");
        validate_bias_box(p, a_, b_);
        return p;
    }
    return current_;
}

std::size_t BiasedSampler::sample_rank(const LoadState& state, Rng& rng) const {
    if (fn_) rebuild(vector_for(state));
    const double u = rng.uniform() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
}

Process::Process(const ProcessConfig& config, std::size_t n) : config_(config), n_(n) {
    config_.validate();
    if (config_.kind == ProcessKind::BiasedPacking) {
        sampler_.emplace(make_bias_vector(config_.bias, n, config_.bias_a, config_.bias_b), config_.bias_a,
                         config_.bias_b);
    }
}

void Process::set_bias_function(BiasedSampler::VectorFn fn) {
    if (config_.kind != ProcessKind::BiasedPacking) throw ConfigError("bias function requires biased_packing");
    sampler_.emplace(std::move(fn), config_.bias_a, config_.bias_b);
}

void Process::plan(const LoadState& state, Rng& rng, RoundOutcome& out) const {
    switch (config_.kind) {
        case ProcessKind::OneChoice:
            one_choice_outcome(state, uniform_bin(state, rng), out);
            break;
        case ProcessKind::DChoice: {
            std::array<Bin, 8> small{};
            std::vector<Bin> large;
            std::span<Bin> samples;
            if (config_.d <= static_cast<int>(small.size())) {
                samples = std::span<Bin>(small.data(), static_cast<std::size_t>(config_.d));
            } else {
                large.resize(static_cast<std::size_t>(config_.d));
                samples = large;
            }
            for (auto& s : samples) s = uniform_bin(state, rng);
            d_choice_outcome(state, samples, out);
            break;
        }
        case ProcessKind::OnePlusBeta:
            if (rng.bernoulli(config_.beta)) {
                const std::array<Bin, 2> samples{uniform_bin(state, rng), uniform_bin(state, rng)};
                d_choice_outcome(state, samples, out);
            } else {
                one_choice_outcome(state, uniform_bin(state, rng), out);
            }
            break;
        case ProcessKind::Quantile: {
            const Bin first = uniform_bin(state, rng);
            std::optional<Bin> second;
            if (quantile_takes_second(state, config_.quantile, first)) second = uniform_bin(state, rng);
            quantile_outcome(state, config_.quantile, first, second, out);
            break;
        }
        case ProcessKind::Packing:
            packing_outcome(state, uniform_bin(state, rng), out);
            break;
        case ProcessKind::TightPacking:
            tight_packing_outcome(state, uniform_bin(state, rng), out);
            break;
        case ProcessKind::Memory:
            memory_outcome(state, cache_, uniform_bin(state, rng), out);
            break;
        case ProcessKind::BiasedPacking: {
            const std::size_t rank = sampler_->sample_rank(state, rng);
            packing_outcome(state, state.bin_at_rank(rank), out);
            break;
        }
    }
}

void Process::commit(LoadState& state, const RoundOutcome& outcome) {
    apply_outcome(state, outcome);
    if (config_.kind == ProcessKind::Memory) cache_ = outcome.cache_after;
}

bool Process::samples_uniformly() const {
    return config_.kind == ProcessKind::Packing || config_.kind == ProcessKind::TightPacking ||
           config_.kind == ProcessKind::OneChoice;
}

std::optional<RankMass> Process::exact_rank_mass(const LoadState& state) const {
    if (samples_uniformly()) return RankMass::uniform(state.n());
    if (config_.kind == ProcessKind::Memory) {
        if (!cache_) return RankMass::uniform(state.n());
        return effective_vector_memory(state, *cache_);
    }
    return std::nullopt;
}

std::optional<ProbabilityVector> Process::bias_vector(const LoadState& state) const {
    if (!sampler_) return std::nullopt;
    return sampler_->vector_for(state);
}

RoundOutcome step_one_choice(LoadState& state, Rng& rng) {
    RoundOutcome out;
    one_choice_outcome(state, uniform_bin(state, rng), out);
    apply_outcome(state, out);
    return out;
}

RoundOutcome step_d_choice(LoadState& state, Rng& rng, int d) {
    if (d < 1) throw ConfigError("d must be >= 1");
    std::vector<Bin> samples(static_cast<std::size_t>(d));
    for (auto& s : samples) s = uniform_bin(state, rng);
    RoundOutcome out;
    d_choice_outcome(state, samples, out);
    apply_outcome(state, out);
    return out;
}

RoundOutcome step_one_plus_beta(LoadState& state, Rng& rng, double beta) {
    ProcessConfig config{.kind = ProcessKind::OnePlusBeta, .beta = beta};
    Process process(config, state.n());
    RoundOutcome out;
    process.plan(state, rng, out);
    apply_outcome(state, out);
    return out;
}

RoundOutcome step_quantile(LoadState& state, Rng& rng, double delta) {
    ProcessConfig config{.kind = ProcessKind::Quantile, .quantile = delta};
    Process process(config, state.n());
    RoundOutcome out;
    process.plan(state, rng, out);
    apply_outcome(state, out);
    return out;
}

RoundOutcome step_packing(LoadState& state, Rng& rng) {
    RoundOutcome out;
    packing_outcome(state, uniform_bin(state, rng), out);
    apply_outcome(state, out);
    return out;
}

RoundOutcome step_tight_packing(LoadState& state, Rng& rng) {
    RoundOutcome out;
    tight_packing_outcome(state, uniform_bin(state, rng), out);
    apply_outcome(state, out);
    return out;
}

RoundOutcome step_memory(LoadState& state, Rng& rng, std::optional<Bin>& cache) {
    RoundOutcome out;
    memory_outcome(state, cache, uniform_bin(state, rng), out);
    apply_outcome(state, out);
    cache = out.cache_after;
    return out;
}

RoundOutcome step_biased_packing(LoadState& state, Rng& rng, const BiasedSampler& sampler) {
    RoundOutcome out;
    const std::size_t rank = sampler.sample_rank(state, rng);
    packing_outcome(state, state.bin_at_rank(rank), out);
    apply_outcome(state, out);
    return out;
}

RunResult run(const ProcessConfig& config, std::size_t n, std::int64_t rounds, const RunHooks& hooks,
              const RunOptions& options) {
    if (n < 1) throw ConfigError("n must be >= 1");
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    Process process(config, n);
    Rng rng(config.seed, options.stream);
    RunResult result{LoadState(n, needs_tie_order(config.kind)), {}, std::nullopt};
    if (options.record_outcomes) result.outcomes.reserve(static_cast<std::size_t>(rounds));
    RoundOutcome outcome;
    for (std::int64_t t = 0; t < rounds; ++t) {
        process.plan(result.state, rng, outcome);
        if (hooks.before_round) hooks.before_round(result.state, outcome, process);
        process.commit(result.state, outcome);
        if (options.debug_checks && !result.state.consistent()) {
            throw std::logic_error("run: load index inconsistent after round " + std::to_string(t));
        }
        if (hooks.after_round) hooks.after_round(result.state, outcome);
        if (options.record_outcomes) result.outcomes.push_back(outcome);
    }
    result.final_cache = process.cache();
    return result;
}

}  // namespace ballsim
