// ballsim: run, verify and export balls-into-bins experiments.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ballsim/analysis.hpp"
#include "ballsim/conditions.hpp"
#include "ballsim/experiments.hpp"
#include "ballsim/potentials.hpp"
#include "ballsim/report.hpp"
#include "ballsim/unfolding.hpp"

using namespace ballsim;

namespace {

constexpr int kExitStrictFailure = 1;
constexpr int kExitConfig = 2;

struct CommonOptions {
    std::string process = "packing";
    std::size_t bins = 0;
    std::int64_t rounds = 0;
    std::int64_t balls_per_bin = 0;
    std::uint64_t seed = 0;
    int d = 2;
    double beta = 0.5;
    double quantile = 0.5;
    std::string bias = "max_bias";
    double bias_a = 2.0;
    double bias_b = 2.0;
    std::string out;
    std::string format = "csv";
};

void add_process_options(CLI::App* app, CommonOptions& o, bool with_rounds = true) {
    app->add_option("--process", o.process,
                    "one_choice, d_choice (two_choice), one_plus_beta, quantile, packing, tight_packing, memory, "
                    "biased_packing")
        ->capture_default_str();
    app->add_option("--bins", o.bins, "number of bins n")->required();
    if (with_rounds) {
        auto* rounds = app->add_option("--rounds", o.rounds, "number of rounds m");
        auto* per_bin = app->add_option("--balls-per-bin", o.balls_per_bin,
                                        "sets m = k * n rounds (the table's m counts rounds; W^m is reported too)");
        rounds->excludes(per_bin);
    }
    app->add_option("--seed", o.seed, "64-bit seed")->capture_default_str();
    app->add_option("--d", o.d, "samples per round for d_choice")->capture_default_str();
    app->add_option("--beta", o.beta, "two-sample probability for one_plus_beta")->capture_default_str();
    app->add_option("--quantile", o.quantile, "quantile fraction delta")->capture_default_str();
    app->add_option("--bias", o.bias, "max_bias or min_bias")->capture_default_str();
    app->add_option("--bias-a", o.bias_a, "lower box 1/(a n)")->capture_default_str();
    app->add_option("--bias-b", o.bias_b, "upper box b/n")->capture_default_str();
}

void add_output_options(CLI::App* app, CommonOptions& o) {
    app->add_option("--out", o.out, "output file (default: stdout)");
    app->add_option("--format", o.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
}

ProcessConfig make_config(const CommonOptions& o) {
    ProcessConfig c;
    const auto kind = parse_process_kind(o.process);
    if (!kind) throw ConfigError("unknown process '" + o.process + "'");
    c.kind = *kind;
    const auto bias = parse_bias_kind(o.bias);
    if (!bias) throw ConfigError("unknown bias '" + o.bias + "'");
    c.bias = *bias;
    c.d = o.d;
    c.beta = o.beta;
    c.quantile = o.quantile;
    c.bias_a = o.bias_a;
    c.bias_b = o.bias_b;
    c.seed = o.seed;
    c.validate();
    return c;
}

std::int64_t resolve_rounds(const CommonOptions& o) {
    if (o.bins < 1) throw ConfigError("--bins must be >= 1");
    const std::int64_t m = o.balls_per_bin > 0 ? o.balls_per_bin * static_cast<std::int64_t>(o.bins) : o.rounds;
    if (m < 1) throw ConfigError("give --rounds >= 1 or --balls-per-bin >= 1");
    return m;
}

RunManifest make_manifest(const std::string& command, const ProcessConfig& c, const CommonOptions& o,
                          std::int64_t rounds) {
    RunManifest m;
    m.command = command;
    m.config = c;
    m.n = o.bins;
    m.rounds = rounds;
    m.started_at = utc_timestamp();
    return m;
}

/// Output stream for --out, or stdout.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw ConfigError("cannot open '" + path + "' for writing");
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

std::string decimal(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

int cmd_gap(const CommonOptions& o, int reps) {
    const auto config = make_config(o);
    const auto rounds = resolve_rounds(o);
    if (reps < 1) throw ConfigError("--reps must be >= 1");
    auto manifest = make_manifest("gap", config, o, rounds);
    manifest.reps = reps;
    const auto result = gap_distribution_experiment(config, o.bins, rounds, reps);
    manifest.finished_at = utc_timestamp();
    Output out(o.out);
    if (o.format == "json") {
        out.stream() << gap_result_json(manifest, result).dump(2) << '\n';
    } else {
        write_gap_csv(out.stream(), manifest, result);
    }
    return 0;
}

int cmd_efficiency(const CommonOptions& o, std::int64_t stride) {
    const auto config = make_config(o);
    const auto rounds = resolve_rounds(o);
    if (stride < 1) stride = static_cast<std::int64_t>(o.bins);
    auto manifest = make_manifest("efficiency", config, o, rounds);
    manifest.stride = stride;
    std::vector<CounterSample> samples;
    RunHooks hooks;
    hooks.after_round = [&](const LoadState& s, const RoundOutcome&) {
        if (s.rounds() % stride == 0 || s.rounds() == rounds) samples.push_back({s.rounds(), s.total(), s.samples()});
    };
    run(config, o.bins, rounds, hooks);
    manifest.finished_at = utc_timestamp();
    const auto eta = sample_efficiency_series(samples);
    const auto mu = throughput_series(samples);
    const double n = static_cast<double>(o.bins);
    Output out(o.out);
    if (o.format == "json") {
        nlohmann::ordered_json j;
        j["manifest"] = to_json(manifest);
        auto series = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < samples.size(); ++k) {
            series.push_back({{"t", samples[k].round},
                              {"t_over_n", static_cast<double>(samples[k].round) / n},
                              {"balls", samples[k].balls},
                              {"samples", samples[k].samples},
                              {"eta", eta[k].second.str()},
                              {"mu", mu[k].second.str()}});
        }
        j["series"] = series;
        out.stream() << j.dump(2) << '\n';
    } else {
        CsvWriter csv(out.stream());
        csv.manifest(manifest);
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const std::string t = std::to_string(samples[k].round);
            csv.row({"t_over_n", t, decimal(static_cast<double>(samples[k].round) / n)});
            csv.row({"eta", t, eta[k].second.str()});
            csv.row({"mu", t, mu[k].second.str()});
        }
    }
    return 0;
}

struct VerifyCounts {
    AuditSummary summary;
    std::int64_t coupling_violations = 0;
    DensityScan density;
    std::int64_t folded_rounds = 0;
};

VerifyCounts verify_run(const ProcessConfig& config, std::size_t n, std::int64_t rounds, AuditMode mode) {
    VerifyCounts counts;
    ConditionAuditor auditor(mode);
    GoodEventSeries events;
    events.push(false);
    RunHooks hooks;
    std::unique_ptr<MemoryFolder> folder;
    if (config.kind == ProcessKind::Memory) {
        folder = std::make_unique<MemoryFolder>(n, [&](const LoadState& start, const FoldedRound& round) {
            if (check_coupling_form(start, round.outcome)) ++counts.coupling_violations;
            const RankMass law = round.cache_at_start ? effective_vector_memory(start, *round.cache_at_start)
                                                      : RankMass::uniform(n);
            auditor.observe(start, round.outcome, &law);
        });
        hooks.after_round = [&](const LoadState&, const RoundOutcome& outcome) {
            folder->feed(AtomicStep::from_outcome(outcome));
            if (folder->state().rounds() == static_cast<std::int64_t>(events.size())) {
                events.push(folder->state());
            }
        };
    } else {
        hooks.before_round = [&](const LoadState& before, const RoundOutcome& outcome, const Process& process) {
            if (config.kind == ProcessKind::BiasedPacking) {
                auditor.observe_p(before, *process.bias_vector(before));
                auditor.observe(before, outcome, nullptr);
                return;
            }
            auditor.observe(before, outcome, process);
        };
        hooks.after_round = [&](const LoadState& after, const RoundOutcome&) { events.push(after); };
    }
    run(config, n, rounds, hooks);
    counts.summary = auditor.summary();
    counts.folded_rounds = folder ? folder->rounds_completed() : rounds;
    counts.density = scan_good_event_density(events.flags(), static_cast<std::int64_t>(n));
    return counts;
}

int cmd_verify(const CommonOptions& o, const std::string& mode_name) {
    const auto config = make_config(o);
    const auto rounds = resolve_rounds(o);
    const AuditMode mode = mode_name == "strict" ? AuditMode::Strict : AuditMode::Audit;
    try {
        const auto c = verify_run(config, o.bins, rounds, mode);
        std::cout << "process " << to_string(config.kind) << " bins " << o.bins << " rounds " << rounds << '\n';
        if (config.kind == ProcessKind::Memory) std::cout << "folded_rounds " << c.folded_rounds << '\n';
        std::cout << "p_checked " << c.summary.p_checked << "\np_violations " << c.summary.p_violations
                  << "\nw_violations " << c.summary.w_violations << '\n';
        if (config.kind == ProcessKind::Memory) std::cout << "coupling_form_violations " << c.coupling_violations << '\n';
        std::cout << "density_windows " << c.density.windows << "\ndensity_min " << c.density.min_count
                  << "\ndensity_below_n_over_40 " << c.density.below_bound << '\n';
        if (c.summary.first_violation) std::cout << "first_violation " << c.summary.first_violation->describe() << '\n';
    } catch (const ConditionViolation& v) {
        std::cout << "strict verification failed: " << v.what() << '\n';
        return kExitStrictFailure;
    }
    return 0;
}

int cmd_counterexample(std::size_t bins, double alpha, Load min_y) {
    if (!(alpha > 0)) throw ConfigError("--alpha must be > 0");
    LoadState state(1);
    try {
        state = sqrt_spike_configuration(bins);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const double log_ratio = expected_phi_log_ratio(state, alpha, min_y);
    const double n = static_cast<double>(bins);
    const double bound_excess = 0.1 * alpha * alpha / n;
    const double excess = std::expm1(log_ratio);
    const bool pass = log_ratio >= std::log1p(bound_excess);
    std::cout << std::setprecision(17) << "bins " << bins << "\nalpha " << alpha << "\nmin_y " << min_y
              << "\nlog_ratio " << log_ratio << "\nratio_minus_one " << excess << "\nbound_minus_one "
              << bound_excess << '\n'
              << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? 0 : kExitStrictFailure;
}

int cmd_potential(const CommonOptions& o, double alpha, std::int64_t stride) {
    const auto config = make_config(o);
    const auto rounds = resolve_rounds(o);
    if (!(alpha > 0)) throw ConfigError("--alpha must be > 0");
    if (stride < 1) stride = static_cast<std::int64_t>(o.bins);
    auto manifest = make_manifest("potential", config, o, rounds);
    manifest.alpha = alpha;
    manifest.stride = stride;
    std::vector<PotentialSnapshot> snapshots;
    GoodEventSeries events;
    events.push(false);
    snapshots.push_back(take_snapshot(LoadState(o.bins), alpha));
    RunHooks hooks;
    hooks.after_round = [&](const LoadState& s, const RoundOutcome&) {
        events.push(s);
        if (s.rounds() % stride == 0 || s.rounds() == rounds) snapshots.push_back(take_snapshot(s, alpha));
    };
    run(config, o.bins, rounds, hooks);
    const auto scan = scan_good_event_density(events.flags(), static_cast<std::int64_t>(o.bins));
    manifest.finished_at = utc_timestamp();
    Output out(o.out);
    auto log_phi_text = [](double v) { return v == kNegInfinity ? std::string("-inf") : decimal(v); };
    if (o.format == "json") {
        nlohmann::ordered_json j;
        j["manifest"] = to_json(manifest);
        auto series = nlohmann::ordered_json::array();
        for (const auto& s : snapshots) {
            series.push_back({{"t", s.round},
                              {"gap", s.gap.str()},
                              {"delta", s.delta.str()},
                              {"log_phi", log_phi_text(s.log_phi)},
                              {"underloaded", s.underloaded_count},
                              {"good_event", s.good_event}});
        }
        j["snapshots"] = series;
        j["density"] = {{"windows", scan.windows},
                        {"min_count", scan.min_count},
                        {"min_t0", scan.min_t0},
                        {"below_n_over_40", scan.below_bound}};
        out.stream() << j.dump(2) << '\n';
    } else {
        CsvWriter csv(out.stream());
        csv.manifest(manifest);
        for (const auto& s : snapshots) {
            const std::string t = std::to_string(s.round);
            csv.row({"gap", t, s.gap.str()});
            csv.row({"delta", t, s.delta.str()});
            csv.row({"log_phi", t, log_phi_text(s.log_phi)});
            csv.row({"underloaded", t, std::to_string(s.underloaded_count)});
            csv.row({"good_event", t, s.good_event ? "1" : "0"});
        }
        csv.row({"density", "windows", std::to_string(scan.windows)});
        csv.row({"density", "min_count", std::to_string(scan.min_count)});
        csv.row({"density", "min_t0", std::to_string(scan.min_t0)});
        csv.row({"density", "below_n_over_40", std::to_string(scan.below_bound)});
    }
    return 0;
}

int cmd_trace(const CommonOptions& o) {
    const auto config = make_config(o);
    const auto rounds = resolve_rounds(o);
    auto manifest = make_manifest("trace", config, o, rounds);
    Output out(o.out);
    TraceWriter writer(out.stream(), manifest);
    RunHooks hooks;
    hooks.after_round = [&](const LoadState& s, const RoundOutcome& outcome) { writer.write(s.rounds(), outcome); };
    run(config, o.bins, rounds, hooks);
    return 0;
}

int cmd_fold_memory(const std::string& in_path, const std::string& out_path, const std::string& mode_name) {
    std::ifstream in(in_path);
    if (!in) throw ConfigError("cannot open '" + in_path + "'");
    Trace trace;
    try {
        trace = read_trace(in);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (trace.manifest.config.kind != ProcessKind::Memory) throw ConfigError("fold-memory needs a memory trace");
    const std::size_t n = trace.manifest.n;
    const auto steps = memory_steps(trace);
    const AuditMode mode = mode_name == "strict" ? AuditMode::Strict : AuditMode::Audit;
    ConditionAuditor auditor(AuditMode::Audit);
    std::int64_t coupling = 0;
    Output out(out_path);
    RunManifest manifest = trace.manifest;
    manifest.command = "fold-memory";
    TraceWriter writer(out.stream(), manifest);
    MemoryFolder folder(n, [&](const LoadState& start, const FoldedRound& round) {
        const RankMass law =
            round.cache_at_start ? effective_vector_memory(start, *round.cache_at_start) : RankMass::uniform(n);
        auditor.observe(start, round.outcome, &law);
        if (check_coupling_form(start, round.outcome)) ++coupling;
        writer.write(start.rounds() + 1, round.outcome);
    });
    for (const auto& step : steps) folder.feed(step);
    const auto& s = auditor.summary();
    std::cerr << "atomic_steps " << steps.size() << "\nfolded_rounds " << folder.rounds_completed()
              << "\ntruncated " << (folder.pending() ? 1 : 0) << "\np_violations " << s.p_violations
              << "\nw_violations " << s.w_violations << "\ncoupling_form_violations " << coupling << '\n';
    if (s.first_violation) std::cerr << "first_violation " << s.first_violation->describe() << '\n';
    return mode == AuditMode::Strict && !s.passed() ? kExitStrictFailure : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Balls-into-bins simulator: filling processes, condition verifiers, potentials, experiments."};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    CommonOptions gap_o;
    int reps = 1;
    auto* gap_cmd = app.add_subcommand("gap", "Gap(m) histogram over independent repetitions");
    add_process_options(gap_cmd, gap_o);
    add_output_options(gap_cmd, gap_o);
    gap_cmd->add_option("--reps", reps, "repetitions")->capture_default_str();

    CommonOptions eff_o;
    std::int64_t eff_stride = 0;
    auto* eff_cmd = app.add_subcommand("efficiency", "throughput and sample-efficiency series");
    add_process_options(eff_cmd, eff_o);
    add_output_options(eff_cmd, eff_o);
    eff_cmd->add_option("--stride", eff_stride, "rounds between points (default n)");

    CommonOptions ver_o;
    std::string ver_mode = "strict";
    auto* ver_cmd = app.add_subcommand("verify", "run with per-round condition P and W verification");
    add_process_options(ver_cmd, ver_o);
    ver_cmd->add_option("--mode", ver_mode, "strict or audit")
        ->check(CLI::IsMember({"strict", "audit"}))
        ->capture_default_str();

    std::size_t ce_bins = 10000;
    double ce_alpha = 0.5;
    Load ce_min_y = 0;
    auto* ce_cmd = app.add_subcommand("counterexample", "exact expected potential ratio on the sqrt-spike configuration");
    ce_cmd->add_option("--bins", ce_bins, "perfect square n")->capture_default_str();
    ce_cmd->add_option("--alpha", ce_alpha, "potential parameter > 0")->capture_default_str();
    ce_cmd->add_option("--min-y", ce_min_y, "potential support y >= min-y")->capture_default_str();

    CommonOptions pot_o;
    double pot_alpha = 0.1;
    std::int64_t pot_stride = 0;
    auto* pot_cmd = app.add_subcommand("potential", "potential snapshots and good-event density");
    add_process_options(pot_cmd, pot_o);
    add_output_options(pot_cmd, pot_o);
    pot_cmd->add_option("--alpha", pot_alpha, "potential parameter > 0")->capture_default_str();
    pot_cmd->add_option("--stride", pot_stride, "rounds between snapshots (default n)");

    CommonOptions tr_o;
    auto* tr_cmd = app.add_subcommand("trace", "write a per-round NDJSON trace");
    add_process_options(tr_cmd, tr_o);
    tr_cmd->add_option("--out", tr_o.out, "output file (default: stdout)");

    std::string fold_in;
    std::string fold_out;
    std::string fold_mode = "audit";
    auto* fold_cmd = app.add_subcommand("fold-memory", "fold a Memory trace into filling rounds and audit them");
    fold_cmd->add_option("--in", fold_in, "NDJSON trace written by 'trace --process memory'")->required();
    fold_cmd->add_option("--out", fold_out, "folded rounds as NDJSON (default: stdout)");
    fold_cmd->add_option("--mode", fold_mode, "strict or audit")
        ->check(CLI::IsMember({"strict", "audit"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (*gap_cmd) return cmd_gap(gap_o, reps);
        if (*eff_cmd) return cmd_efficiency(eff_o, eff_stride);
        if (*ver_cmd) return cmd_verify(ver_o, ver_mode);
        if (*ce_cmd) return cmd_counterexample(ce_bins, ce_alpha, ce_min_y);
        if (*pot_cmd) return cmd_potential(pot_o, pot_alpha, pot_stride);
        if (*tr_cmd) return cmd_trace(tr_o);
        if (*fold_cmd) return cmd_fold_memory(fold_in, fold_out, fold_mode);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return 0;
}
