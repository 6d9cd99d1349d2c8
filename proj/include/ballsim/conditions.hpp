#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ballsim/load_state.hpp"
#include "ballsim/probability.hpp"
#include "ballsim/processes.hpp"

namespace ballsim {

/// First prefix where the sampling vector exceeds the uniform one.
struct PViolation {
    std::size_t k = 0;  ///< prefix length (1-based)
    double prefix = 0;  ///< sum of the k heaviest-rank probabilities
    double bound = 0;   ///< k / n
};

/// Which clause of the filling allocation rule an outcome broke.
enum class WRule {
    OverloadedSingle,  ///< overloaded sample must receive exactly one ball, alone
    BallCount,         ///< underloaded sample: exactly deficit + 1 balls
    ReceiverOverloaded,///< a receiving bin was not underloaded at round start
    AboveCeilPlusOne,  ///< (a) more than one bin ends at ceil(W/n)+1, or one ends above it
    AtCeil,            ///< (b) more than one bin ends exactly at ceil(W/n)
};

std::string_view to_string(WRule rule);

struct WViolation {
    WRule rule = WRule::BallCount;
    Bin bin = 0;      ///< offending bin (the chosen bin for count rules)
    Load delta = 0;   ///< balls it received (total balls for BallCount)
};

struct ConditionReport {
    std::int64_t round = 0;
    std::optional<PViolation> p_violation;
    std::optional<WViolation> w_violation;

    [[nodiscard]] bool passed() const { return !p_violation && !w_violation; }
    [[nodiscard]] std::string describe() const;
};

/// sum_{i<=k} p_i <= k/n for every k, within 1e-12; throws if p.size() != n.
std::optional<PViolation> check_condition_p(const ProbabilityVector& p, std::size_t n);
/// Exact variant over integer mass units.
std::optional<PViolation> check_condition_p(const RankMass& p, std::size_t n);

/**
 * Condition P for a vector indexed by the stable ranks of `state`. When the
 * fixed labeling fails, the check is repeated with each tie class (bins of
 * equal load) reordered lightest-mass-first, the most favourable labeling the
 * process may legally pick; a violation is only reported if that fails too.
 */
std::optional<PViolation> check_condition_p(const ProbabilityVector& p, const LoadState& state);
std::optional<PViolation> check_condition_p(const RankMass& p, const LoadState& state);

/// Distribution of the bin Memory commits to, for every uniform sample, over stable ranks.
RankMass effective_vector_memory(const LoadState& state, Bin cache);

/// Condition W for an outcome planned on `before`; throws std::invalid_argument if inconsistent.
std::optional<WViolation> check_condition_w(const LoadState& before, const RoundOutcome& outcome);

/**
 * The weaker per-round form used by the Memory coupling argument: ball count
 * as in condition W, every receiver had y < 1 at round start, and at most one
 * ball went to a bin that was not underloaded. Implied by check_condition_w.
 */
std::optional<WViolation> check_coupling_form(const LoadState& before, const RoundOutcome& outcome);

enum class AuditMode { Strict, Audit };

/// Thrown in strict mode on the first violation.
class ConditionViolation : public std::runtime_error {
public:
    explicit ConditionViolation(ConditionReport report)
        : std::runtime_error(report.describe()), report_(report) {}
    [[nodiscard]] const ConditionReport& report() const { return report_; }

private:
    ConditionReport report_;
};

struct AuditSummary {
    std::int64_t rounds = 0;
    std::int64_t p_checked = 0;
    std::int64_t p_violations = 0;
    std::int64_t w_violations = 0;
    std::optional<ConditionReport> first_violation;

    [[nodiscard]] bool passed() const { return p_violations == 0 && w_violations == 0; }
};

/**
 * Streaming verifier: feed it every round (state before + outcome + the
 * round's sampling law when known). Uniform laws are checked once.
 */
class ConditionAuditor {
public:
    explicit ConditionAuditor(AuditMode mode) : mode_(mode) {}

    void observe(const LoadState& before, const RoundOutcome& outcome, const RankMass* law);
    void observe(const LoadState& before, const RoundOutcome& outcome, const Process& process);
    /// Condition P only, for laws given as doubles (biased sampling).
    void observe_p(const LoadState& before, const ProbabilityVector& law);

    [[nodiscard]] const AuditSummary& summary() const { return summary_; }

private:
    void record(ConditionReport report);

    AuditMode mode_;
    AuditSummary summary_;
    bool uniform_checked_ = false;
};

/// How a recorded trace chose its bins, for re-deriving the P law.
enum class SamplingLaw { Uniform, MemoryCache, Unknown };

/// Replays a trace of outcomes from the empty state of n bins and audits every round.
AuditSummary audit_trace(std::size_t n, std::span<const RoundOutcome> outcomes, SamplingLaw law, AuditMode mode);

}  // namespace ballsim
