#include "ballsim/conditions.hpp"

#include <algorithm>
#include <sstream>
#include <vector>

namespace ballsim {

std::string_view to_string(WRule rule) {
    switch (rule) {
        case WRule::OverloadedSingle: return "overloaded-single";
        case WRule::BallCount: return "ball-count";
        case WRule::ReceiverOverloaded: return "receiver-overloaded";
        case WRule::AboveCeilPlusOne: return "rule-a";
        case WRule::AtCeil: return "rule-b";
    }
    return "unknown";
}

std::string ConditionReport::describe() const {
    std::ostringstream os;
    os << "round " << round << ": ";
    if (passed()) {
        os << "ok";
        return os.str();
    }
    if (p_violation) {
        os << "condition P violated at k=" << p_violation->k << " (prefix " << p_violation->prefix << " > "
           << p_violation->bound << ")";
    }
    if (w_violation) {
        if (p_violation) os << "; ";
        os << "condition W violated (" << to_string(w_violation->rule) << ", bin " << w_violation->bin << ", delta "
           << w_violation->delta << ")";
    }
    return os.str();
}

namespace {

template <typename Value, typename Bound>
std::optional<PViolation> first_prefix_violation(std::size_t n, std::size_t size, Value value, Bound exceeds) {
    for (std::size_t k = 1; k <= size; ++k) {
        if (exceeds(k)) {
            return PViolation{k, value(k), static_cast<double>(k) / static_cast<double>(n)};
        }
    }
    return std::nullopt;
}

/// Contiguous [begin, end) rank ranges of equal load under the stable order.
std::vector<std::pair<std::size_t, std::size_t>> tie_classes(const LoadState& state) {
    std::vector<std::pair<std::size_t, std::size_t>> classes;
    for (Load level = state.max_load(); level >= state.min_load(); --level) {
        const std::size_t count = state.count_at(level);
        if (count == 0) continue;
        const std::size_t begin = state.count_above(level);
        classes.emplace_back(begin, begin + count);
    }
    return classes;
}

}  // namespace

std::optional<PViolation> check_condition_p(const ProbabilityVector& p, std::size_t n) {
    if (p.size() != n) throw std::invalid_argument("check_condition_p: vector length differs from n");
    std::vector<long double> prefix(n + 1, 0);
    for (std::size_t k = 1; k <= n; ++k) prefix[k] = prefix[k - 1] + p[k - 1];
    const auto nd = static_cast<long double>(n);
    return first_prefix_violation(
        n, n, [&](std::size_t k) { return static_cast<double>(prefix[k]); },
        [&](std::size_t k) { return prefix[k] > static_cast<long double>(k) / nd + 1e-12L; });
}

std::optional<PViolation> check_condition_p(const RankMass& p, std::size_t n) {
    if (p.size() != n) throw std::invalid_argument("check_condition_p: vector length differs from n");
    // prefix/den <= k/n  <=>  prefix * n <= k * den
    std::uint64_t prefix = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        prefix += p.units[k - 1];
        if (static_cast<unsigned __int128>(prefix) * n > static_cast<unsigned __int128>(k) * p.denominator) {
            return PViolation{k, static_cast<double>(prefix) / p.denominator,
                              static_cast<double>(k) / static_cast<double>(n)};
        }
    }
    return std::nullopt;
}

std::optional<PViolation> check_condition_p(const ProbabilityVector& p, const LoadState& state) {
    auto violation = check_condition_p(p, state.n());
    if (!violation) return violation;
    ProbabilityVector relabeled = p;
    for (const auto& [begin, end] : tie_classes(state)) {
        std::sort(relabeled.probs.begin() + static_cast<std::ptrdiff_t>(begin),
                  relabeled.probs.begin() + static_cast<std::ptrdiff_t>(end));
    }
    if (!check_condition_p(relabeled, state.n())) return std::nullopt;
    return violation;
}

std::optional<PViolation> check_condition_p(const RankMass& p, const LoadState& state) {
    auto violation = check_condition_p(p, state.n());
    if (!violation) return violation;
    RankMass relabeled = p;
    for (const auto& [begin, end] : tie_classes(state)) {
        std::sort(relabeled.units.begin() + static_cast<std::ptrdiff_t>(begin),
                  relabeled.units.begin() + static_cast<std::ptrdiff_t>(end));
    }
    if (!check_condition_p(relabeled, state.n())) return std::nullopt;
    return violation;
}

RankMass effective_vector_memory(const LoadState& state, Bin cache) {
    if (cache >= state.n()) throw std::out_of_range("effective_vector_memory: cache index out of range");
    const auto rank = stable_rank_of(state);
    RankMass mass{std::vector<std::uint32_t>(state.n(), 0), static_cast<std::uint32_t>(state.n())};
    const Load cached = state.load(cache);
    for (Bin u = 0; u < state.n(); ++u) {
        // Ties go to the sampled bin.
        const Bin committed = state.load(u) <= cached ? u : cache;
        ++mass.units[rank[committed]];
    }
    return mass;
}

namespace {

/// Receivers with duplicate bins merged, validated against the state.
std::vector<std::pair<Bin, Load>> merged_receivers(const LoadState& before, const RoundOutcome& outcome) {
    std::vector<std::pair<Bin, Load>> receivers = outcome.deltas;
    Load sum = 0;
    for (const auto& [bin, balls] : receivers) {
        if (bin >= before.n()) throw std::invalid_argument("check_condition_w: bin index out of range");
        if (balls < 1) throw std::invalid_argument("check_condition_w: non-positive delta");
        sum += balls;
    }
    if (sum != outcome.balls_placed || sum < 1) {
        throw std::invalid_argument("check_condition_w: deltas do not sum to balls_placed");
    }
    std::sort(receivers.begin(), receivers.end());
    std::size_t merged = 0;
    for (std::size_t k = 0; k < receivers.size(); ++k) {
        if (merged > 0 && receivers[merged - 1].first == receivers[k].first) {
            receivers[merged - 1].second += receivers[k].second;
        } else {
            receivers[merged++] = receivers[k];
        }
    }
    receivers.resize(merged);
    return receivers;
}

std::optional<WViolation> check_single_ball(const std::vector<std::pair<Bin, Load>>& receivers, Bin chosen) {
    if (receivers.size() != 1 || receivers[0].first != chosen || receivers[0].second != 1) {
        auto offending =
            std::find_if(receivers.begin(), receivers.end(), [&](const auto& r) { return r.first != chosen; });
        if (offending == receivers.end()) offending = receivers.begin();
        return WViolation{WRule::OverloadedSingle, offending->first, offending->second};
    }
    return std::nullopt;
}

}  // namespace

std::optional<WViolation> check_condition_w(const LoadState& before, const RoundOutcome& outcome) {
    const auto receivers = merged_receivers(before, outcome);

    const Bin chosen = outcome.chosen;
    if (!before.underloaded(chosen)) return check_single_ball(receivers, chosen);

    const std::int64_t need = deficit(before, chosen) + 1;
    if (outcome.balls_placed != need) return WViolation{WRule::BallCount, chosen, outcome.balls_placed};

    const Load ceil_avg = before.ceil_average();
    int at_plus_one = 0;
    int at_ceil = 0;
    for (const auto& [bin, balls] : receivers) {
        if (!before.underloaded(bin)) return WViolation{WRule::ReceiverOverloaded, bin, balls};
        const Load end = before.load(bin) + balls;
        if (end > ceil_avg + 1) return WViolation{WRule::AboveCeilPlusOne, bin, balls};
        if (end == ceil_avg + 1 && ++at_plus_one > 1) return WViolation{WRule::AboveCeilPlusOne, bin, balls};
        if (end == ceil_avg && ++at_ceil > 1) return WViolation{WRule::AtCeil, bin, balls};
    }
    return std::nullopt;
}

std::optional<WViolation> check_coupling_form(const LoadState& before, const RoundOutcome& outcome) {
    const auto receivers = merged_receivers(before, outcome);
    const Bin chosen = outcome.chosen;
    if (!before.underloaded(chosen)) return check_single_ball(receivers, chosen);
    const std::int64_t need = deficit(before, chosen) + 1;
    if (outcome.balls_placed != need) return WViolation{WRule::BallCount, chosen, outcome.balls_placed};
    const auto n = static_cast<std::int64_t>(before.n());
    Load to_overloaded = 0;
    for (const auto& [bin, balls] : receivers) {
        if (n * (before.load(bin) - 1) >= before.total()) return WViolation{WRule::ReceiverOverloaded, bin, balls};
        if (!before.underloaded(bin)) to_overloaded += balls;
        if (to_overloaded > 1) return WViolation{WRule::ReceiverOverloaded, bin, balls};
    }
    return std::nullopt;
}

void ConditionAuditor::record(ConditionReport report) {
    if (report.p_violation) ++summary_.p_violations;
    if (report.w_violation) ++summary_.w_violations;
    if (!report.passed()) {
        if (!summary_.first_violation) summary_.first_violation = report;
        if (mode_ == AuditMode::Strict) throw ConditionViolation(report);
    }
}

void ConditionAuditor::observe(const LoadState& before, const RoundOutcome& outcome, const RankMass* law) {
    ConditionReport report;
    report.round = before.rounds();
    ++summary_.rounds;
    if (law) {
        ++summary_.p_checked;
        report.p_violation = check_condition_p(*law, before);
    }
    report.w_violation = check_condition_w(before, outcome);
    record(report);
}

void ConditionAuditor::observe(const LoadState& before, const RoundOutcome& outcome, const Process& process) {
    if (process.samples_uniformly()) {
        // The uniform law over ranks does not depend on the state.
        if (!uniform_checked_) {
            const RankMass uniform = RankMass::uniform(before.n());
            uniform_checked_ = true;
            observe(before, outcome, &uniform);
            return;
        }
        observe(before, outcome, nullptr);
        ++summary_.p_checked;
        return;
    }
    const auto law = process.exact_rank_mass(before);
    observe(before, outcome, law ? &*law : nullptr);
}

void ConditionAuditor::observe_p(const LoadState& before, const ProbabilityVector& law) {
    ConditionReport report;
    report.round = before.rounds();
    ++summary_.p_checked;
    report.p_violation = check_condition_p(law, before);
    record(report);
}

AuditSummary audit_trace(std::size_t n, std::span<const RoundOutcome> outcomes, SamplingLaw law, AuditMode mode) {
    ConditionAuditor auditor(mode);
    LoadState state(n);
    const RankMass uniform = RankMass::uniform(n);
    bool uniform_done = false;
    for (const auto& outcome : outcomes) {
        switch (law) {
            case SamplingLaw::Uniform:
                auditor.observe(state, outcome, uniform_done ? nullptr : &uniform);
                uniform_done = true;
                break;
            case SamplingLaw::MemoryCache:
                if (outcome.cache_before) {
                    const RankMass mass = effective_vector_memory(state, *outcome.cache_before);
                    auditor.observe(state, outcome, &mass);
                } else {
                    auditor.observe(state, outcome, &uniform);
                }
                break;
            case SamplingLaw::Unknown:
                auditor.observe(state, outcome, static_cast<const RankMass*>(nullptr));
                break;
        }
        apply_outcome(state, outcome);
    }
    return auditor.summary();
}

}  // namespace ballsim
