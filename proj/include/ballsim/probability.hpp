#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ballsim/rational.hpp"

namespace ballsim {

/// Sampling probabilities indexed by sorted load rank (index 0 = heaviest bin).
struct ProbabilityVector {
    std::vector<double> probs;

    [[nodiscard]] std::size_t size() const { return probs.size(); }
    [[nodiscard]] double operator[](std::size_t rank) const { return probs[rank]; }

    static ProbabilityVector uniform(std::size_t n) {
        return {std::vector<double>(n, 1.0 / static_cast<double>(n))};
    }
};

/**
 * Exact probabilities over sorted ranks, stored as integer units of
 * 1/denominator. Enumerating the n equally likely uniform samples of a
 * process yields exactly this shape with denominator n.
 */
struct RankMass {
    std::vector<std::uint32_t> units;
    std::uint32_t denominator = 1;

    [[nodiscard]] std::size_t size() const { return units.size(); }
    [[nodiscard]] Rational at(std::size_t rank) const { return Rational(units[rank], denominator); }
    [[nodiscard]] ProbabilityVector to_probability() const {
        ProbabilityVector p;
        p.probs.reserve(units.size());
        for (auto u : units) p.probs.push_back(static_cast<double>(u) / static_cast<double>(denominator));
        return p;
    }

    static RankMass uniform(std::size_t n) {
        return {std::vector<std::uint32_t>(n, 1), static_cast<std::uint32_t>(n)};
    }
};

}  // namespace ballsim
