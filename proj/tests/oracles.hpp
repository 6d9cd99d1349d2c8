#pragma once

// Brute-force reference implementations. They share no code with the
// library beyond plain std types: loads are vectors, probabilities are
// doubles, potentials are summed directly without log-domain tricks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Loads = std::vector<std::int64_t>;

inline std::int64_t total(const Loads& x) { return std::accumulate(x.begin(), x.end(), std::int64_t{0}); }

/// Bins sorted by load, heaviest first, ties by index.
inline std::vector<std::size_t> ranks(const Loads& x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] > x[b]; });
    return order;
}

/// Smallest k with x_i + k >= W/n, found by counting up.
inline std::int64_t deficit(const Loads& x, std::size_t i) {
    const auto n = static_cast<std::int64_t>(x.size());
    const std::int64_t w = total(x);
    std::int64_t k = 0;
    while (n * (x[i] + k) < w) ++k;
    return k;
}

inline bool underloaded(const Loads& x, std::size_t i) {
    return static_cast<double>(x[i]) < static_cast<double>(total(x)) / static_cast<double>(x.size()) &&
           static_cast<std::int64_t>(x.size()) * x[i] < total(x);
}

/// 1 + sum over underloaded bins of deficit * probability of its rank.
inline double expected_balls(const Loads& x, const std::vector<double>& p_by_rank) {
    const auto order = ranks(x);
    double e = 1;
    for (std::size_t r = 0; r < order.size(); ++r) {
        const std::size_t i = order[r];
        if (underloaded(x, i)) e += p_by_rank[r] * static_cast<double>(deficit(x, i));
    }
    return e;
}

/// Packing rule applied to sample i.
inline Loads packing(Loads x, std::size_t i) {
    if (underloaded(x, i)) {
        x[i] += deficit(x, i) + 1;
    } else {
        x[i] += 1;
    }
    return x;
}

/// TightPacking rule applied to sample i.
inline Loads tight_packing(Loads x, std::size_t i) {
    if (!underloaded(x, i)) {
        x[i] += 1;
        return x;
    }
    const auto n = static_cast<std::int64_t>(x.size());
    const std::int64_t w = total(x);
    const std::int64_t ceil_avg = (w + n - 1) / n;
    std::int64_t balls = deficit(x, i) + 1;
    std::vector<std::size_t> under;
    for (std::size_t b : ranks(x)) {
        if (underloaded(x, b)) under.push_back(b);
    }
    const std::size_t first = under.front();
    const std::int64_t to_first = ceil_avg + 1 - x[first];
    x[first] += std::min(balls, to_first);
    balls -= std::min(balls, to_first);
    for (std::size_t k = 1; k < under.size() && balls > 0; ++k) {
        const std::int64_t room = std::max<std::int64_t>(0, ceil_avg - 1 - x[under[k]]);
        const std::int64_t put = std::min(room, balls);
        x[under[k]] += put;
        balls -= put;
    }
    return x;
}

/// Sum of exp(alpha * y_i) over bins with y_i >= min_y, in plain doubles.
inline double phi(const Loads& x, double alpha, std::int64_t min_y) {
    const double avg = static_cast<double>(total(x)) / static_cast<double>(x.size());
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double y = static_cast<double>(x[i]) - avg;
        if (static_cast<std::int64_t>(x.size()) * (x[i] - min_y) >= total(x)) s += std::exp(alpha * y);
    }
    return s;
}

/// E[Phi'] / Phi over the n equally likely uniform samples.
inline double phi_ratio(const Loads& x, double alpha, std::int64_t min_y, bool tight) {
    double sum = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += phi(tight ? tight_packing(x, i) : packing(x, i), alpha, min_y);
    return sum / static_cast<double>(x.size()) / phi(x, alpha, min_y);
}

/// Every prefix of p is at most k/n, each prefix summed from scratch.
inline bool majorized_by_uniform(const std::vector<double>& p, double tol = 1e-12) {
    const double n = static_cast<double>(p.size());
    for (std::size_t k = 1; k <= p.size(); ++k) {
        double s = 0;
        for (std::size_t j = 0; j < k; ++j) s += p[j];
        if (s > static_cast<double>(k) / n + tol) return false;
    }
    return true;
}

/// Memory's committed bin for sample u given cache c.
inline std::size_t memory_commit(const Loads& x, std::size_t cache, std::size_t u) {
    return x[u] <= x[cache] ? u : cache;
}

/// Random loads in [0, max_load] with at least one bin at y >= 2.
inline Loads random_spiked_loads(std::mt19937_64& g, std::size_t n, std::int64_t max_load) {
    std::uniform_int_distribution<std::int64_t> load(0, max_load);
    Loads x(n);
    for (auto& v : x) v = load(g);
    const auto nn = static_cast<std::int64_t>(n);
    std::size_t top = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (x[i] > x[top]) top = i;
    }
    while (nn * (x[top] - 2) < total(x)) ++x[top];
    return x;
}

/// A random probability vector majorized by uniform: uniform mass pushed towards lighter ranks.
inline std::vector<double> random_majorized(std::mt19937_64& g, std::size_t n) {
    std::vector<double> w(n);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : w) v = u(g);
    std::sort(w.begin(), w.end());
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& v : w) v /= s;
    return w;
}

}  // namespace oracle
