#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace ballsim {

/// Identifier written into every manifest so results can be traced to the generator.
inline constexpr std::string_view kRngId = "xoshiro256**/splitmix64-stream-v1";

/// SplitMix64 step; used for seed expansion and stream derivation.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/**
 * xoshiro256** (period 2^256 - 1).
 *
 * Streams are addressed by (seed, stream): the 256-bit state is expanded by
 * SplitMix64 from a mix of both words, so repetition r of a run seeded with
 * s always sees the same sequence regardless of which worker executes it.
 */
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t mix = seed;
        const std::uint64_t a = splitmix64_next(mix);
        std::uint64_t mix2 = stream ^ 0xD1B54A32D192ED03ULL;
        const std::uint64_t b = splitmix64_next(mix2);
        std::uint64_t sm = a ^ (b * 0xFF51AFD7ED558CCDULL);
        for (auto& word : s_) word = splitmix64_next(sm);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Unbiased integer in [0, bound) (Lemire's multiply-shift with rejection).
    std::uint64_t below(std::uint64_t bound) {
        using u128 = unsigned __int128;
        std::uint64_t x = (*this)();
        u128 m = static_cast<u128>(x) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                x = (*this)();
                m = static_cast<u128>(x) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    bool operator==(const Rng&) const = default;

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> s_{};
};

}  // namespace ballsim
