#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace ballsim {

/**
 * Exact rational number with a 64-bit numerator and positive denominator.
 *
 * All quantities the simulator derives from loads (normalized loads, gaps,
 * absolute-value potential) have denominator n, so 64 bits are plenty for
 * the sizes we run. Comparisons widen to 128 bits.
 */
class Rational {
public:
    constexpr Rational() = default;
    constexpr Rational(std::int64_t value) : num_(value), den_(1) {}  // NOLINT(implicit)
    Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
        if (den_ == 0) throw std::domain_error("Rational: zero denominator");
        normalize();
    }

    [[nodiscard]] constexpr std::int64_t num() const { return num_; }
    [[nodiscard]] constexpr std::int64_t den() const { return den_; }

    [[nodiscard]] double to_double() const {
        return static_cast<double>(num_) / static_cast<double>(den_);
    }

    /// Smallest integer >= value.
    [[nodiscard]] std::int64_t ceil() const {
        std::int64_t q = num_ / den_;
        if (num_ % den_ != 0 && num_ > 0) ++q;
        return q;
    }

    /// Largest integer <= value.
    [[nodiscard]] std::int64_t floor() const {
        std::int64_t q = num_ / den_;
        if (num_ % den_ != 0 && num_ < 0) --q;
        return q;
    }

    [[nodiscard]] std::string str() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return from_wide(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                         static_cast<__int128>(a.den_) * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return from_wide(static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_,
                         static_cast<__int128>(a.den_) * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return from_wide(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw std::domain_error("Rational: division by zero");
        return from_wide(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
    }
    Rational operator-() const { return Rational(-num_, den_); }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
        const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
        if (lhs < rhs) return std::strong_ordering::less;
        if (lhs > rhs) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

private:
    static Rational from_wide(__int128 num, __int128 den) {
        if (den == 0) throw std::domain_error("Rational: zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        __int128 a = num < 0 ? -num : num;
        __int128 b = den;
        while (b != 0) {
            const __int128 r = a % b;
            a = b;
            b = r;
        }
        if (a > 1) {
            num /= a;
            den /= a;
        }
        constexpr __int128 kMax = INT64_MAX;
        if (num > kMax || -num > kMax || den > kMax) throw std::overflow_error("Rational: overflow");
        Rational r;
        r.num_ = static_cast<std::int64_t>(num);
        r.den_ = static_cast<std::int64_t>(den);
        return r;
    }

    void normalize() {
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        const std::int64_t g = std::gcd(num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

}  // namespace ballsim
