#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace hjadm {

/// Exact fraction over int64 kept in lowest terms with a positive denominator.
/// Arithmetic that would overflow throws std::overflow_error; callers that can
/// fall back to floating point use the `try_*` variants.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1);

    std::int64_t num() const noexcept { return num_; }
    std::int64_t den() const noexcept { return den_; }

    bool is_zero() const noexcept { return num_ == 0; }
    bool is_one() const noexcept { return num_ == 1 && den_ == 1; }
    bool is_integer() const noexcept { return den_ == 1; }
    bool is_negative() const noexcept { return num_ < 0; }
    double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

    static std::optional<Rational> try_add(const Rational& a, const Rational& b);
    static std::optional<Rational> try_mul(const Rational& a, const Rational& b);
    static std::optional<Rational> try_div(const Rational& a, const Rational& b);
    /// a^e for integer e; nullopt on overflow or 0^negative.
    static std::optional<Rational> try_pow(const Rational& a, std::int64_t e);
    /// Exact q-th root of a (q >= 2) when it exists.
    static std::optional<Rational> try_root(const Rational& a, std::int64_t q);

    Rational operator-() const;
    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b);
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }

    friend bool operator==(const Rational&, const Rational&) = default;
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

    std::string str() const;

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

std::ostream& operator<<(std::ostream& os, const Rational& r);

/// n! as an exact rational; throws std::overflow_error past 20!.
Rational factorial(int n);

}  // namespace hjadm
