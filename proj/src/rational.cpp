#include "hjadm/rational.hpp"

#include <limits>
#include <numeric>
#include <stdexcept>

namespace hjadm {
namespace {

using i128 = __int128;

constexpr i128 kMax = std::numeric_limits<std::int64_t>::max();
constexpr i128 kMin = std::numeric_limits<std::int64_t>::min();

i128 gcd128(i128 a, i128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

std::optional<Rational> reduce(i128 num, i128 den) {
    if (den == 0) return std::nullopt;
    if (den < 0) {
        num = -num;
        den = -den;
    }
    i128 g = gcd128(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    // kMin is excluded so negation stays representable.
    if (num > kMax || num <= kMin || den > kMax) return std::nullopt;
    return Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

Rational must(std::optional<Rational> r, const char* op) {
    if (!r) throw std::overflow_error(std::string("rational overflow in ") + op);
    return *r;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw std::domain_error("rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    std::int64_t g = std::gcd(num, den);
    num_ = num / g;
    den_ = den / g;
}

std::optional<Rational> Rational::try_add(const Rational& a, const Rational& b) {
    return reduce(i128(a.num_) * b.den_ + i128(b.num_) * a.den_, i128(a.den_) * b.den_);
}

std::optional<Rational> Rational::try_mul(const Rational& a, const Rational& b) {
    // Cross-reduce first so products of already-reduced factors rarely overflow.
    std::int64_t g1 = std::gcd(a.num_, b.den_);
    std::int64_t g2 = std::gcd(b.num_, a.den_);
    if (g1 == 0) g1 = 1;
    if (g2 == 0) g2 = 1;
    return reduce(i128(a.num_ / g1) * (b.num_ / g2), i128(a.den_ / g2) * (b.den_ / g1));
}

std::optional<Rational> Rational::try_div(const Rational& a, const Rational& b) {
    if (b.num_ == 0) return std::nullopt;
    return try_mul(a, Rational(b.den_, b.num_));
}

std::optional<Rational> Rational::try_pow(const Rational& a, std::int64_t e) {
    if (e < 0) {
        if (a.is_zero()) return std::nullopt;
        Rational inv(a.den_, a.num_);
        return try_pow(inv, -e);
    }
    Rational result(1);
    Rational base = a;
    while (e > 0) {
        if (e & 1) {
            auto r = try_mul(result, base);
            if (!r) return std::nullopt;
            result = *r;
        }
        e >>= 1;
        if (e > 0) {
            auto b = try_mul(base, base);
            if (!b) return std::nullopt;
            base = *b;
        }
    }
    return result;
}

namespace {

std::optional<std::int64_t> integer_root(std::int64_t v, std::int64_t q) {
    if (v < 0) return std::nullopt;
    if (v == 0 || v == 1) return v;
    // Binary search on r with r^q <= v.
    std::int64_t lo = 1, hi = v;
    while (lo <= hi) {
        std::int64_t mid = lo + (hi - lo) / 2;
        i128 p = 1;
        bool over = false;
        for (std::int64_t i = 0; i < q; ++i) {
            p *= mid;
            if (p > v) {
                over = true;
                break;
            }
        }
        if (!over && p == v) return mid;
        if (over) hi = mid - 1;
        else lo = mid + 1;
    }
    return std::nullopt;
}

}  // namespace

std::optional<Rational> Rational::try_root(const Rational& a, std::int64_t q) {
    if (q < 2) return std::nullopt;
    bool neg = a.num_ < 0;
    if (neg && q % 2 == 0) return std::nullopt;
    auto n = integer_root(neg ? -a.num_ : a.num_, q);
    auto d = integer_root(a.den_, q);
    if (!n || !d) return std::nullopt;
    return Rational(neg ? -*n : *n, *d);
}

Rational Rational::operator-() const { return Rational(-num_, den_); }

Rational operator+(const Rational& a, const Rational& b) { return must(Rational::try_add(a, b), "add"); }
Rational operator-(const Rational& a, const Rational& b) { return must(Rational::try_add(a, -b), "sub"); }
Rational operator*(const Rational& a, const Rational& b) { return must(Rational::try_mul(a, b), "mul"); }
Rational operator/(const Rational& a, const Rational& b) {
    if (b.is_zero()) throw std::domain_error("rational division by zero");
    return must(Rational::try_div(a, b), "div");
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    return i128(a.num_) * b.den_ <=> i128(b.num_) * a.den_;
}

std::string Rational::str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

Rational factorial(int n) {
    if (n < 0) throw std::domain_error("factorial of negative");
    Rational r(1);
    for (int i = 2; i <= n; ++i) r = r * Rational(i);
    return r;
}

}  // namespace hjadm
