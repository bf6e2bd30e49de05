#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "hjadm/errors.hpp"
#include "hjadm/rational.hpp"

namespace hjadm::sym {

inline constexpr std::size_t kDefaultNodeCap = 200'000;

/// Constant payload: exact rational when possible, otherwise an IEEE double.
/// Rational arithmetic that overflows degrades to double instead of failing.
class Number {
public:
    Number() : value_(Rational(0)) {}
    Number(Rational r) : value_(r) {}
    Number(std::int64_t n) : value_(Rational(n)) {}
    Number(int n) : value_(Rational(n)) {}
    static Number real(double d) { return Number(d, 0); }

    bool is_rational() const noexcept { return std::holds_alternative<Rational>(value_); }
    const Rational& rational() const { return std::get<Rational>(value_); }
    double to_double() const noexcept;

    bool is_zero() const noexcept;
    bool is_one() const noexcept;
    bool is_negative() const noexcept;
    bool is_integer() const noexcept { return is_rational() && rational().is_integer(); }
    bool is_half() const noexcept { return is_rational() && rational() == Rational(1, 2); }

    Number operator-() const;
    friend Number operator+(const Number& a, const Number& b);
    friend Number operator*(const Number& a, const Number& b);
    friend bool operator==(const Number& a, const Number& b) = default;
    /// Total order: rationals before doubles, then by value.
    friend std::strong_ordering compare(const Number& a, const Number& b);

private:
    Number(double d, int) : value_(d) {}
    std::variant<Rational, double> value_;
};

enum class Op : std::uint8_t {
    Constant,
    Variable,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Sin,
    Cos,
    Sqrt,
    Exp,
    Ln,
};

int arity(Op op) noexcept;
bool is_function(Op op) noexcept;
std::string_view function_name(Op op);

class Expr;

namespace detail {
struct Node;
}

/// Immutable expression tree with shared structure. Copies are cheap.
///
/// `size()` is the tree node count with multiplicity, i.e. the cost of a
/// naive evaluation; it saturates at SIZE_MAX.
class Expr {
public:
    /// The constant 0.
    Expr();

    static Expr constant(Number value);
    static Expr variable(std::string name);
    static Expr unary(Op op, Expr child);
    static Expr binary(Op op, Expr lhs, Expr rhs);

    Op op() const noexcept;
    const Number& value() const;
    const std::string& name() const;
    std::size_t arity() const noexcept;
    const Expr& child(std::size_t i) const;
    std::size_t size() const noexcept;
    std::size_t hash() const noexcept;

    bool is_constant() const noexcept { return op() == Op::Constant; }
    bool is_zero() const noexcept { return is_constant() && value().is_zero(); }
    bool is_one() const noexcept { return is_constant() && value().is_one(); }

    /// Identity of the shared node; used for memoisation, never for equality.
    const void* id() const noexcept { return node_.get(); }

    friend bool operator==(const Expr& a, const Expr& b);
    friend std::strong_ordering compare(const Expr& a, const Expr& b);

private:
    explicit Expr(std::shared_ptr<const detail::Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const detail::Node> node_;
};

struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

// Raw constructors: build exactly the node asked for, no rewriting.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, const Expr& exponent);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr sqrt(const Expr& a);
Expr exp(const Expr& a);
Expr ln(const Expr& a);
Expr num(std::int64_t n, std::int64_t d = 1);
Expr var(std::string name);

using Binding = std::unordered_map<std::string, double>;

/// Parses the infix grammar
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | base ('^' factor)?
///   base   := number | ident | ident '(' expr ')' | '(' expr ')'
/// Decimal literals become exact rationals when they fit in int64.
Expr parse(std::string_view text);

/// Prints in the grammar above; parse(print(parse(t))) == parse(t).
std::string print(const Expr& e);
std::ostream& operator<<(std::ostream& os, const Expr& e);

std::set<std::string> free_variables(const Expr& e);

double evaluate(const Expr& e, const Binding& binding);
double evaluate(const Expr& e, const std::string& var, double value);

Expr differentiate(const Expr& e, const std::string& var, std::size_t node_cap = kDefaultNodeCap);
/// k-th derivative, simplified after every step.
Expr differentiate_n(const Expr& e, const std::string& var, int k,
                     std::size_t node_cap = kDefaultNodeCap);

/// Rewrite-rule simplification: constant folding, 0/1 identities, collection
/// of like terms and like-base powers. Value-preserving wherever the input is
/// defined, idempotent, and never returns a larger tree than its input.
Expr simplify(const Expr& e);

Expr substitute(const Expr& e, const std::string& var, const Expr& replacement,
                std::size_t node_cap = kDefaultNodeCap);

/// Throws NodeCapExceeded when e.size() > cap.
void check_cap(const Expr& e, std::size_t cap);

/// Flat instruction tape for fast repeated evaluation in one variable.
/// Shared subexpressions are evaluated once per call.
class CompiledExpr {
public:
    CompiledExpr() = default;
    CompiledExpr(const Expr& e, std::string var);

    double operator()(double value) const;
    const Expr& source() const noexcept { return source_; }

private:
    struct Instr {
        Op op;
        std::uint32_t a = 0;
        std::uint32_t b = 0;
        double constant = 0.0;
        bool integer_exponent = false;
    };
    Expr source_;
    std::string var_;
    std::vector<Instr> tape_;
    std::vector<Expr> origin_;
};

namespace detail {

struct Node {
    Op op;
    Number value;
    std::string name;
    std::vector<Expr> children;
    std::size_t size;
    std::size_t hash;
};

}  // namespace detail

}  // namespace hjadm::sym
