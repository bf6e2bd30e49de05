#include "hjadm/symexpr.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace hjadm::sym {

// ---------------------------------------------------------------------------
// Number

double Number::to_double() const noexcept {
    if (auto* r = std::get_if<Rational>(&value_)) return r->to_double();
    return std::get<double>(value_);
}

bool Number::is_zero() const noexcept { return to_double() == 0.0; }

bool Number::is_one() const noexcept {
    if (auto* r = std::get_if<Rational>(&value_)) return r->is_one();
    return std::get<double>(value_) == 1.0;
}

bool Number::is_negative() const noexcept { return to_double() < 0.0; }

Number Number::operator-() const {
    if (auto* r = std::get_if<Rational>(&value_)) return Number(-*r);
    return real(-std::get<double>(value_));
}

Number operator+(const Number& a, const Number& b) {
    if (a.is_rational() && b.is_rational()) {
        if (auto r = Rational::try_add(a.rational(), b.rational())) return Number(*r);
    }
    return Number::real(a.to_double() + b.to_double());
}

Number operator*(const Number& a, const Number& b) {
    if (a.is_rational() && b.is_rational()) {
        if (auto r = Rational::try_mul(a.rational(), b.rational())) return Number(*r);
    }
    return Number::real(a.to_double() * b.to_double());
}

std::strong_ordering compare(const Number& a, const Number& b) {
    if (a.is_rational() != b.is_rational()) {
        return a.is_rational() ? std::strong_ordering::less : std::strong_ordering::greater;
    }
    if (a.is_rational()) return a.rational() <=> b.rational();
    double x = a.to_double(), y = b.to_double();
    if (x < y) return std::strong_ordering::less;
    if (x > y) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

namespace {

std::size_t hash_number(const Number& n) {
    if (n.is_rational()) {
        return std::hash<std::int64_t>{}(n.rational().num()) * 31u +
               std::hash<std::int64_t>{}(n.rational().den());
    }
    return std::hash<std::uint64_t>{}(std::bit_cast<std::uint64_t>(n.to_double())) ^ 0x9e3779b97f4a7c15ull;
}

std::size_t combine(std::size_t seed, std::size_t v) {
    return seed ^ (v + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
}

std::size_t saturating_add(std::size_t a, std::size_t b) {
    std::size_t r = a + b;
    return r < a ? std::numeric_limits<std::size_t>::max() : r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Op metadata

int arity(Op op) noexcept {
    switch (op) {
        case Op::Constant:
        case Op::Variable:
            return 0;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
        case Op::Pow:
            return 2;
        default:
            return 1;
    }
}

bool is_function(Op op) noexcept {
    return op == Op::Sin || op == Op::Cos || op == Op::Sqrt || op == Op::Exp || op == Op::Ln;
}

std::string_view function_name(Op op) {
    switch (op) {
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Sqrt: return "sqrt";
        case Op::Exp: return "exp";
        case Op::Ln: return "ln";
        default: throw std::invalid_argument("not a function op");
    }
}

namespace {

struct FunctionEntry {
    std::string_view name;
    Op op;
};

constexpr FunctionEntry kFunctions[] = {
    {"sin", Op::Sin}, {"cos", Op::Cos}, {"sqrt", Op::Sqrt}, {"exp", Op::Exp}, {"ln", Op::Ln},
};

}  // namespace

// ---------------------------------------------------------------------------
// Expr

namespace {

std::shared_ptr<const detail::Node> make_node(Op op, Number value, std::string name,
                                              std::vector<Expr> children) {
    auto n = std::make_shared<detail::Node>();
    n->op = op;
    n->value = std::move(value);
    n->name = std::move(name);
    std::size_t size = 1;
    std::size_t h = std::hash<int>{}(static_cast<int>(op));
    if (op == Op::Constant) h = combine(h, hash_number(n->value));
    if (op == Op::Variable) h = combine(h, std::hash<std::string>{}(n->name));
    for (const auto& c : children) {
        size = saturating_add(size, c.size());
        h = combine(h, c.hash());
    }
    n->children = std::move(children);
    n->size = size;
    n->hash = h;
    return n;
}

const std::shared_ptr<const detail::Node>& zero_node() {
    static const auto node = make_node(Op::Constant, Number(0), {}, {});
    return node;
}

}  // namespace

Expr::Expr() : node_(zero_node()) {}

Expr Expr::constant(Number value) {
    if (value.is_rational() && value.rational().is_zero()) return Expr();
    return Expr(make_node(Op::Constant, std::move(value), {}, {}));
}

Expr Expr::variable(std::string name) { return Expr(make_node(Op::Variable, Number(0), std::move(name), {})); }

Expr Expr::unary(Op op, Expr child) {
    if (sym::arity(op) != 1) throw std::invalid_argument("unary: op arity mismatch");
    return Expr(make_node(op, Number(0), {}, {std::move(child)}));
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
    if (sym::arity(op) != 2) throw std::invalid_argument("binary: op arity mismatch");
    return Expr(make_node(op, Number(0), {}, {std::move(lhs), std::move(rhs)}));
}

Op Expr::op() const noexcept { return node_->op; }
const Number& Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
std::size_t Expr::arity() const noexcept { return node_->children.size(); }
const Expr& Expr::child(std::size_t i) const { return node_->children.at(i); }
std::size_t Expr::size() const noexcept { return node_->size; }
std::size_t Expr::hash() const noexcept { return node_->hash; }

bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    if (a.hash() != b.hash() || a.size() != b.size() || a.op() != b.op()) return false;
    if (a.op() == Op::Constant) return a.value() == b.value();
    if (a.op() == Op::Variable) return a.name() == b.name();
    for (std::size_t i = 0; i < a.arity(); ++i) {
        if (!(a.child(i) == b.child(i))) return false;
    }
    return true;
}

std::strong_ordering compare(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return std::strong_ordering::equal;
    if (a.op() != b.op()) return a.op() <=> b.op();
    if (a.op() == Op::Constant) return compare(a.value(), b.value());
    if (a.op() == Op::Variable) return a.name() <=> b.name();
    for (std::size_t i = 0; i < a.arity(); ++i) {
        auto c = compare(a.child(i), b.child(i));
        if (c != 0) return c;
    }
    return std::strong_ordering::equal;
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(Op::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(Op::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(Op::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(Op::Div, a, b); }
Expr operator-(const Expr& a) { return Expr::unary(Op::Neg, a); }
Expr pow(const Expr& base, const Expr& exponent) { return Expr::binary(Op::Pow, base, exponent); }
Expr sin(const Expr& a) { return Expr::unary(Op::Sin, a); }
Expr cos(const Expr& a) { return Expr::unary(Op::Cos, a); }
Expr sqrt(const Expr& a) { return Expr::unary(Op::Sqrt, a); }
Expr exp(const Expr& a) { return Expr::unary(Op::Exp, a); }
Expr ln(const Expr& a) { return Expr::unary(Op::Ln, a); }
Expr num(std::int64_t n, std::int64_t d) { return Expr::constant(Number(Rational(n, d))); }
Expr var(std::string name) { return Expr::variable(std::move(name)); }

void check_cap(const Expr& e, std::size_t cap) {
    if (e.size() > cap) throw NodeCapExceeded(e.size(), cap);
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    Expr run() {
        Expr e = expr();
        skip_ws();
        if (pos_ != s_.size()) {
            throw SyntaxError(std::string("unexpected character '") + s_[pos_] + "'", pos_);
        }
        return e;
    }

private:
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            if (pos_ >= s_.size()) throw SyntaxError(std::string("expected '") + c + "' before end of input", pos_);
            throw SyntaxError(std::string("expected '") + c + "'", pos_);
        }
    }

    Expr expr() {
        Expr lhs = term();
        for (;;) {
            if (accept('+')) lhs = lhs + term();
            else if (accept('-')) lhs = lhs - term();
            else return lhs;
        }
    }

    Expr term() {
        Expr lhs = factor();
        for (;;) {
            if (accept('*')) lhs = lhs * factor();
            else if (accept('/')) lhs = lhs / factor();
            else return lhs;
        }
    }

    Expr factor() {
        if (accept('-')) return -factor();
        Expr b = base();
        if (accept('^')) return pow(b, factor());
        return b;
    }

    Expr base() {
        skip_ws();
        if (pos_ >= s_.size()) throw SyntaxError("unexpected end of input", pos_);
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
                ++pos_;
            }
            std::string name(s_.substr(start, pos_ - start));
            skip_ws();
            if (pos_ < s_.size() && s_[pos_] == '(') {
                auto it = std::find_if(std::begin(kFunctions), std::end(kFunctions),
                                       [&](const FunctionEntry& f) { return f.name == name; });
                if (it == std::end(kFunctions)) throw UnknownFunction(name, start);
                ++pos_;
                Expr arg = expr();
                expect(')');
                return Expr::unary(it->op, arg);
            }
            return var(name);
        }
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            expect(')');
            return e;
        }
        throw SyntaxError(std::string("unexpected character '") + c + "'", pos_);
    }

    Expr number() {
        std::size_t start = pos_;
        std::string digits;
        int frac = 0;
        bool seen_dot = false;
        while (pos_ < s_.size()) {
            char c = s_[pos_];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                digits += c;
                if (seen_dot) ++frac;
            } else if (c == '.' && !seen_dot) {
                seen_dot = true;
            } else {
                break;
            }
            ++pos_;
        }
        if (digits.empty()) throw SyntaxError("malformed number", start);
        long exponent = 0;
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            bool neg = false;
            if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) {
                neg = s_[p] == '-';
                ++p;
            }
            if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
                long v = 0;
                while (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
                    v = std::min<long>(v * 10 + (s_[p] - '0'), 100000);
                    ++p;
                }
                exponent = neg ? -v : v;
                pos_ = p;
            }
        }
        std::string text(s_.substr(start, pos_ - start));
        // Exact path: mantissa * 10^(exponent - frac).
        auto first = digits.find_first_not_of('0');
        std::string mant = first == std::string::npos ? "0" : digits.substr(first);
        long scale = exponent - frac;
        if (mant.size() <= 18 && scale >= -18 && scale <= 18) {
            std::int64_t m = std::stoll(mant);
            std::int64_t p10 = 1;
            for (long i = 0; i < std::labs(scale); ++i) p10 *= 10;
            if (scale >= 0) {
                if (auto r = Rational::try_mul(Rational(m), Rational(p10))) return Expr::constant(Number(*r));
            } else {
                return Expr::constant(Number(Rational(m, p10)));
            }
        }
        return Expr::constant(Number::real(std::strtod(text.c_str(), nullptr)));
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text) { return Parser(text).run(); }

// ---------------------------------------------------------------------------
// Printer

namespace {

std::string format_double(double d) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

/// Exact decimal for denominators of the form 2^a 5^b, else nullopt.
std::optional<std::string> exact_decimal(const Rational& r) {
    std::int64_t den = r.den();
    int twos = 0, fives = 0;
    while (den % 2 == 0) {
        den /= 2;
        ++twos;
    }
    while (den % 5 == 0) {
        den /= 5;
        ++fives;
    }
    if (den != 1) return std::nullopt;
    int k = std::max(twos, fives);
    auto scaled = Rational::try_mul(Rational(r.num() < 0 ? -r.num() : r.num(), r.den()),
                                    *Rational::try_pow(Rational(10), k));
    if (!scaled || !scaled->is_integer()) return std::nullopt;
    std::string digits = std::to_string(scaled->num());
    if (k == 0) return digits;
    if (static_cast<int>(digits.size()) <= k) digits.insert(0, k - digits.size() + 1, '0');
    digits.insert(digits.size() - k, ".");
    return digits;
}

std::string format_number(const Number& n) {
    bool neg = n.is_negative();
    std::string body;
    bool needs_paren = neg;
    if (n.is_rational()) {
        Rational a = neg ? -n.rational() : n.rational();
        if (auto d = exact_decimal(a)) {
            body = *d;
        } else {
            body = a.str();
            needs_paren = true;
        }
    } else {
        body = format_double(std::fabs(n.to_double()));
    }
    if (neg) body = "-" + body;
    return needs_paren ? "(" + body + ")" : body;
}

int precedence(const Expr& e) {
    switch (e.op()) {
        case Op::Add:
        case Op::Sub:
            return 1;
        case Op::Mul:
        case Op::Div:
            return 2;
        case Op::Neg:
            return 3;
        case Op::Pow:
            return 4;
        default:
            return 5;
    }
}

void print_to(std::string& out, const Expr& e);

void print_child(std::string& out, const Expr& e, int min_prec) {
    if (precedence(e) < min_prec) {
        out += '(';
        print_to(out, e);
        out += ')';
    } else {
        print_to(out, e);
    }
}

void print_to(std::string& out, const Expr& e) {
    switch (e.op()) {
        case Op::Constant:
            out += format_number(e.value());
            return;
        case Op::Variable:
            out += e.name();
            return;
        case Op::Neg:
            out += '-';
            print_child(out, e.child(0), 3);
            return;
        case Op::Add:
        case Op::Sub:
            print_child(out, e.child(0), 1);
            out += e.op() == Op::Add ? '+' : '-';
            print_child(out, e.child(1), 2);
            return;
        case Op::Mul:
        case Op::Div:
            print_child(out, e.child(0), 2);
            out += e.op() == Op::Mul ? '*' : '/';
            print_child(out, e.child(1), 3);
            return;
        case Op::Pow:
            print_child(out, e.child(0), 5);
            out += '^';
            print_child(out, e.child(1), 3);
            return;
        default:
            out += function_name(e.op());
            out += '(';
            print_to(out, e.child(0));
            out += ')';
            return;
    }
}

std::string short_print(const Expr& e) {
    std::string s = print(e);
    if (s.size() > 160) s = s.substr(0, 157) + "...";
    return s;
}

}  // namespace

std::string print(const Expr& e) {
    std::string out;
    print_to(out, e);
    return out;
}

std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << print(e); }

std::set<std::string> free_variables(const Expr& e) {
    std::set<std::string> vars;
    std::unordered_map<const void*, bool> seen;
    std::function<void(const Expr&)> walk = [&](const Expr& n) {
        if (!seen.emplace(n.id(), true).second) return;
        if (n.op() == Op::Variable) vars.insert(n.name());
        for (std::size_t i = 0; i < n.arity(); ++i) walk(n.child(i));
    };
    walk(e);
    return vars;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

bool is_integral(double v) { return std::isfinite(v) && std::floor(v) == v; }

double apply_unary(Op op, double a, const Expr& origin) {
    switch (op) {
        case Op::Neg: return -a;
        case Op::Sin: return std::sin(a);
        case Op::Cos: return std::cos(a);
        case Op::Exp: return std::exp(a);
        case Op::Sqrt:
            if (a < 0) throw DomainError("sqrt of negative value", short_print(origin));
            return std::sqrt(a);
        case Op::Ln:
            if (!(a > 0)) throw DomainError("log of non-positive value", short_print(origin));
            return std::log(a);
        default: throw std::logic_error("apply_unary: bad op");
    }
}

double apply_binary(Op op, double a, double b, const Expr& origin) {
    switch (op) {
        case Op::Add: return a + b;
        case Op::Sub: return a - b;
        case Op::Mul: return a * b;
        case Op::Div:
            if (b == 0.0) throw DomainError("division by zero", short_print(origin));
            return a / b;
        case Op::Pow:
            if (a < 0 && !is_integral(b)) {
                throw DomainError("non-integer power of negative value", short_print(origin));
            }
            if (a == 0 && b < 0) throw DomainError("division by zero", short_print(origin));
            return std::pow(a, b);
        default: throw std::logic_error("apply_binary: bad op");
    }
}

double eval(const Expr& e, const Binding& b) {
    switch (e.op()) {
        case Op::Constant: return e.value().to_double();
        case Op::Variable: {
            auto it = b.find(e.name());
            if (it == b.end()) throw UnboundVariable(e.name());
            return it->second;
        }
        default:
            break;
    }
    if (e.arity() == 1) return apply_unary(e.op(), eval(e.child(0), b), e);
    double lhs = eval(e.child(0), b);
    double rhs = eval(e.child(1), b);
    return apply_binary(e.op(), lhs, rhs, e);
}

}  // namespace

double evaluate(const Expr& e, const Binding& binding) { return eval(e, binding); }

double evaluate(const Expr& e, const std::string& var, double value) {
    return eval(e, Binding{{var, value}});
}

// ---------------------------------------------------------------------------
// Simplification

namespace {

struct Factor {
    Expr base;
    Number exponent;
};

bool is_product_family(const Expr& e) {
    switch (e.op()) {
        case Op::Mul:
        case Op::Div:
        case Op::Neg:
        case Op::Sqrt:
        case Op::Constant:
            return true;
        case Op::Pow:
            return e.child(1).is_constant();
        default:
            return false;
    }
}

bool is_sum_family(const Expr& e) { return e.op() == Op::Add || e.op() == Op::Sub || e.op() == Op::Neg; }

Expr power_expr(const Expr& base, const Number& e) {
    if (e.is_one()) return base;
    if (e.is_half()) return sqrt(base);
    return pow(base, Expr::constant(e));
}

Expr fold_mul(const std::vector<Expr>& xs) {
    if (xs.empty()) return num(1);
    Expr acc = xs.front();
    for (std::size_t i = 1; i < xs.size(); ++i) acc = acc * xs[i];
    return acc;
}

Expr build_product(const Number& coef, const std::vector<Factor>& factors) {
    if (coef.is_zero()) return Expr();
    if (factors.empty()) return Expr::constant(coef);
    std::vector<Expr> numer, denom;
    bool neg = coef.is_negative();
    Number mag = neg ? -coef : coef;
    if (mag.is_rational()) {
        const Rational& r = mag.rational();
        if (r.num() != 1) numer.push_back(Expr::constant(Number(Rational(r.num()))));
        if (r.den() != 1) denom.push_back(Expr::constant(Number(Rational(r.den()))));
    } else if (!mag.is_one()) {
        numer.push_back(Expr::constant(mag));
    }
    for (const auto& f : factors) {
        if (f.exponent.is_negative()) denom.push_back(power_expr(f.base, -f.exponent));
        else numer.push_back(power_expr(f.base, f.exponent));
    }
    Expr result = fold_mul(numer);
    if (!denom.empty()) result = result / fold_mul(denom);
    return neg ? -result : result;
}

class Canonicalizer {
public:
    Expr canon(const Expr& e) {
        if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second.second;
        Expr r = compute(e);
        memo_.emplace(e.id(), std::make_pair(e, r));
        memo_.emplace(r.id(), std::make_pair(r, r));
        return r;
    }

private:
    struct ProductAcc {
        Number coef = Number(1);
        std::map<Expr, Number, ExprLess> factors;
    };

    struct SumAcc {
        Number constant = Number(0);
        std::map<Expr, std::pair<Number, std::vector<Factor>>, ExprLess> terms;
    };

    Expr compute(const Expr& e) {
        switch (e.op()) {
            case Op::Constant:
            case Op::Variable:
                return e;
            case Op::Add:
            case Op::Sub:
            case Op::Neg: {
                SumAcc acc;
                add_to_sum(e, Number(1), acc);
                return build_sum(acc);
            }
            case Op::Mul:
            case Op::Div:
            case Op::Sqrt:
                return canon_product(e);
            case Op::Pow: {
                Expr ex = canon(e.child(1));
                if (ex.is_constant()) return canon_product(e);
                Expr b = canon(e.child(0));
                if (b.is_one()) return num(1);
                return pow(b, ex);
            }
            default:
                return canon_function(e);
        }
    }

    Expr canon_function(const Expr& e) {
        Expr a = canon(e.child(0));
        if (a.is_constant()) {
            const Number& v = a.value();
            if (v.is_zero()) {
                if (e.op() == Op::Sin) return Expr();
                if (e.op() == Op::Cos || e.op() == Op::Exp) return num(1);
            }
            if (v.is_one() && e.op() == Op::Ln) return Expr();
            if (!v.is_rational()) {
                double d = v.to_double();
                switch (e.op()) {
                    case Op::Sin: return Expr::constant(Number::real(std::sin(d)));
                    case Op::Cos: return Expr::constant(Number::real(std::cos(d)));
                    case Op::Exp: return Expr::constant(Number::real(std::exp(d)));
                    case Op::Ln:
                        if (d > 0) return Expr::constant(Number::real(std::log(d)));
                        break;
                    default: break;
                }
            }
        }
        if (e.op() == Op::Ln && a.op() == Op::Exp) return a.child(0);
        if (e.op() == Op::Exp && a.op() == Op::Ln) return a.child(0);
        return Expr::unary(e.op(), a);
    }

    Expr canon_product(const Expr& e) {
        ProductAcc acc;
        add_to_product(e, Number(1), acc);
        return finish_product(acc);
    }

    Expr finish_product(ProductAcc& acc) {
        std::vector<Factor> factors;
        fold_constant_bases(acc);
        if (acc.coef.is_zero()) return Expr();
        for (auto& [b, ex] : acc.factors) {
            if (!ex.is_zero()) factors.push_back({b, ex});
        }
        return build_product(acc.coef, factors);
    }

    // Folds constant bases whose merged exponent now admits an exact value;
    // unfoldable ones such as 0^-1 stay as factors.
    void fold_constant_bases(ProductAcc& acc) {
        for (auto it = acc.factors.begin(); it != acc.factors.end();) {
            if (it->first.is_constant()) {
                if (auto v = fold_power(it->first.value(), it->second)) {
                    acc.coef = acc.coef * *v;
                    it = acc.factors.erase(it);
                    continue;
                }
            }
            ++it;
        }
    }

    static std::optional<Number> fold_power(const Number& base, const Number& ex) {
        if (ex.is_zero()) return Number(1);
        if (base.is_rational() && ex.is_rational()) {
            const Rational& b = base.rational();
            const Rational& q = ex.rational();
            Rational root = b;
            if (!q.is_integer()) {
                auto r = Rational::try_root(b, q.den());
                if (!r) return std::nullopt;
                root = *r;
            }
            if (auto p = Rational::try_pow(root, q.num())) return Number(*p);
            if (root.is_zero()) return std::nullopt;
            return Number::real(std::pow(root.to_double(), static_cast<double>(q.num())));
        }
        double b = base.to_double(), x = ex.to_double();
        if (b == 0 && x < 0) return std::nullopt;
        if (b < 0 && !is_integral(x)) return std::nullopt;
        return Number::real(std::pow(b, x));
    }

    void add_factor(ProductAcc& acc, const Expr& base, const Number& ex) {
        auto [it, inserted] = acc.factors.emplace(base, ex);
        if (!inserted) it->second = it->second + ex;
    }

    void add_to_product(const Expr& e, const Number& ex, ProductAcc& acc) {
        bool integral = ex.is_integer();
        switch (e.op()) {
            case Op::Constant: {
                if (auto v = fold_power(e.value(), ex)) acc.coef = acc.coef * *v;
                else add_factor(acc, e, ex);
                return;
            }
            case Op::Mul:
                if (integral) {
                    add_to_product(e.child(0), ex, acc);
                    add_to_product(e.child(1), ex, acc);
                    return;
                }
                break;
            case Op::Div:
                if (integral) {
                    add_to_product(e.child(0), ex, acc);
                    add_to_product(e.child(1), -ex, acc);
                    return;
                }
                break;
            case Op::Neg:
                if (integral) {
                    if (ex.rational().num() % 2 != 0) acc.coef = -acc.coef;
                    add_to_product(e.child(0), ex, acc);
                    return;
                }
                break;
            case Op::Sqrt:
                if (integral) {
                    add_to_product(e.child(0), ex * Number(Rational(1, 2)), acc);
                    return;
                }
                break;
            case Op::Pow: {
                Expr k = canon(e.child(1));
                if (integral && k.is_constant()) {
                    add_to_product(e.child(0), ex * k.value(), acc);
                    return;
                }
                break;
            }
            default:
                break;
        }
        Expr c = canon(e);
        if (c.id() != e.id() && is_product_family(c) && integral) {
            add_to_product(c, ex, acc);
            return;
        }
        if (c.is_constant()) {
            add_to_product(c, ex, acc);
            return;
        }
        add_factor(acc, c, ex);
    }

    void add_to_sum(const Expr& e, const Number& mult, SumAcc& acc) {
        switch (e.op()) {
            case Op::Add:
                add_to_sum(e.child(0), mult, acc);
                add_to_sum(e.child(1), mult, acc);
                return;
            case Op::Sub:
                add_to_sum(e.child(0), mult, acc);
                add_to_sum(e.child(1), -mult, acc);
                return;
            case Op::Neg:
                add_to_sum(e.child(0), -mult, acc);
                return;
            default:
                break;
        }
        Expr c = canon(e);
        if (is_sum_family(c)) {
            add_to_sum(c, mult, acc);
            return;
        }
        ProductAcc p;
        add_to_product(c, Number(1), p);
        fold_constant_bases(p);
        Number coef = p.coef * mult;
        if (coef.is_zero()) return;
        std::vector<Factor> factors;
        for (auto& [b, ex] : p.factors) {
            if (!ex.is_zero()) factors.push_back({b, ex});
        }
        if (factors.empty()) {
            acc.constant = acc.constant + coef;
            return;
        }
        Expr key = build_product(Number(1), factors);
        auto [it, inserted] = acc.terms.emplace(key, std::make_pair(coef, factors));
        if (!inserted) it->second.first = it->second.first + coef;
    }

    Expr build_sum(const SumAcc& acc) {
        if (acc.terms.empty()) return Expr::constant(acc.constant);
        std::vector<std::pair<Number, Expr>> parts;  // (signed coef, |coef| * term)
        if (!acc.constant.is_zero()) {
            Number mag = acc.constant.is_negative() ? -acc.constant : acc.constant;
            parts.emplace_back(acc.constant, Expr::constant(mag));
        }
        for (const auto& [key, cf] : acc.terms) {
            const auto& [coef, factors] = cf;
            if (coef.is_zero()) continue;
            Number mag = coef.is_negative() ? -coef : coef;
            parts.emplace_back(coef, build_product(mag, factors));
        }
        if (parts.empty()) return Expr();
        Expr result = parts.front().first.is_negative() ? -parts.front().second : parts.front().second;
        for (std::size_t i = 1; i < parts.size(); ++i) {
            result = parts[i].first.is_negative() ? result - parts[i].second : result + parts[i].second;
        }
        return result;
    }

    std::unordered_map<const void*, std::pair<Expr, Expr>> memo_;
};

}  // namespace

Expr simplify(const Expr& e) {
    Canonicalizer c;
    Expr r = c.canon(e);
    return r.size() <= e.size() ? r : e;
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

// Light smart constructors used while differentiating; simplify() runs after.
Expr s_add(const Expr& a, const Expr& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    return a + b;
}

Expr s_sub(const Expr& a, const Expr& b) {
    if (b.is_zero()) return a;
    if (a.is_zero()) return -b;
    return a - b;
}

Expr s_mul(const Expr& a, const Expr& b) {
    if (a.is_zero() || b.is_zero()) return Expr();
    if (a.is_one()) return b;
    if (b.is_one()) return a;
    return a * b;
}

Expr s_div(const Expr& a, const Expr& b) {
    if (a.is_zero()) return Expr();
    if (b.is_one()) return a;
    return a / b;
}

Expr s_neg(const Expr& a) {
    if (a.is_zero()) return a;
    return -a;
}

class Differentiator {
public:
    Differentiator(std::string var, std::size_t cap) : var_(std::move(var)), cap_(cap) {}

    Expr diff(const Expr& e) {
        if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second.second;
        Expr r = compute(e);
        check_cap(r, cap_);
        memo_.emplace(e.id(), std::make_pair(e, r));
        return r;
    }

private:
    bool depends(const Expr& e) {
        if (auto it = deps_.find(e.id()); it != deps_.end()) return it->second.second;
        bool d = false;
        if (e.op() == Op::Variable) d = e.name() == var_;
        for (std::size_t i = 0; i < e.arity() && !d; ++i) d = depends(e.child(i));
        deps_.emplace(e.id(), std::make_pair(e, d));
        return d;
    }

    Expr compute(const Expr& e) {
        if (!depends(e)) return Expr();
        switch (e.op()) {
            case Op::Variable: return num(1);
            case Op::Neg: return s_neg(diff(e.child(0)));
            case Op::Add: return s_add(diff(e.child(0)), diff(e.child(1)));
            case Op::Sub: return s_sub(diff(e.child(0)), diff(e.child(1)));
            case Op::Mul: {
                const Expr& a = e.child(0);
                const Expr& b = e.child(1);
                return s_add(s_mul(diff(a), b), s_mul(a, diff(b)));
            }
            case Op::Div: {
                const Expr& a = e.child(0);
                const Expr& b = e.child(1);
                if (!depends(b)) return s_div(diff(a), b);
                return s_div(s_sub(s_mul(diff(a), b), s_mul(a, diff(b))), pow(b, num(2)));
            }
            case Op::Pow: {
                const Expr& a = e.child(0);
                const Expr& k = e.child(1);
                if (!depends(k)) {
                    Expr km1 = k.is_constant() ? Expr::constant(k.value() + Number(-1)) : k - num(1);
                    Expr p = km1.is_one() ? a : pow(a, km1);
                    return s_mul(s_mul(k, p), diff(a));
                }
                // a^k * (k' ln a + k a'/a)
                return s_mul(e, s_add(s_mul(diff(k), ln(a)), s_div(s_mul(k, diff(a)), a)));
            }
            case Op::Sin: return s_mul(cos(e.child(0)), diff(e.child(0)));
            case Op::Cos: return s_neg(s_mul(sin(e.child(0)), diff(e.child(0))));
            case Op::Sqrt: return s_div(diff(e.child(0)), s_mul(num(2), e));
            case Op::Exp: return s_mul(e, diff(e.child(0)));
            case Op::Ln: return s_div(diff(e.child(0)), e.child(0));
            default: throw std::logic_error("differentiate: unsupported node");
        }
    }

    std::string var_;
    std::size_t cap_;
    std::unordered_map<const void*, std::pair<Expr, Expr>> memo_;
    std::unordered_map<const void*, std::pair<Expr, bool>> deps_;
};

}  // namespace

Expr differentiate(const Expr& e, const std::string& var, std::size_t node_cap) {
    Differentiator d(var, node_cap);
    Expr r = simplify(d.diff(e));
    check_cap(r, node_cap);
    return r;
}

Expr differentiate_n(const Expr& e, const std::string& var, int k, std::size_t node_cap) {
    Expr r = e;
    for (int i = 0; i < k; ++i) r = differentiate(r, var, node_cap);
    return r;
}

// ---------------------------------------------------------------------------
// Substitution

Expr substitute(const Expr& e, const std::string& var, const Expr& replacement, std::size_t node_cap) {
    std::unordered_map<const void*, std::pair<Expr, Expr>> memo;
    std::function<Expr(const Expr&)> go = [&](const Expr& n) -> Expr {
        if (auto it = memo.find(n.id()); it != memo.end()) return it->second.second;
        Expr r = n;
        if (n.op() == Op::Variable) {
            if (n.name() == var) r = replacement;
        } else if (n.arity() == 1) {
            Expr c = go(n.child(0));
            if (c.id() != n.child(0).id()) r = Expr::unary(n.op(), c);
        } else if (n.arity() == 2) {
            Expr a = go(n.child(0));
            Expr b = go(n.child(1));
            if (a.id() != n.child(0).id() || b.id() != n.child(1).id()) r = Expr::binary(n.op(), a, b);
        }
        check_cap(r, node_cap);
        memo.emplace(n.id(), std::make_pair(n, r));
        return r;
    };
    return go(e);
}

// ---------------------------------------------------------------------------
// CompiledExpr

CompiledExpr::CompiledExpr(const Expr& e, std::string var) : source_(e), var_(std::move(var)) {
    std::unordered_map<const void*, std::uint32_t> slot;
    std::function<std::uint32_t(const Expr&)> emit = [&](const Expr& n) -> std::uint32_t {
        if (auto it = slot.find(n.id()); it != slot.end()) return it->second;
        Instr ins{n.op()};
        switch (n.op()) {
            case Op::Constant:
                ins.constant = n.value().to_double();
                break;
            case Op::Variable:
                if (n.name() != var_) throw UnboundVariable(n.name());
                break;
            default:
                ins.a = emit(n.child(0));
                if (n.arity() == 2) ins.b = emit(n.child(1));
                if (n.op() == Op::Pow) ins.integer_exponent = n.child(1).is_constant() && n.child(1).value().is_integer();
                break;
        }
        auto idx = static_cast<std::uint32_t>(tape_.size());
        tape_.push_back(ins);
        origin_.push_back(n);
        slot.emplace(n.id(), idx);
        return idx;
    };
    emit(e);
}

double CompiledExpr::operator()(double value) const {
    if (tape_.empty()) return 0.0;
    thread_local std::vector<double> regs;
    regs.resize(tape_.size());
    for (std::size_t i = 0; i < tape_.size(); ++i) {
        const Instr& ins = tape_[i];
        double r;
        switch (ins.op) {
            case Op::Constant: r = ins.constant; break;
            case Op::Variable: r = value; break;
            case Op::Add: r = regs[ins.a] + regs[ins.b]; break;
            case Op::Sub: r = regs[ins.a] - regs[ins.b]; break;
            case Op::Mul: r = regs[ins.a] * regs[ins.b]; break;
            case Op::Div:
                if (regs[ins.b] == 0.0) throw DomainError("division by zero", short_print(origin_[i]));
                r = regs[ins.a] / regs[ins.b];
                break;
            case Op::Pow:
                if (ins.integer_exponent) {
                    if (regs[ins.a] == 0.0 && regs[ins.b] < 0) {
                        throw DomainError("division by zero", short_print(origin_[i]));
                    }
                    r = std::pow(regs[ins.a], regs[ins.b]);
                } else {
                    r = apply_binary(Op::Pow, regs[ins.a], regs[ins.b], origin_[i]);
                }
                break;
            case Op::Neg: r = -regs[ins.a]; break;
            case Op::Sin: r = std::sin(regs[ins.a]); break;
            case Op::Cos: r = std::cos(regs[ins.a]); break;
            case Op::Exp: r = std::exp(regs[ins.a]); break;
            case Op::Sqrt:
                if (regs[ins.a] < 0) throw DomainError("sqrt of negative value", short_print(origin_[i]));
                r = std::sqrt(regs[ins.a]);
                break;
            case Op::Ln:
                if (!(regs[ins.a] > 0)) throw DomainError("log of non-positive value", short_print(origin_[i]));
                r = std::log(regs[ins.a]);
                break;
            default: throw std::logic_error("CompiledExpr: bad op");
        }
        regs[i] = r;
    }
    return regs.back();
}

}  // namespace hjadm::sym
