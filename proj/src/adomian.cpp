#include "hjadm/adomian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hjadm::adomian {

std::vector<std::vector<int>> compositions(int n, int k) {
    if (k < 1 || k > n) {
        throw std::invalid_argument("compositions: need 1 <= k <= n (n=" + std::to_string(n) +
                                    ", k=" + std::to_string(k) + ")");
    }
    std::vector<std::vector<int>> out;
    std::vector<int> parts(k, 1);
    // Depth-first in lexicographic order: part i ranges over what is left
    // after reserving 1 for each later part.
    auto rec = [&](auto&& self, int i, int remaining) -> void {
        if (i == k - 1) {
            parts[i] = remaining;
            out.push_back(parts);
            return;
        }
        for (int p = 1; p <= remaining - (k - 1 - i); ++p) {
            parts[i] = p;
            self(self, i + 1, remaining - p);
        }
    };
    rec(rec, 0, n);
    return out;
}

// ---------------------------------------------------------------------------
// AbstractPoly

void AbstractPoly::add(Monomial m, const Rational& c) {
    if (c.is_zero()) return;
    std::sort(m.indices.begin(), m.indices.end());
    auto [it, inserted] = terms_.emplace(std::move(m), c);
    if (!inserted) {
        it->second += c;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

bool AbstractPoly::is_homogeneous(int n) const {
    for (const auto& [m, c] : terms_) {
        int sum = 0;
        for (int i : m.indices) sum += i;
        if (sum != n) return false;
    }
    return true;
}

AbstractPoly AbstractPoly::truncated(int max_derivative) const {
    AbstractPoly out;
    for (const auto& [m, c] : terms_) {
        if (m.derivative <= max_derivative) out.terms_.emplace(m, c);
    }
    return out;
}

double AbstractPoly::evaluate(std::span<const double> h, std::span<const double> w) const {
    double sum = 0.0;
    for (const auto& [m, c] : terms_) {
        double term = c.to_double() * h[static_cast<std::size_t>(m.derivative)];
        for (int i : m.indices) term *= w[static_cast<std::size_t>(i)];
        sum += term;
    }
    return sum;
}

std::string AbstractPoly::str() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, c] : terms_) {
        if (!first) os << " + ";
        first = false;
        if (!c.is_one()) os << c << "*";
        os << "H" << m.derivative;
        for (std::size_t i = 0; i < m.indices.size();) {
            std::size_t j = i;
            while (j < m.indices.size() && m.indices[j] == m.indices[i]) ++j;
            os << "*w" << m.indices[i];
            if (j - i > 1) os << "^" << (j - i);
            i = j;
        }
    }
    return os.str();
}

namespace {

void check_order(int n, int max, const char* who) {
    if (n < 0 || n > max) {
        throw std::invalid_argument(std::string(who) + ": order " + std::to_string(n) + " outside [0, " +
                                    std::to_string(max) + "]");
    }
}

}  // namespace

AbstractPoly theorem1_polynomial(int n) {
    check_order(n, kMaxOrder, "theorem1_polynomial");
    AbstractPoly a;
    if (n == 0) {
        a.add({0, {}}, Rational(1));
        return a;
    }
    for (int k = 1; k <= n; ++k) {
        Rational weight = Rational(1) / factorial(k);
        for (auto& parts : compositions(n, k)) a.add({k, std::move(parts)}, weight);
    }
    return a;
}

AbstractPoly recursion_polynomial(int n) {
    check_order(n, kMaxOrder, "recursion_polynomial");
    AbstractPoly a;
    a.add({0, {}}, Rational(1));
    for (int m = 0; m < n; ++m) {
        AbstractPoly next;
        Rational norm(1, m + 1);
        for (const auto& [mono, c] : a.terms()) {
            // k = 0: d/dw_0 raises the derivative order of H, times 1 * w_1.
            {
                Monomial d{mono.derivative + 1, mono.indices};
                d.indices.push_back(1);
                next.add(std::move(d), c * norm);
            }
            // k >= 1: d/dw_k removes one w_k (with multiplicity), times (k+1) w_{k+1}.
            for (std::size_t i = 0; i < mono.indices.size();) {
                int k = mono.indices[i];
                std::size_t j = i;
                while (j < mono.indices.size() && mono.indices[j] == k) ++j;
                auto mult = static_cast<std::int64_t>(j - i);
                Monomial d{mono.derivative, mono.indices};
                d.indices.erase(d.indices.begin() + static_cast<std::ptrdiff_t>(i));
                d.indices.push_back(k + 1);
                next.add(std::move(d), c * Rational(mult * (k + 1)) * norm);
                i = j;
            }
        }
        a = std::move(next);
    }
    return a;
}

AbstractPoly oracle_polynomial(int n) {
    check_order(n, kMaxOracleOrder, "oracle_polynomial");
    // Terms c * H^(j)(psi) * prod psi^(m) for a multiset of m >= 1, held in a
    // Monomial whose indices are derivative orders of psi.
    AbstractPoly f;
    f.add({0, {}}, Rational(1));
    for (int step = 0; step < n; ++step) {
        AbstractPoly df;
        for (const auto& [mono, c] : f.terms()) {
            Monomial chain{mono.derivative + 1, mono.indices};
            chain.indices.push_back(1);
            df.add(std::move(chain), c);
            for (std::size_t i = 0; i < mono.indices.size();) {
                int m = mono.indices[i];
                std::size_t j = i;
                while (j < mono.indices.size() && mono.indices[j] == m) ++j;
                Monomial d{mono.derivative, mono.indices};
                d.indices[i] = m + 1;
                df.add(std::move(d), c * Rational(static_cast<std::int64_t>(j - i)));
                i = j;
            }
        }
        f = std::move(df);
    }
    // At lambda = 0: psi^(m)(0) = m! w_m and H^(j)(psi(0)) = H^(j)(w_0).
    AbstractPoly a;
    Rational inv_nfact = Rational(1) / factorial(n);
    for (const auto& [mono, c] : f.terms()) {
        Rational coef = c * inv_nfact;
        for (int m : mono.indices) coef = coef * factorial(m);
        a.add(mono, coef);
    }
    return a;
}

// ---------------------------------------------------------------------------
// ADMSeries

const sym::Expr& ADMSeries::coefficient(int n) const {
    static const sym::Expr zero;
    if (n < 0) throw std::out_of_range("coefficient index negative");
    if (n > order()) {
        if (finite_) return zero;
        throw std::out_of_range("coefficient " + std::to_string(n) + " not built (order " +
                                std::to_string(order()) + ")");
    }
    return coefficients_[static_cast<std::size_t>(n)];
}

const sym::Expr& ADMSeries::derivative(int n) const {
    static const sym::Expr zero;
    if (n < 0) throw std::out_of_range("derivative index negative");
    if (n > order()) {
        if (finite_) return zero;
        throw std::out_of_range("derivative " + std::to_string(n) + " not built (order " +
                                std::to_string(order()) + ")");
    }
    return derivatives_[static_cast<std::size_t>(n)];
}

double ADMSeries::coefficient_at(int n, double x) const {
    coefficient(n);
    if (n > order()) return 0.0;
    return coefficient_eval_[static_cast<std::size_t>(n)](x);
}

double ADMSeries::derivative_at(int n, double x) const {
    derivative(n);
    if (n > order()) return 0.0;
    return derivative_eval_[static_cast<std::size_t>(n)](x);
}

ADMSeries build_series(const ProblemSpec& p, int n, BuildOptions options) {
    p.validate();
    if (n < 0) throw std::invalid_argument("build_series: negative term count");
    if (n > kMaxOrder) throw std::invalid_argument("build_series: term count above maximum order");
    const std::size_t cap = p.node_cap;

    ADMSeries s;
    s.problem_ = p;
    s.hamiltonian_ = sym::CompiledExpr(p.hamiltonian, kSlopeVar);

    sym::check_cap(p.initial, cap);
    sym::Expr du0 = sym::differentiate(p.initial, kSpaceVar, cap);
    s.coefficients_.push_back(p.initial);
    s.derivatives_.push_back(du0);

    // H^(k) with v -> u0'(x), filled lazily as orders need them.
    std::vector<sym::Expr> h_at_slope;
    sym::Expr h_k = p.hamiltonian;
    auto h_derivative = [&](int k) -> const sym::Expr& {
        while (static_cast<int>(h_at_slope.size()) <= k) {
            if (!h_at_slope.empty()) h_k = sym::differentiate(h_k, kSlopeVar, cap);
            h_at_slope.push_back(sym::simplify(sym::substitute(h_k, kSlopeVar, du0, cap)));
            sym::check_cap(h_at_slope.back(), cap);
        }
        return h_at_slope[static_cast<std::size_t>(k)];
    };

    auto all_derivatives_vanish = [&] {
        for (std::size_t q = 1; q < s.derivatives_.size(); ++q) {
            if (!s.derivatives_[q].is_zero()) return false;
        }
        return s.derivatives_.size() > 1;
    };

    for (int order = 0; order < n; ++order) {
        if (all_derivatives_vanish()) {
            // Every monomial of A_m (m >= order) carries some u~'_q with q >= 1.
            s.finite_ = true;
            break;
        }
        try {
            const AbstractPoly a = theorem1_polynomial(order);
            const Rational nfact = factorial(order);
            sym::Expr sum;
            bool first = true;
            for (const auto& [mono, c] : a.terms()) {
                // Separable time integration: weight n!/(p_1!..p_k!), global sign -1.
                Rational w = -c * nfact;
                for (int q : mono.indices) w = w / factorial(q);
                sym::Expr term = sym::Expr::constant(sym::Number(w)) * h_derivative(mono.derivative);
                for (int q : mono.indices) term = term * s.derivatives_[static_cast<std::size_t>(q)];
                sum = first ? term : sum + term;
                first = false;
                sym::check_cap(sum, cap);
            }
            sym::Expr next = sym::simplify(sum);
            sym::check_cap(next, cap);
            sym::Expr dnext = sym::differentiate(next, kSpaceVar, cap);
            s.coefficients_.push_back(std::move(next));
            s.derivatives_.push_back(std::move(dnext));
        } catch (const NodeCapExceeded& e) {
            if (!options.allow_truncation) throw SeriesCapExceeded(e, order + 1);
            s.truncated_at_ = order + 1;
            break;
        }
    }
    if (!s.finite_ && !s.truncated() && all_derivatives_vanish()) s.finite_ = true;

    for (std::size_t i = 0; i < s.coefficients_.size(); ++i) {
        s.coefficient_eval_.emplace_back(s.coefficients_[i], kSpaceVar);
        s.derivative_eval_.emplace_back(s.derivatives_[i], kSpaceVar);
    }
    return s;
}

namespace {

void require_supported(const ADMSeries& s, int n) {
    if (!s.supports(n)) {
        throw std::out_of_range("series order " + std::to_string(n) + " not available (built to " +
                                std::to_string(s.order()) + ")");
    }
}

template <class F>
double with_context(int n, double x, F&& f) {
    try {
        return f();
    } catch (const DomainError& e) {
        throw DomainError("term " + std::to_string(n) + " at x=" + std::to_string(x) + ": " + e.what(),
                          e.subexpression());
    }
}

}  // namespace

double partial_sum_eval(const ADMSeries& s, int n, double x, double t) {
    require_supported(s, n);
    const int top = std::min(n, s.order());
    double sum = 0.0;
    double weight = 1.0;  // t^k / k!
    for (int k = 0; k <= top; ++k) {
        if (k > 0) weight *= t / k;
        sum += with_context(k, x, [&] { return s.coefficient_at(k, x); }) * weight;
    }
    return sum;
}

double residual(const ADMSeries& s, int n, double x, double t) {
    require_supported(s, n);
    const int top = std::min(n, s.order());
    double ut = 0.0;
    double ux = 0.0;
    double weight = 1.0;  // t^k / k!
    for (int k = 0; k <= top; ++k) {
        if (k > 0) {
            // d/dt [t^k/k!] = t^(k-1)/(k-1)!, which is the previous weight.
            ut += with_context(k, x, [&] { return s.coefficient_at(k, x); }) * weight;
            weight *= t / k;
        }
        ux += with_context(k, x, [&] { return s.derivative_at(k, x); }) * weight;
    }
    return ut + s.hamiltonian_at(ux);
}

RadiusEstimate estimate_radius(const ADMSeries& s, double x) {
    RadiusEstimate r;
    r.x = x;
    std::vector<double> values;
    for (int k = 0; k <= s.order(); ++k) values.push_back(s.coefficient_at(k, x));
    // A finite series has every later coefficient equal to zero.
    const auto nonzero = std::count_if(values.begin(), values.end(), [](double v) { return v != 0.0; });
    if (nonzero < 4 || s.finite()) {
        r.reason = s.finite() ? "finite series: coefficients vanish past order " + std::to_string(s.order())
                              : "fewer than 4 nonzero coefficients";
        r.radius = std::numeric_limits<double>::infinity();
        return r;
    }
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
        if (values[k] == 0.0) {
            r.reason = "coefficient " + std::to_string(k) + " vanishes at x";
            r.ratios.clear();
            r.radius = std::numeric_limits<double>::infinity();
            return r;
        }
        r.ratios.push_back(std::fabs(values[k + 1]) / (static_cast<double>(k + 1) * std::fabs(values[k])));
    }
    double last = r.ratios.back();
    double limit = last;
    if (r.ratios.size() >= 2) {
        double prev = r.ratios[r.ratios.size() - 2];
        limit = 0.5 * (last + prev);
        r.low_order = std::fabs(last - prev) > 1e-9 * std::max(std::fabs(last), std::fabs(prev));
    }
    r.radius = limit == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / limit;
    r.valid = true;
    return r;
}

}  // namespace hjadm::adomian
