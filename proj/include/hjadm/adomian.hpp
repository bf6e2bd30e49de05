#pragma once

#include <compare>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hjadm/problem.hpp"
#include "hjadm/rational.hpp"
#include "hjadm/symexpr.hpp"

namespace hjadm::adomian {

/// Largest polynomial order the generators accept (n! must stay exact).
inline constexpr int kMaxOrder = 20;
/// The oracle is exponential in n and is only meant for cross-checks.
inline constexpr int kMaxOracleOrder = 8;

/// Ordered k-tuples of positive integers summing to n, lexicographic.
std::vector<std::vector<int>> compositions(int n, int k);

/// H^(k)(w_0) * w_{i_1} * ... * w_{i_m}, indices kept sorted.
struct Monomial {
    int derivative = 0;
    std::vector<int> indices;

    friend auto operator<=>(const Monomial&, const Monomial&) = default;
    friend bool operator==(const Monomial&, const Monomial&) = default;
};

/// Adomian polynomial over indeterminates w_0..w_n (standing for u'_0..u'_n)
/// with formal derivative symbols H^(k) evaluated at w_0 and exact rational
/// coefficients. Zero coefficients are never stored, so == is normalized
/// polynomial equality.
class AbstractPoly {
public:
    void add(Monomial m, const Rational& c);

    const std::map<Monomial, Rational>& terms() const noexcept { return terms_; }
    std::size_t size() const noexcept { return terms_.size(); }

    /// True when every monomial's indices sum to n.
    bool is_homogeneous(int n) const;
    /// Drops monomials whose derivative order exceeds `max_derivative`.
    AbstractPoly truncated(int max_derivative) const;

    /// Numeric value given H^(k)(w_0) for k = 0.. and w_0.. values.
    double evaluate(std::span<const double> h_derivatives, std::span<const double> w) const;

    /// e.g. "H1*w2 + 1/2*H2*w1^2".
    std::string str() const;

    friend bool operator==(const AbstractPoly&, const AbstractPoly&) = default;

private:
    std::map<Monomial, Rational> terms_;
};

/// Closed form: A_0 = H^(0), A_n = sum_k 1/k! sum_{p_1+..+p_k=n} H^(k) w_{p_1}..w_{p_k}.
AbstractPoly theorem1_polynomial(int n);

/// A_0 = H^(0), A_{m+1} = 1/(m+1) sum_{k=0}^{m} (k+1) w_{k+1} dA_m/dw_k, where
/// d/dw_0 acts on H^(j) as H^(j+1).
AbstractPoly recursion_polynomial(int n);

/// (1/n!) d^n/dlambda^n H(sum_{i=0}^n lambda^i w_i) at lambda = 0, by repeated
/// formal differentiation in lambda (Faa di Bruno, term by term).
AbstractPoly oracle_polynomial(int n);

/// The node cap was hit while building coefficient `order`.
class SeriesCapExceeded : public NodeCapExceeded {
public:
    SeriesCapExceeded(const NodeCapExceeded& cause, int order)
        : NodeCapExceeded(cause), order_(order) {}
    int order() const noexcept { return order_; }
    const char* what() const noexcept override { return message_.c_str(); }

private:
    int order_;
    std::string message_ = "node cap exceeded while building series term " + std::to_string(order_) +
                           ": " + NodeCapExceeded::what();
};

struct BuildOptions {
    /// On node-cap overflow, keep the terms below the failing order instead of throwing.
    bool allow_truncation = false;
};

/// u(x, t) ~ sum_n u~_n(x) t^n / n! with u~_0 = u0 and
/// u~_{n+1} = -sum over the monomials of A_n of weight * H^(k)(u0') * prod u~'_p.
class ADMSeries {
public:
    const ProblemSpec& problem() const noexcept { return problem_; }
    /// Highest stored coefficient index.
    int order() const noexcept { return static_cast<int>(coefficients_.size()) - 1; }
    /// Every coefficient past order() is identically zero.
    bool finite() const noexcept { return finite_; }
    /// Construction stopped at `truncated_at()` because of the node cap.
    bool truncated() const noexcept { return truncated_at_ >= 0; }
    int truncated_at() const noexcept { return truncated_at_; }

    /// u~_n; for a finite series, zero past order().
    const sym::Expr& coefficient(int n) const;
    /// d/dx u~_n.
    const sym::Expr& derivative(int n) const;
    double coefficient_at(int n, double x) const;
    double derivative_at(int n, double x) const;
    double hamiltonian_at(double v) const { return hamiltonian_(v); }

    /// Largest N accepted by partial_sum_eval / residual.
    bool supports(int n) const noexcept { return n >= 0 && (finite_ || n <= order()); }

private:
    friend ADMSeries build_series(const ProblemSpec& p, int n, BuildOptions options);

    ProblemSpec problem_;
    std::vector<sym::Expr> coefficients_;
    std::vector<sym::Expr> derivatives_;
    std::vector<sym::CompiledExpr> coefficient_eval_;
    std::vector<sym::CompiledExpr> derivative_eval_;
    sym::CompiledExpr hamiltonian_;
    bool finite_ = false;
    int truncated_at_ = -1;
};

ADMSeries build_series(const ProblemSpec& p, int n, BuildOptions options = {});
inline ADMSeries build_series(const ProblemSpec& p) { return build_series(p, p.terms); }

/// sum_{n=0}^{N} u~_n(x) t^n / n!, summed left to right.
double partial_sum_eval(const ADMSeries& s, int n, double x, double t);

/// d_t u_N + H(d_x u_N) at (x, t).
double residual(const ADMSeries& s, int n, double x, double t);

struct RadiusEstimate {
    double x = 0.0;
    /// rho_n = |u~_{n+1}(x)| / ((n+1) |u~_n(x)|), n = 0..
    std::vector<double> ratios;
    /// 1 / rho_limit; meaningful only when valid.
    double radius = 0.0;
    bool valid = false;
    /// The last two ratios disagree, so the limit is a low-order extrapolation.
    bool low_order = true;
    std::string reason;
};

/// Ratio-test estimate of the time radius of convergence at x. Fewer than
/// four nonzero coefficients, or a vanishing coefficient inside the ratio
/// chain, yields an invalid estimate rather than an error.
RadiusEstimate estimate_radius(const ADMSeries& s, double x);

}  // namespace hjadm::adomian
