#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hjadm/problem.hpp"
#include "hjadm/symexpr.hpp"

namespace hjadm::characteristics {

/// x(t) = foot + speed * t, along which v = u_x keeps its initial value.
struct CharLine {
    double foot = 0.0;
    double speed = 0.0;

    double position(double t) const noexcept { return foot + speed * t; }
};

/// Lines with strictly increasing feet.
class CharFan {
public:
    explicit CharFan(std::vector<CharLine> lines);

    std::span<const CharLine> lines() const noexcept { return lines_; }
    std::size_t size() const noexcept { return lines_.size(); }

private:
    std::vector<CharLine> lines_;
};

/// x -> H'(u0'(x)), compiled once for dense sampling.
class SpeedField {
public:
    explicit SpeedField(const ProblemSpec& p);

    double operator()(double x) const { return dh_(du0_(x)); }
    /// (H' o u0')' as a symbolic expression in x.
    const sym::Expr& gradient() const noexcept { return gradient_; }
    double gradient_at(double x) const { return gradient_eval_(x); }

private:
    sym::CompiledExpr dh_;
    sym::CompiledExpr du0_;
    sym::Expr gradient_;
    sym::CompiledExpr gradient_eval_;
};

/// a(v0(x0)) = H'(u0'(x0)).
double char_speed(const ProblemSpec& p, double x0);

/// `count` equispaced feet covering [x_min, x_max] inclusive.
CharFan make_fan(const ProblemSpec& p, std::size_t count);
CharFan make_fan(const ProblemSpec& p, std::span<const double> feet);

/// Forward-time intersection of two lines with l1.foot < l2.foot.
std::optional<double> pairwise_crossing(const CharLine& l1, const CharLine& l2);

/// Earliest crossing over adjacent pairs of the fan; none if all diverge.
std::optional<double> first_crossing(const CharFan& fan);

struct CriticalTimeResult {
    enum class Kind { Finite, Infinite };

    Kind kind = Kind::Infinite;
    /// +inf when infinite.
    double t_star = 0.0;
    double x_star = 0.0;
    /// min over the domain of (H' o u0')'.
    double minimum = 0.0;
    std::size_t skipped_points = 0;
    std::vector<std::string> warnings;

    bool finite() const noexcept { return kind == Kind::Finite; }
};

struct CriticalTimeOptions {
    std::size_t scan_points = 10'000;
    double x_tolerance = 1e-10;
    double infinite_threshold = 1e-12;
};

/// T* = -1 / min_x (H' o u0')'(x) over the problem domain: dense scan, then
/// golden-section refinement around the best scan point.
CriticalTimeResult critical_time(const ProblemSpec& p, const CriticalTimeOptions& options = {});

}  // namespace hjadm::characteristics
