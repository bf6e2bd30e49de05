#include "hjadm/characteristics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hjadm::characteristics {

CharFan::CharFan(std::vector<CharLine> lines) : lines_(std::move(lines)) {
    for (std::size_t i = 0; i < lines_.size(); ++i) {
        if (!std::isfinite(lines_[i].foot) || !std::isfinite(lines_[i].speed)) {
            throw NumericalError("characteristic line " + std::to_string(i) + " is not finite");
        }
        if (i > 0 && !(lines_[i - 1].foot < lines_[i].foot)) {
            throw std::invalid_argument("characteristic feet must be strictly increasing");
        }
    }
}

namespace {

sym::Expr slope_of_initial(const ProblemSpec& p) {
    return sym::differentiate(p.initial, kSpaceVar, p.node_cap);
}

}  // namespace

SpeedField::SpeedField(const ProblemSpec& p) {
    sym::Expr dh = sym::differentiate(p.hamiltonian, kSlopeVar, p.node_cap);
    sym::Expr du0 = slope_of_initial(p);
    dh_ = sym::CompiledExpr(dh, kSlopeVar);
    du0_ = sym::CompiledExpr(du0, kSpaceVar);
    gradient_ = sym::differentiate(sym::substitute(dh, kSlopeVar, du0, p.node_cap), kSpaceVar, p.node_cap);
    gradient_eval_ = sym::CompiledExpr(gradient_, kSpaceVar);
}

double char_speed(const ProblemSpec& p, double x0) {
    sym::Expr dh = sym::differentiate(p.hamiltonian, kSlopeVar, p.node_cap);
    double v0 = sym::evaluate(slope_of_initial(p), kSpaceVar, x0);
    return sym::evaluate(dh, kSlopeVar, v0);
}

CharFan make_fan(const ProblemSpec& p, std::span<const double> feet) {
    SpeedField speed(p);
    std::vector<CharLine> lines;
    lines.reserve(feet.size());
    for (double x : feet) lines.push_back({x, speed(x)});
    return CharFan(std::move(lines));
}

CharFan make_fan(const ProblemSpec& p, std::size_t count) {
    if (count < 2) throw std::invalid_argument("make_fan: need at least two lines");
    std::vector<double> feet(count);
    const double step = (p.x_max - p.x_min) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) feet[i] = p.x_min + step * static_cast<double>(i);
    feet.back() = p.x_max;
    return make_fan(p, feet);
}

std::optional<double> pairwise_crossing(const CharLine& l1, const CharLine& l2) {
    if (!(l1.speed > l2.speed)) return std::nullopt;
    return (l2.foot - l1.foot) / (l1.speed - l2.speed);
}

std::optional<double> first_crossing(const CharFan& fan) {
    if (fan.size() < 2) throw std::invalid_argument("first_crossing: fan needs at least two lines");
    std::optional<double> best;
    auto lines = fan.lines();
    for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
        if (auto t = pairwise_crossing(lines[i], lines[i + 1]); t && (!best || *t < *best)) best = t;
    }
    return best;
}

CriticalTimeResult critical_time(const ProblemSpec& p, const CriticalTimeOptions& options) {
    if (options.scan_points < 3) throw std::invalid_argument("critical_time: need at least 3 scan points");
    SpeedField field(p);
    const std::size_t n = options.scan_points;
    const double step = (p.x_max - p.x_min) / static_cast<double>(n - 1);

    CriticalTimeResult result;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double x = i + 1 == n ? p.x_max : p.x_min + step * static_cast<double>(i);
        double g;
        try {
            g = field.gradient_at(x);
        } catch (const DomainError&) {
            ++result.skipped_points;
            continue;
        }
        if (!std::isfinite(g)) {
            ++result.skipped_points;
            continue;
        }
        // Strict < keeps the leftmost minimiser on plateaus.
        if (g < best) {
            best = g;
            best_i = i;
        }
    }
    if (2 * result.skipped_points > n) {
        throw NumericalError("critical_time: " + std::to_string(result.skipped_points) + " of " +
                             std::to_string(n) + " scan points could not be evaluated");
    }

    // Golden-section refinement on the bracket around the best scan point.
    auto safe = [&](double x) {
        try {
            double g = field.gradient_at(x);
            return std::isfinite(g) ? g : std::numeric_limits<double>::infinity();
        } catch (const DomainError&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    double lo = best_i == 0 ? p.x_min : p.x_min + step * static_cast<double>(best_i - 1);
    double hi = best_i + 1 >= n ? p.x_max : p.x_min + step * static_cast<double>(best_i + 1);
    double x_best = best_i + 1 == n ? p.x_max : p.x_min + step * static_cast<double>(best_i);
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - ratio * (b - a), d = a + ratio * (b - a);
    double fc = safe(c), fd = safe(d);
    while (b - a > options.x_tolerance) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = safe(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = safe(d);
        }
    }
    double x_ref = 0.5 * (a + b);
    double g_ref = safe(x_ref);
    if (g_ref < best) {
        best = g_ref;
        x_best = x_ref;
    }

    result.x_star = x_best;
    result.minimum = best;
    if (best >= -options.infinite_threshold) {
        result.kind = CriticalTimeResult::Kind::Infinite;
        result.t_star = std::numeric_limits<double>::infinity();
    } else {
        result.kind = CriticalTimeResult::Kind::Finite;
        result.t_star = -1.0 / best;
    }
    if (x_best - p.x_min <= step || p.x_max - x_best <= step) {
        result.warnings.push_back("minimiser lies within one scan step of the domain boundary; the "
                                  "infimum over the real line may be smaller");
    }
    return result;
}

}  // namespace hjadm::characteristics
