#include "hjadm/fdsolve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hjadm/characteristics.hpp"

namespace hjadm::fd {

Grid make_grid(double x_min, double x_max, std::size_t nodes, Boundary boundary) {
    if (nodes < 3) throw ConfigError("grid needs at least 3 nodes");
    if (!(x_min < x_max)) throw ConfigError("grid needs x_min < x_max");
    return Grid{x_min, x_max, nodes, boundary};
}

Boundary default_boundary(const ProblemSpec& p) {
    try {
        double a = sym::evaluate(p.initial, kSpaceVar, p.x_min);
        double b = sym::evaluate(p.initial, kSpaceVar, p.x_max);
        return std::fabs(a - b) <= 1e-9 ? Boundary::Periodic : Boundary::Extrapolate;
    } catch (const DomainError&) {
        return Boundary::Extrapolate;
    }
}

std::vector<double> sample(const ProblemSpec& p, const Grid& grid) {
    sym::CompiledExpr u0(p.initial, kSpaceVar);
    std::vector<double> u(grid.nodes);
    for (std::size_t j = 0; j < grid.nodes; ++j) u[j] = u0(grid.x(j));
    return u;
}

const Snapshot& GridSolution::at(double t) const {
    for (const auto& s : snapshots) {
        if (s.t == t) return s;
    }
    throw std::out_of_range("no snapshot recorded at t=" + std::to_string(t));
}

namespace {

class Stepper {
public:
    Stepper(const ProblemSpec& p, const Grid& grid)
        : grid_(grid),
          h_(p.hamiltonian, kSlopeVar),
          dh_(sym::differentiate(p.hamiltonian, kSlopeVar, p.node_cap), kSlopeVar) {}

    /// max |H'| over one-sided slopes of u.
    double speed_bound(std::span<const double> u) const {
        const double dx = grid_.dx();
        double m = 0.0;
        for (std::size_t j = 0; j + 1 < u.size(); ++j) m = std::max(m, std::fabs(dh_((u[j + 1] - u[j]) / dx)));
        return m;
    }

    void step(std::span<const double> u, std::span<double> out, double dt, double alpha) const {
        const std::size_t n = u.size();
        const double dx = grid_.dx();
        const double visc = 0.5 * dt * alpha / dx;
        auto update = [&](std::size_t j, double left, double right) {
            out[j] = u[j] - dt * h_((right - left) / (2.0 * dx)) + visc * (right - 2.0 * u[j] + left);
        };
        if (grid_.boundary == Boundary::Periodic) {
            const std::size_t m = n - 1;  // distinct nodes
            for (std::size_t j = 0; j < m; ++j) update(j, u[(j + m - 1) % m], u[(j + 1) % m]);
            out[m] = out[0];
        } else {
            update(0, 2.0 * u[0] - u[1], u[1]);
            for (std::size_t j = 1; j + 1 < n; ++j) update(j, u[j - 1], u[j + 1]);
            update(n - 1, u[n - 2], 2.0 * u[n - 1] - u[n - 2]);
        }
    }

private:
    Grid grid_;
    sym::CompiledExpr h_;
    sym::CompiledExpr dh_;
};

constexpr double kCflSlack = 1e-12;

void check_cfl(double dt, double alpha, double dx) {
    if (!(dt >= 0.0)) throw CflViolation("time step must be non-negative");
    if (dt * alpha / dx > 0.5 + kCflSlack) {
        throw CflViolation("CFL violation: dt*alpha/dx = " + std::to_string(dt * alpha / dx) + " > 1/2");
    }
}

void check_finite(std::span<const double> u, std::size_t step) {
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (!std::isfinite(u[j])) {
            throw NumericalError("non-finite value at node " + std::to_string(j) + " after step " +
                                 std::to_string(step));
        }
    }
}

}  // namespace

std::vector<double> lf_step(std::span<const double> u, const ProblemSpec& p, const Grid& grid, double dt,
                            double alpha) {
    if (u.size() != grid.nodes) throw std::invalid_argument("lf_step: value count does not match grid");
    Stepper stepper(p, grid);
    check_cfl(dt, alpha, grid.dx());
    double bound = stepper.speed_bound(u);
    if (alpha < bound * (1.0 - kCflSlack)) {
        throw CflViolation("viscosity coefficient " + std::to_string(alpha) + " below max |H'| = " +
                           std::to_string(bound));
    }
    std::vector<double> out(u.size());
    stepper.step(u, out, dt, alpha);
    check_finite(out, 1);
    return out;
}

GridSolution solve(const ProblemSpec& p, const Grid& grid, double t_end, double cfl,
                   std::span<const double> snapshot_times) {
    if (!(cfl > 0.0 && cfl <= 1.0)) {
        throw CflViolation("CFL number " + std::to_string(cfl) + " outside (0, 1]");
    }
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("t_end must be a finite non-negative time");
    std::vector<double> targets(snapshot_times.begin(), snapshot_times.end());
    for (double t : targets) {
        if (!(t >= 0.0 && t <= t_end)) {
            throw ConfigError("snapshot time " + std::to_string(t) + " outside [0, t_end]");
        }
    }
    targets.push_back(t_end);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    if (!targets.empty() && targets.front() == 0.0) targets.erase(targets.begin());

    GridSolution sol;
    sol.grid = grid;
    sol.cfl = cfl;
    std::vector<double> u = sample(p, grid);
    if (grid.boundary == Boundary::Periodic && std::fabs(u.front() - u.back()) > 1e-9) {
        throw ConfigError("periodic boundary needs u0(x_min) = u0(x_max)");
    }
    if (grid.boundary == Boundary::Periodic) u.back() = u.front();
    check_finite(u, 0);
    sol.snapshots.push_back({0.0, u});

    Stepper stepper(p, grid);
    const double dx = grid.dx();
    double alpha = stepper.speed_bound(u);
    std::vector<double> next(u.size());
    double t = 0.0;
    for (double target : targets) {
        while (t < target) {
            alpha = std::max(alpha, stepper.speed_bound(u));
            double dt = alpha > 0.0 ? cfl * dx / (2.0 * alpha) : target - t;
            bool last = t + dt >= target;
            if (last) dt = target - t;
            check_cfl(dt, alpha, dx);
            stepper.step(u, next, dt, alpha);
            ++sol.steps;
            check_finite(next, sol.steps);
            u.swap(next);
            t = last ? target : t + dt;
        }
        sol.snapshots.push_back({target, u});
    }
    sol.alpha = alpha;
    return sol;
}

ComparisonReport compare(const GridSolution& sol, const adomian::ADMSeries& series, int order,
                         std::span<const double> times, std::optional<double> t_star) {
    ComparisonReport report;
    report.t_star = t_star ? *t_star : characteristics::critical_time(series.problem()).t_star;
    const Grid& g = sol.grid;
    for (double t : times) {
        const Snapshot& snap = sol.at(t);
        std::size_t first = 0, last = g.nodes;  // [first, last)
        if (g.boundary == Boundary::Periodic) {
            last = g.nodes - 1;
        } else {
            const double trim = 2.0 * t * sol.alpha;
            while (first < g.nodes && g.x(first) < g.x_min + trim) ++first;
            while (last > first && g.x(last - 1) > g.x_max - trim) --last;
        }
        if (first >= last) {
            throw NumericalError("comparison window is empty at t=" + std::to_string(t));
        }
        double sup = 0.0, sq = 0.0;
        for (std::size_t j = first; j < last; ++j) {
            double d = std::fabs(snap.u[j] - adomian::partial_sum_eval(series, order, g.x(j), t));
            sup = std::max(sup, d);
            sq += d * d;
        }
        report.rows.push_back(
            {t, order, sup, std::sqrt(sq / static_cast<double>(last - first)), t > report.t_star});
    }
    return report;
}

}  // namespace hjadm::fd
