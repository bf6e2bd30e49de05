#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hjadm/characteristics.hpp"
#include "hjadm/fdsolve.hpp"

using namespace hjadm;
using namespace hjadm::fd;

namespace {

constexpr double kPi = std::numbers::pi;

ProblemSpec eikonal_sin() { return ProblemSpec::from_strings("-sqrt(1+v^2)", "sin(x)", 0, 2 * kPi, 4); }

}  // namespace

TEST_CASE("lf_step: affine and constant data") {
    auto p = ProblemSpec::from_strings("-sqrt(1+v^2)", "3*x+1", -1, 1);
    Grid g = make_grid(-1, 1, 41, Boundary::Extrapolate);
    auto u = sample(p, g);
    const double dt = 0.01, alpha = 1.0;
    auto next = lf_step(u, p, g, dt, alpha);
    for (std::size_t j = 0; j < g.nodes; ++j) {
        CHECK(next[j] == doctest::Approx(3 * g.x(j) + 1 + dt * std::sqrt(10.0)).epsilon(1e-15));
    }

    auto c = ProblemSpec::from_strings("v^2+2", "5", 0, 1);
    Grid gc = make_grid(0, 1, 11, Boundary::Periodic);
    for (double value : lf_step(sample(c, gc), c, gc, 0.01, 0.5)) CHECK(value == doctest::Approx(5 - 0.02));
}

TEST_CASE("lf_step: one small step is consistent with u_t = -H(u_x)") {
    auto p = eikonal_sin();
    Grid g = make_grid(p.x_min, p.x_max, 1001, Boundary::Periodic);
    auto u = sample(p, g);
    const double dt = 1e-4;
    auto next = lf_step(u, p, g, dt, 1.0);
    double worst = 0;
    for (std::size_t j = 0; j < g.nodes; ++j) {
        double x = g.x(j);
        worst = std::max(worst, std::fabs(next[j] - (std::sin(x) + dt * std::sqrt(1 + std::cos(x) * std::cos(x)))));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("lf_step rejects unstable parameters") {
    auto p = eikonal_sin();
    Grid g = make_grid(p.x_min, p.x_max, 101, Boundary::Periodic);
    auto u = sample(p, g);
    CHECK_THROWS_AS(lf_step(u, p, g, g.dx(), 1.0), CflViolation);    // dt alpha / dx = 1
    CHECK_THROWS_AS(lf_step(u, p, g, 1e-4, 0.1), CflViolation);     // alpha below max |H'|
    CHECK_THROWS_AS(lf_step(std::vector<double>(3), p, g, 1e-4, 1.0), std::invalid_argument);
}

TEST_CASE("solve: snapshots, t_end = 0 and argument checks") {
    auto p = eikonal_sin();
    Grid g = make_grid(p.x_min, p.x_max, 201, Boundary::Periodic);
    auto zero = solve(p, g, 0.0, 0.5);
    REQUIRE(zero.snapshots.size() == 1);
    // Periodic mode copies the first node onto its duplicate at x_max.
    auto u0 = sample(p, g);
    u0.back() = u0.front();
    CHECK(zero.snapshots[0].u == u0);
    CHECK(zero.steps == 0);

    std::vector<double> times = {0.3, 0.0, 0.1, 0.3};
    auto sol = solve(p, g, 0.5, 0.5, times);
    std::vector<double> stamps;
    for (const auto& s : sol.snapshots) stamps.push_back(s.t);
    CHECK(stamps == std::vector<double>{0.0, 0.1, 0.3, 0.5});
    CHECK(sol.at(0.1).t == 0.1);
    CHECK_THROWS_AS(sol.at(0.2), std::out_of_range);

    CHECK_THROWS_AS(solve(p, g, 1.0, 10.0), CflViolation);
    CHECK_THROWS_AS(solve(p, g, 1.0, 0.0), CflViolation);
    std::vector<double> late = {2.0};
    CHECK_THROWS_AS(solve(p, g, 1.0, 0.5, late), ConfigError);

    auto b = ProblemSpec::from_strings("v^2/2", "x", 0, 1);
    CHECK_THROWS_AS(solve(b, make_grid(0, 1, 11, Boundary::Periodic), 0.1, 0.5), ConfigError);
    CHECK_THROWS_AS(make_grid(0, 1, 2, Boundary::Periodic), ConfigError);
    CHECK_THROWS_AS(make_grid(1, 1, 5, Boundary::Periodic), ConfigError);
}

TEST_CASE("solve: linear data is evolved exactly") {
    auto p = ProblemSpec::from_strings("-sqrt(1+v^2)", "3*x+1", -1, 1);
    Grid g = make_grid(-1, 1, 401, Boundary::Extrapolate);
    auto sol = solve(p, g, 1.0, 0.5, std::vector<double>{0.5});
    for (const auto& s : sol.snapshots) {
        for (std::size_t j = 0; j < g.nodes; ++j) {
            CHECK(std::fabs(s.u[j] - (3 * g.x(j) + 1 + s.t * std::sqrt(10.0))) <= 1e-10);
        }
    }
}

TEST_CASE("solve: affine data stays exact over ten thousand steps") {
    auto p = ProblemSpec::from_strings("v^2/2", "x-1/3", -1, 1);
    Grid g = make_grid(-1, 1, 201, Boundary::Extrapolate);
    const double dt = 0.5 * g.dx() / 2.0;  // alpha = |H'(1)| = 1
    auto sol = solve(p, g, 10'000 * dt, 0.5);
    CHECK(sol.steps >= 10'000);
    const auto& last = sol.snapshots.back();
    double worst = 0;
    for (std::size_t j = 0; j < g.nodes; ++j) worst = std::max(worst, std::fabs(last.u[j] - (g.x(j) - 1.0 / 3 - last.t / 2)));
    CHECK(worst <= 1e-10);
}

TEST_CASE("solve: the solution stays inside the transport band") {
    auto p = eikonal_sin();
    Grid g = make_grid(p.x_min, p.x_max, 1001, Boundary::Periodic);
    std::vector<double> times = {0.25, 0.5, 1.0, 1.5, 2.5};
    auto sol = solve(p, g, 2.5, 0.5, times);
    auto u0 = sol.snapshots.front().u;
    const double lo0 = *std::min_element(u0.begin(), u0.end());
    const double hi0 = *std::max_element(u0.begin(), u0.end());
    double h_min = INFINITY, h_max = -INFINITY;
    for (const auto& s : sol.snapshots) {
        for (std::size_t j = 0; j + 1 < g.nodes; ++j) {
            double v = (s.u[j + 1] - s.u[j]) / g.dx();
            double h = -std::sqrt(1 + v * v);
            h_min = std::min(h_min, h);
            h_max = std::max(h_max, h);
        }
    }
    for (const auto& s : sol.snapshots) {
        for (double value : s.u) {
            CHECK(value >= lo0 - s.t * h_max - 1e-12);
            CHECK(value <= hi0 - s.t * h_min + 1e-12);
        }
    }
}

TEST_CASE("solve: Burgers error shrinks under refinement inside the dependence window") {
    auto p = ProblemSpec::from_strings("v^2/2", "-x^2", -2, 2);
    auto exact = [](double x, double t) { return -x * x / (1 - 2 * t); };
    std::vector<double> err;
    for (std::size_t nodes : {501, 1001, 2001}) {
        Grid g = make_grid(-2, 2, nodes, Boundary::Extrapolate);
        auto sol = solve(p, g, 0.4, 0.5);
        const auto& s = sol.snapshots.back();
        double m = 0;
        for (std::size_t j = 0; j < g.nodes; ++j) {
            if (std::fabs(g.x(j)) <= 0.4) m = std::max(m, std::fabs(s.u[j] - exact(g.x(j), s.t)));
        }
        err.push_back(m);
    }
    CHECK(err[1] < err[0]);
    CHECK(err[2] < err[1]);
    CHECK(err[0] / err[1] >= 1.5);
}

TEST_CASE("solve: first-order convergence on the sin case") {
    auto p = eikonal_sin();
    std::vector<double> times = {0.5};
    auto reference = solve(p, make_grid(p.x_min, p.x_max, 8001, Boundary::Periodic), 0.5, 0.5, times);
    auto error = [&](std::size_t nodes) {
        Grid g = make_grid(p.x_min, p.x_max, nodes, Boundary::Periodic);
        auto sol = solve(p, g, 0.5, 0.5, times);
        const std::size_t stride = 8000 / (nodes - 1);
        double m = 0;
        for (std::size_t j = 0; j < nodes; ++j) {
            m = std::max(m, std::fabs(sol.at(0.5).u[j] - reference.at(0.5).u[j * stride]));
        }
        return m;
    };
    double factor = error(501) / error(1001);
    CHECK(factor >= 1.7);
    CHECK(factor <= 2.3);
}

TEST_CASE("compare: zero at t = 0 and growth past T*") {
    auto p = eikonal_sin();
    auto series = adomian::build_series(p, 4);
    Grid g = make_grid(p.x_min, p.x_max, 1001, Boundary::Periodic);
    std::vector<double> times = {0.0, 0.5, 2.0, 2.5};
    auto sol = solve(p, g, 2.5, 0.5, times);
    auto report = compare(sol, series, 4, times);
    REQUIRE(report.rows.size() == 4);
    CHECK(report.t_star == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(report.rows[0].sup_diff <= 1e-12);
    CHECK(report.rows[0].rms_diff <= report.rows[0].sup_diff);
    CHECK(report.rows[1].sup_diff <= 5e-2);
    CHECK_FALSE(report.rows[1].past_critical);
    CHECK(report.rows[3].past_critical);
    CHECK(report.rows[3].sup_diff >= 5 * report.rows[1].sup_diff);
    CHECK(report.rows[2].sup_diff >= 5 * report.rows[1].sup_diff);
}

TEST_CASE("compare: the non-periodic window excludes boundary-influenced nodes") {
    auto p = ProblemSpec::from_strings("-sqrt(1+v^2)", "3*x+1", -5, 5, 3);
    auto series = adomian::build_series(p);
    Grid g = make_grid(-5, 5, 201, Boundary::Extrapolate);
    std::vector<double> times = {0.0, 1.0};
    auto sol = solve(p, g, 1.0, 0.5, times);
    auto report = compare(sol, series, 3, times);
    for (const auto& row : report.rows) CHECK(row.sup_diff <= 1e-12);
    CHECK(std::isinf(report.t_star));

    std::vector<double> too_late = {4.0};
    auto long_run = solve(p, g, 4.0, 0.5, too_late);
    CHECK_THROWS_AS(compare(long_run, series, 3, too_late), NumericalError);
}
