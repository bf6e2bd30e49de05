#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hjadm/adomian.hpp"
#include "hjadm/problem.hpp"

namespace hjadm::fd {

enum class Boundary {
    Periodic,
    /// Ghost values continue the boundary slope linearly.
    Extrapolate,
};

/// Uniform grid including both endpoints. In periodic mode the last node
/// duplicates the first.
struct Grid {
    double x_min = 0.0;
    double x_max = 1.0;
    std::size_t nodes = 3;
    Boundary boundary = Boundary::Extrapolate;

    double dx() const noexcept { return (x_max - x_min) / static_cast<double>(nodes - 1); }
    double x(std::size_t j) const noexcept {
        return j + 1 == nodes ? x_max : x_min + dx() * static_cast<double>(j);
    }
};

/// Throws ConfigError for fewer than 3 nodes or an empty interval.
Grid make_grid(double x_min, double x_max, std::size_t nodes, Boundary boundary);

/// Periodic when u0 matches at both ends to 1e-9, linear extrapolation otherwise.
Boundary default_boundary(const ProblemSpec& p);

std::vector<double> sample(const ProblemSpec& p, const Grid& grid);

struct Snapshot {
    double t = 0.0;
    std::vector<double> u;
};

struct GridSolution {
    Grid grid;
    /// Strictly increasing times starting at 0; the first entry is sampled u0.
    std::vector<Snapshot> snapshots;
    double cfl = 0.0;
    /// Final artificial-viscosity coefficient (never below its initial value).
    double alpha = 0.0;
    std::size_t steps = 0;

    /// Snapshot recorded at exactly t; throws std::out_of_range otherwise.
    const Snapshot& at(double t) const;
};

/// One Lax-Friedrichs step
///   u_j - dt H((u_{j+1} - u_{j-1}) / 2dx) + (dt alpha / 2) (u_{j+1} - 2u_j + u_{j-1}) / dx.
/// Requires dt alpha / dx <= 1/2 and alpha >= |H'| over the realised
/// one-sided slopes; violations throw CflViolation.
std::vector<double> lf_step(std::span<const double> u, const ProblemSpec& p, const Grid& grid, double dt,
                            double alpha);

/// Marches lf_step from u0 to t_end with dt = cfl dx / (2 alpha), landing
/// exactly on every requested snapshot time (t_end is always recorded).
GridSolution solve(const ProblemSpec& p, const Grid& grid, double t_end, double cfl,
                   std::span<const double> snapshot_times = {});

struct ComparisonRow {
    double t = 0.0;
    int order = 0;
    double sup_diff = 0.0;
    double rms_diff = 0.0;
    bool past_critical = false;
};

struct ComparisonReport {
    double t_star = 0.0;
    std::vector<ComparisonRow> rows;
};

/// Sup and RMS of |grid - partial sum of order N| per requested time over the
/// interior nodes: all distinct nodes when periodic, otherwise the window left
/// after trimming 2 t alpha from each end. T* defaults to critical_time().
ComparisonReport compare(const GridSolution& sol, const adomian::ADMSeries& series, int order,
                         std::span<const double> times, std::optional<double> t_star = std::nullopt);

}  // namespace hjadm::fd
