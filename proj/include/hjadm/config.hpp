#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "hjadm/problem.hpp"

namespace hjadm::cli {

/// Everything one run needs; one file drives every subcommand.
struct RunConfig {
    struct Problem {
        std::string hamiltonian;
        std::string u0;
        double x_min = 0.0;
        double x_max = 0.0;
    } problem;

    struct Adm {
        int terms = 4;
        std::size_t node_cap = sym::kDefaultNodeCap;
        /// Where `radius` evaluates the ratio test; empty means 5 interior points.
        std::vector<double> radius_points;
    } adm;

    struct Characteristics {
        std::size_t fan_size = 10'001;
        std::size_t scan_points = 10'000;
    } characteristics;

    struct Fd {
        std::size_t nodes = 1001;
        double cfl = 0.5;
        /// auto | periodic | extrapolate
        std::string boundary = "auto";
        double t_end = 1.0;
        /// Defaults to {0, t_end}.
        std::vector<double> snapshot_times;
    } fd;

    struct Outputs {
        std::string directory = "out";
        /// csv | json
        std::string format = "csv";
    } outputs;

    ProblemSpec problem_spec() const;
};

/// Parses the INI-style config:
///
///     [problem]
///     hamiltonian = "v^2/2"
///     u0 = "-x^2"
///     x_min = -5
///     x_max = 2*pi
///
/// Numeric values accept constant expressions in the expression grammar with
/// `pi` bound. Lists are comma separated inside one quoted string. Throws
/// ConfigError naming the line (syntax) or the key (validation).
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace hjadm::cli
