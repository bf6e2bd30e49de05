#pragma once

#include <cstddef>
#include <string>

#include "hjadm/symexpr.hpp"

namespace hjadm {

/// Name of the spatial variable in initial data and series coefficients.
inline const std::string kSpaceVar = "x";
/// Name of the slope variable the Hamiltonian is written in.
inline const std::string kSlopeVar = "v";

/// u_t + H(u_x) = 0 on [x_min, x_max] with u(x, 0) = u0(x).
struct ProblemSpec {
    sym::Expr hamiltonian;  // in v
    sym::Expr initial;      // in x
    double x_min = -1.0;
    double x_max = 1.0;
    int terms = 4;
    std::size_t node_cap = sym::kDefaultNodeCap;

    /// Throws ConfigError when H or u0 uses a foreign variable, the domain is
    /// degenerate, or the term count is negative.
    void validate() const;

    static ProblemSpec from_strings(const std::string& hamiltonian, const std::string& initial,
                                    double x_min, double x_max, int terms = 4,
                                    std::size_t node_cap = sym::kDefaultNodeCap);
};

}  // namespace hjadm
