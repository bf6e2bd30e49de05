#include "hjadm/problem.hpp"

#include <cmath>

namespace hjadm {
namespace {

void require_only(const sym::Expr& e, const std::string& allowed, const char* what) {
    for (const auto& v : sym::free_variables(e)) {
        if (v != allowed) {
            throw ConfigError(std::string(what) + " uses unknown variable " + v + " (only " + allowed +
                              " is allowed)");
        }
    }
}

}  // namespace

void ProblemSpec::validate() const {
    require_only(hamiltonian, kSlopeVar, "hamiltonian");
    require_only(initial, kSpaceVar, "u0");
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_min < x_max)) {
        throw ConfigError("domain must satisfy x_min < x_max");
    }
    if (terms < 0) throw ConfigError("term count must be non-negative");
    if (node_cap == 0) throw ConfigError("node cap must be positive");
}

ProblemSpec ProblemSpec::from_strings(const std::string& hamiltonian, const std::string& initial,
                                      double x_min, double x_max, int terms, std::size_t node_cap) {
    ProblemSpec p{sym::parse(hamiltonian), sym::parse(initial), x_min, x_max, terms, node_cap};
    p.validate();
    return p;
}

}  // namespace hjadm
