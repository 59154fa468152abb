#pragma once

#include <algorithm>
#include <stdexcept>

#include "extremal/radial_solver.hpp"

namespace extremal {

struct ComparisonResult {
    bool ok = true;
    double max_violation = 0.0;
};

/// Checks v <= u <= (lambda/gamma) v nodewise for a solution with
/// lambda >= gamma > 0. max_violation is the largest amount by which either
/// inequality fails (0 when both hold); ok compares it against `tolerance`.
inline ComparisonResult check_comparison(const SolutionPair& sol, double tolerance = 0.0) {
    if (!(sol.gamma > 0.0) || sol.lambda < sol.gamma)
        throw std::invalid_argument("check_comparison requires lambda >= gamma > 0");
    const double ratio = sol.lambda / sol.gamma;
    double worst = 0.0;
    for (std::size_t i = 0; i < sol.u.size(); ++i) {
        worst = std::max(worst, sol.v[i] - sol.u[i]);
        worst = std::max(worst, sol.u[i] - ratio * sol.v[i]);
    }
    return {worst <= tolerance, worst};
}

}  // namespace extremal
