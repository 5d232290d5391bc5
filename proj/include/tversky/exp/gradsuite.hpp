#pragma once

#include <string>

#include "tversky/core/types.hpp"

namespace tversky {

// Finite-difference verification across every (intersection, difference,
// normalize) combination, checking the pairwise contrast and the batched
// projection against all their parameters at mask-safe random points, plus
// the stock network ops.
struct GradSuiteCase {
    std::string name;
    double max_rel_err = 0;
    size_t points = 0;    // accepted sample points
    size_t checked = 0;   // coordinates compared
    size_t excluded = 0;  // coordinates skipped as mask-boundary
};

struct GradSuiteResult {
    std::vector<GradSuiteCase> cases;
    double worst = 0;
    bool passed(double tolerance) const { return worst < tolerance; }
};

GradSuiteResult run_gradcheck_suite(int points_per_combo = 100, double h = 1e-6,
                                    uint64_t seed = 12345);

}  // namespace tversky
