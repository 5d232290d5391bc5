#pragma once

#include <functional>

#include "tversky/exp/constructed.hpp"

namespace tversky {

// Deterministic class map over a planar input range (grid-evaluated rather
// than randomly sampled, so re-runs are identical). Cell centres follow the
// linspace convention: endpoints included for resolution > 1, the midpoint
// for resolution 1.
struct BoundaryGrid {
    double xmin = -2, xmax = 2, ymin = -2, ymax = 2;
    int resolution = 0;
    int64_t classes = 0;
    std::vector<double> xs, ys;       // cell centre coordinates
    std::vector<int64_t> cls;         // [resolution * resolution], row-major by y then x
    std::vector<double> scores;       // per-cell class scores, row-major, classes per cell
};

using PlaneScorer = std::function<std::vector<double>(double x, double y)>;

BoundaryGrid decision_boundary_grid(const PlaneScorer& scorer, int64_t class_count,
                                    double xmin = -2, double xmax = 2, double ymin = -2,
                                    double ymax = 2, int resolution = 41);

// Scorer over a 2-d-input projection layer; throws for other input widths.
PlaneScorer plane_scorer(const TverskyProjectionLayer<double>& layer);
PlaneScorer plane_scorer(const ConstructedModel& model);

}  // namespace tversky
