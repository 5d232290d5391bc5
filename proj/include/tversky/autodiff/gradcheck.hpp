#pragma once

#include <functional>

#include "tversky/autodiff/graph.hpp"

namespace tversky {

// Central finite differences against the tape's analytic gradient.
//
// Coordinates whose perturbed forward passes make different indicator
// decisions than the centre pass (detected through the graph mask hash) are
// mask-boundary coordinates: they are excluded from the error and reported.
struct GradCheckReport {
    double max_rel_err = 0.0;
    double value = 0.0;                 // f at the centre point
    std::vector<double> per_coord;      // rel. err per flat coordinate; -1 for excluded
    std::vector<size_t> excluded;       // flat coordinate indices at a mask boundary
    size_t checked = 0;                 // number of coordinates actually compared
};

using MultiScalarFn =
    std::function<Var<double>(Graph<double>&, const std::vector<Var<double>>&)>;
using ScalarFn = std::function<Var<double>(Graph<double>&, Var<double>)>;

// Checks d f / d xs[i] for every tensor in xs. Coordinates are flattened in
// tensor order. `seed` fixes the graph rng so stochastic ops replay.
GradCheckReport finite_diff_check_multi(const MultiScalarFn& f, std::vector<Tensor<double>> xs,
                                        double h = 1e-6, uint64_t seed = 0);

// Single-tensor form; returns max relative error
// |g_ad - g_fd| / max(1e-12, |g_ad| + |g_fd|) over non-excluded coordinates.
double finite_diff_check(const ScalarFn& f, const Tensor<double>& x, double h = 1e-6,
                         GradCheckReport* report = nullptr);

}  // namespace tversky
