#include "tversky/interpret/boundary.hpp"

namespace tversky {

BoundaryGrid decision_boundary_grid(const PlaneScorer& scorer, int64_t class_count, double xmin,
                                    double xmax, double ymin, double ymax, int resolution) {
    if (resolution < 1) throw std::invalid_argument("boundary grid: resolution must be >= 1");
    if (class_count < 1) throw std::invalid_argument("boundary grid: need at least one class");
    BoundaryGrid g;
    g.xmin = xmin;
    g.xmax = xmax;
    g.ymin = ymin;
    g.ymax = ymax;
    g.resolution = resolution;
    g.classes = class_count;
    auto linspace = [resolution](double lo, double hi) {
        std::vector<double> v;
        v.reserve(static_cast<size_t>(resolution));
        if (resolution == 1) {
            v.push_back(0.5 * (lo + hi));
        } else {
            for (int i = 0; i < resolution; ++i)
                v.push_back(lo + (hi - lo) * static_cast<double>(i) /
                                     static_cast<double>(resolution - 1));
        }
        return v;
    };
    g.xs = linspace(xmin, xmax);
    g.ys = linspace(ymin, ymax);
    g.cls.resize(static_cast<size_t>(resolution) * resolution);
    g.scores.resize(static_cast<size_t>(resolution) * resolution *
                    static_cast<size_t>(class_count));
    for (int iy = 0; iy < resolution; ++iy)
        for (int ix = 0; ix < resolution; ++ix) {
            std::vector<double> s = scorer(g.xs[static_cast<size_t>(ix)],
                                           g.ys[static_cast<size_t>(iy)]);
            if (static_cast<int64_t>(s.size()) != class_count)
                throw std::invalid_argument("boundary grid: scorer class-count mismatch");
            size_t cell = static_cast<size_t>(iy) * resolution + ix;
            int64_t best = 0;
            for (size_t j = 1; j < s.size(); ++j)
                if (s[j] > s[static_cast<size_t>(best)]) best = static_cast<int64_t>(j);
            g.cls[cell] = best;
            std::copy(s.begin(), s.end(),
                      g.scores.begin() + static_cast<int64_t>(cell) * class_count);
        }
    return g;
}

PlaneScorer plane_scorer(const TverskyProjectionLayer<double>& layer) {
    if (layer.features->dim() != 2)
        throw std::invalid_argument("boundary grid: model input is not 2-d");
    return [&layer](double x, double y) {
        return layer.forward_values(Tensor<double>::row({x, y}));
    };
}

PlaneScorer plane_scorer(const ConstructedModel& model) {
    return plane_scorer(model.layer);
}

}  // namespace tversky
