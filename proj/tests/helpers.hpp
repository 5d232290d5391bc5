#pragma once

#include <cmath>

#include "tversky/autodiff/random.hpp"
#include "tversky/autodiff/tensor.hpp"
#include "tversky/core/types.hpp"

namespace tvtest {

using tversky::Rng;
using tversky::Tensor;

inline Tensor<double> random_tensor(Rng& rng, std::vector<int64_t> shape, double lo = -1.0,
                                    double hi = 1.0) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// Keeps every indicator argument (a.f_k, b.f_k, a.f_k - b.f_k) away from the
// mask boundary so central differences stay on one side of each indicator.
inline bool mask_safe(const Tensor<double>& a, const Tensor<double>& b,
                      const Tensor<double>& features, double margin) {
    int64_t m = features.shape[0], d = features.shape[1];
    auto dot_row = [&](const Tensor<double>& x, int64_t k) {
        double acc = 0.0;
        for (int64_t j = 0; j < d; ++j) acc += x.data[static_cast<size_t>(j)] * features.at(k, j);
        return acc;
    };
    for (int64_t k = 0; k < m; ++k) {
        double da = dot_row(a, k), db = dot_row(b, k);
        if (std::abs(da) <= margin || std::abs(db) <= margin || std::abs(da - db) <= margin)
            return false;
    }
    return true;
}

inline bool mask_safe_rows(const Tensor<double>& objects, const Tensor<double>& prototypes,
                           const Tensor<double>& features, double margin) {
    int64_t n = objects.shape[0], p = prototypes.shape[0], d = objects.shape[1];
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < p; ++j) {
            Tensor<double> a({d}), b({d});
            for (int64_t c = 0; c < d; ++c) {
                a.data[static_cast<size_t>(c)] = objects.at(i, c);
                b.data[static_cast<size_t>(c)] = prototypes.at(j, c);
            }
            if (!mask_safe(a, b, features, margin)) return false;
        }
    return true;
}

}  // namespace tvtest
