#pragma once

#include "tversky/core/measures.hpp"

namespace tversky {

struct SalienceEntry {
    int64_t id = 0;
    double score = 0;
};

// Ascending salience, stable for ties; scores come back alongside ids.
template <class T>
std::vector<SalienceEntry> salience_rank(const std::vector<Tensor<T>>& objects,
                                         const FeatureBank<T>& bank);

}  // namespace tversky
