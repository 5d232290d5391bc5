#include "tversky/interpret/salience.hpp"

#include <algorithm>

namespace tversky {

template <class T>
std::vector<SalienceEntry> salience_rank(const std::vector<Tensor<T>>& objects,
                                         const FeatureBank<T>& bank) {
    std::vector<SalienceEntry> out;
    out.reserve(objects.size());
    for (size_t i = 0; i < objects.size(); ++i)
        out.push_back({static_cast<int64_t>(i),
                       static_cast<double>(salience_value(objects[i], bank))});
    std::stable_sort(out.begin(), out.end(),
                     [](const SalienceEntry& a, const SalienceEntry& b) { return a.score < b.score; });
    return out;
}

template std::vector<SalienceEntry> salience_rank<float>(const std::vector<Tensor<float>>&,
                                                         const FeatureBank<float>&);
template std::vector<SalienceEntry> salience_rank<double>(const std::vector<Tensor<double>>&,
                                                          const FeatureBank<double>&);

}  // namespace tversky
