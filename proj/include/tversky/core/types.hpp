#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tversky/autodiff/tensor.hpp"

namespace tversky {

// Psi: symmetric aggregator for the paired measures of a shared feature.
enum class IntersectionReduction { Min, Max, Product, Mean, GMean, SoftMin };

// ignorematch counts features present in A but absent from B; substractmatch
// additionally counts measure excess over features present in both.
enum class DifferenceReduction { IgnoreMatch, SubstractMatch };

struct ReductionConfig {
    IntersectionReduction intersection = IntersectionReduction::Product;
    DifferenceReduction difference = DifferenceReduction::SubstractMatch;
    bool normalize = false;  // L2-normalize objects and prototypes (never features)
};

inline const char* to_string(IntersectionReduction r) {
    switch (r) {
        case IntersectionReduction::Min: return "min";
        case IntersectionReduction::Max: return "max";
        case IntersectionReduction::Product: return "product";
        case IntersectionReduction::Mean: return "mean";
        case IntersectionReduction::GMean: return "gmean";
        case IntersectionReduction::SoftMin: return "softmin";
    }
    return "?";
}

inline const char* to_string(DifferenceReduction r) {
    return r == DifferenceReduction::IgnoreMatch ? "ignorematch" : "substractmatch";
}

inline IntersectionReduction intersection_from_string(const std::string& s) {
    if (s == "min") return IntersectionReduction::Min;
    if (s == "max") return IntersectionReduction::Max;
    if (s == "product") return IntersectionReduction::Product;
    if (s == "mean") return IntersectionReduction::Mean;
    if (s == "gmean") return IntersectionReduction::GMean;
    if (s == "softmin") return IntersectionReduction::SoftMin;
    throw std::invalid_argument("unknown intersection reduction: " + s);
}

inline DifferenceReduction difference_from_string(const std::string& s) {
    if (s == "ignorematch") return DifferenceReduction::IgnoreMatch;
    if (s == "substractmatch") return DifferenceReduction::SubstractMatch;
    throw std::invalid_argument("unknown difference reduction: " + s);
}

constexpr std::initializer_list<IntersectionReduction> kAllIntersections = {
    IntersectionReduction::Min,   IntersectionReduction::Max,
    IntersectionReduction::Product, IntersectionReduction::Mean,
    IntersectionReduction::GMean, IntersectionReduction::SoftMin};

constexpr std::initializer_list<DifferenceReduction> kAllDifferences = {
    DifferenceReduction::IgnoreMatch, DifferenceReduction::SubstractMatch};

// The learnable feature universe: |Omega| rows of d-dimensional vectors.
template <class T>
struct FeatureBank {
    Tensor<T> features;  // [|Omega|, d]
    bool trainable = true;

    FeatureBank() = default;
    explicit FeatureBank(Tensor<T> f, bool train = true) : features(std::move(f)), trainable(train) {
        if (features.rank() != 2 || features.shape[0] < 1 || features.shape[1] < 1)
            throw std::invalid_argument("feature bank: need at least one feature and one dim");
        if (!features.all_finite()) throw std::invalid_argument("feature bank: non-finite rows");
    }

    int64_t size() const { return features.shape[0]; }
    int64_t dim() const { return features.shape[1]; }
};

// theta, alpha, beta of the contrast model; unconstrained scalars.
template <class T>
struct ContrastWeights {
    Tensor<T> theta = Tensor<T>::scalar(T(1.0));
    Tensor<T> alpha = Tensor<T>::scalar(T(0.5));
    Tensor<T> beta = Tensor<T>::scalar(T(0.5));
    bool trainable = true;

    ContrastWeights() = default;
    ContrastWeights(T th, T al, T be)
        : theta(Tensor<T>::scalar(th)), alpha(Tensor<T>::scalar(al)), beta(Tensor<T>::scalar(be)) {}
};

// An object's set-view: indices of features with strictly positive dot
// product, with the measures alongside.
struct FeatureSet {
    int64_t object_id = -1;
    std::vector<int64_t> member_indices;  // strictly increasing
    std::vector<double> measures;         // all > 0, parallel to member_indices

    bool contains(int64_t k) const {
        for (int64_t m : member_indices)
            if (m == k) return true;
        return false;
    }
};

}  // namespace tversky
