#pragma once

#include "tversky/autodiff/graph.hpp"
#include "tversky/core/types.hpp"

namespace tversky {

// ---- graph ops -------------------------------------------------------------
//
// adot: [n,m] object-feature dot products, bdot: [p,m] prototype-feature dot
// products. Indicators are piecewise-constant for backprop: gradient flows
// through the measured values, never through the mask; at an exact boundary
// the mask follows the strict inequality and the subgradient is 0.

template <class T>
Var<T> masked_intersection(Var<T> adot, Var<T> bdot, IntersectionReduction psi);

enum class DiffDirection { AB, BA };  // AB: f(A_i - B_j); BA: f(B_j - A_i)

template <class T>
Var<T> masked_difference(Var<T> adot, Var<T> bdot, DifferenceReduction mode, DiffDirection dir);

// theta*f(A&B) - alpha*f(A-B) - beta*f(B-A) for every (object, prototype)
// pair: objects [n,d] x prototypes [p,d] -> [n,p]. With cfg.normalize the
// object and prototype rows are L2-normalized in-graph; features are not.
template <class T>
Var<T> tversky_similarity_matrix(Var<T> objects, Var<T> prototypes, Var<T> features, Var<T> theta,
                                 Var<T> alpha, Var<T> beta, const ReductionConfig& cfg);

// ---- single-pair graph forms ------------------------------------------------

template <class T>
Var<T> salience(Graph<T>& g, Var<T> x, Var<T> features);  // scalar, x: [d] or [1,d]

template <class T>
Var<T> intersection_measure(Graph<T>& g, Var<T> a, Var<T> b, Var<T> features,
                            const ReductionConfig& cfg);

template <class T>
Var<T> difference_measure(Graph<T>& g, Var<T> a, Var<T> b, Var<T> features,
                          const ReductionConfig& cfg);

template <class T>
Var<T> tversky_contrast(Graph<T>& g, Var<T> a, Var<T> b, Var<T> features,
                        Var<T> theta, Var<T> alpha, Var<T> beta, const ReductionConfig& cfg);

// ---- plain-value forms (no tape) --------------------------------------------

template <class T>
FeatureSet feature_membership(const Tensor<T>& x, const FeatureBank<T>& bank,
                              int64_t object_id = -1);

template <class T>
T salience_value(const Tensor<T>& x, const FeatureBank<T>& bank);

template <class T>
T intersection_measure_value(const Tensor<T>& a, const Tensor<T>& b, const FeatureBank<T>& bank,
                             const ReductionConfig& cfg);

template <class T>
T difference_measure_value(const Tensor<T>& a, const Tensor<T>& b, const FeatureBank<T>& bank,
                           const ReductionConfig& cfg);

template <class T>
T tversky_contrast_value(const Tensor<T>& a, const Tensor<T>& b, const FeatureBank<T>& bank,
                         const ContrastWeights<T>& w, const ReductionConfig& cfg);

}  // namespace tversky
