#pragma once

#include "tversky/autodiff/graph.hpp"

namespace tversky {

// Elementwise / shape ops. All record onto the graph of their first argument
// and propagate exact gradients; indicator-style branching feeds the graph's
// mask hash so boundary crossings are detectable.

template <class T>
Var<T> add(Var<T> a, Var<T> b);
template <class T>
Var<T> sub(Var<T> a, Var<T> b);
template <class T>
Var<T> mul(Var<T> a, Var<T> b);  // Hadamard

template <class T>
Var<T> scale(Var<T> a, double c);

// s is a scalar node (numel == 1); broadcasts over x.
template <class T>
Var<T> scalar_mul(Var<T> s, Var<T> x);

template <class T>
Var<T> neg(Var<T> a);

template <class T>
Var<T> sum(Var<T> a);  // -> scalar

template <class T>
Var<T> mean(Var<T> a);  // -> scalar

template <class T>
Var<T> relu(Var<T> x);

template <class T>
Var<T> matmul(Var<T> a, Var<T> b);  // [m,k] x [k,n] -> [m,n]

template <class T>
Var<T> transpose2d(Var<T> a);

template <class T>
Var<T> reshape(Var<T> a, std::vector<int64_t> shape);

// Concatenate matrices [n,c_i] along columns -> [n, sum c_i].
template <class T>
Var<T> concat_cols(const std::vector<Var<T>>& xs);

// x: [n,p], bias: [p]; row-broadcast add.
template <class T>
Var<T> add_bias(Var<T> x, Var<T> bias);

// Rows [begin,end) of a matrix (or leading-dim slice of any tensor).
template <class T>
Var<T> slice_rows(Var<T> x, int64_t begin, int64_t end);

// Row-wise L2 normalization of a matrix (or a single vector). strict mode
// treats a zero row as an error; guarded mode passes zero rows through
// unchanged (zero gradient), which batched layers need because inputs like
// the boolean origin are legitimately zero.
template <class T>
Var<T> l2_normalize_rows(Var<T> x, bool strict = true);

}  // namespace tversky
