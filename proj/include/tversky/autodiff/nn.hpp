#pragma once

#include "tversky/autodiff/graph.hpp"

namespace tversky {

// input [N,Ci,H,W], kernels [Co,Ci,KH,KW]; cross-correlation with exact
// gradients for both input and kernels. Batch dimension runs in parallel.
template <class T>
Var<T> conv2d(Var<T> input, Var<T> kernels, int stride = 1, int padding = 0);

// [N,C,H,W] -> [N,C], mean over the spatial dims.
template <class T>
Var<T> global_avg_pool(Var<T> x);

// x: [N,C,H,W], bias: [C]; per-channel broadcast add.
template <class T>
Var<T> add_channel_bias(Var<T> x, Var<T> bias);

// 2x2 window, stride 2, floor semantics on odd extents.
template <class T>
Var<T> maxpool2(Var<T> x);

// Inverted dropout driven by the graph's rng; identity when the graph is not
// in training mode.
template <class T>
Var<T> dropout(Var<T> x, double rate);

// Mean over the batch of -log softmax(logits)[label]; max-subtraction keeps
// large logits finite.
template <class T>
Var<T> softmax_cross_entropy(Var<T> logits, const std::vector<int64_t>& labels);

// Plain helpers over forward values (no graph recording).
template <class T>
int64_t argmax_row(const Tensor<T>& m, int64_t row);

template <class T>
double accuracy(const Tensor<T>& logits, const std::vector<int64_t>& labels);

}  // namespace tversky
