#pragma once

#include "tversky/layers/layers.hpp"

namespace tversky {

// Hand-set projection layers whose argmax reproduces a small truth table
// exactly; parameters are frozen, nothing is trained.
struct ConstructedModel {
    TverskyProjectionLayer<double> layer;
    std::vector<Tensor<double>> inputs;    // canonical evaluation points
    std::vector<int64_t> expected_class;   // truth table, row-aligned with inputs
    std::vector<std::string> input_names;
    int64_t class_count = 0;
};

// d=2 xor: features f0=[0.5,-1], f1=[-1,0.5]; prototypes p0=[0.5,0.5],
// p1=[-0.5,-0.5]; theta=1, alpha=beta=0.5, min/ignorematch.
ConstructedModel build_constructed_xor();

// d=3 two-digit binary addition: xor's universe zero-padded plus f2=[0,0,1]
// and p2=[1,1,0.5]; inputs encode the 4 digit pairs, argmax is their sum.
ConstructedModel build_constructed_add();

int64_t constructed_predict(const ConstructedModel& m, const Tensor<double>& x);

// similarity row [S(x,p_0), ..., S(x,p_{p-1})]
std::vector<double> constructed_scores(const ConstructedModel& m, const Tensor<double>& x);

}  // namespace tversky
