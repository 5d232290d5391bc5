#include "tversky/exp/constructed.hpp"

namespace tversky {

namespace {

ConstructedModel make_model(Tensor<double> prototypes, Tensor<double> features,
                            std::vector<Tensor<double>> inputs, std::vector<int64_t> expected,
                            std::vector<std::string> names) {
    ConstructedModel m;
    m.layer.prototypes = PrototypeBank<double>::owned(std::move(prototypes), false);
    m.layer.features = std::make_shared<FeatureBank<double>>(std::move(features), false);
    m.layer.weights = ContrastWeights<double>(1.0, 0.5, 0.5);
    m.layer.weights.trainable = false;
    m.layer.cfg = {IntersectionReduction::Min, DifferenceReduction::IgnoreMatch, false};
    m.inputs = std::move(inputs);
    m.expected_class = std::move(expected);
    m.input_names = std::move(names);
    m.class_count = m.layer.prototypes.count();
    return m;
}

}  // namespace

ConstructedModel build_constructed_xor() {
    return make_model(
        Tensor<double>::matrix(2, 2, {0.5, 0.5, -0.5, -0.5}),
        Tensor<double>::matrix(2, 2, {0.5, -1, -1, 0.5}),
        {Tensor<double>::row({0, 0}), Tensor<double>::row({0, 1}), Tensor<double>::row({1, 0}),
         Tensor<double>::row({1, 1})},
        {0, 1, 1, 0}, {"[0,0]", "[0,1]", "[1,0]", "[1,1]"});
}

ConstructedModel build_constructed_add() {
    return make_model(
        Tensor<double>::matrix(3, 3, {0.5, 0.5, 0, -0.5, -0.5, 0, 1, 1, 0.5}),
        Tensor<double>::matrix(3, 3, {0.5, -1, 0, -1, 0.5, 0, 0, 0, 1}),
        {Tensor<double>::row({0, 0, 0}), Tensor<double>::row({0, 1, 0}),
         Tensor<double>::row({1, 0, 0}), Tensor<double>::row({1, 1, 1})},
        {0, 1, 1, 2}, {"[0,0]", "[0,1]", "[1,0]", "[1,1]"});
}

std::vector<double> constructed_scores(const ConstructedModel& m, const Tensor<double>& x) {
    return m.layer.forward_values(x);
}

int64_t constructed_predict(const ConstructedModel& m, const Tensor<double>& x) {
    std::vector<double> s = constructed_scores(m, x);
    int64_t best = 0;
    for (size_t j = 1; j < s.size(); ++j)
        if (s[j] > s[static_cast<size_t>(best)]) best = static_cast<int64_t>(j);
    return best;
}

}  // namespace tversky
