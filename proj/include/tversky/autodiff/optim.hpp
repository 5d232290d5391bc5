#pragma once

#include <vector>

#include "tversky/autodiff/tensor.hpp"

namespace tversky {

enum class OptimizerKind { Sgd, Adam };

// Holds the schedule plus per-parameter moment buffers, which always match
// their parameter's shape. Parameters are identified by position, so callers
// must pass the same parameter list in the same order every step.
template <class T>
class Optimizer {
public:
    static Optimizer sgd(double lr, double momentum = 0.0, double weight_decay = 0.0) {
        Optimizer o;
        o.kind_ = OptimizerKind::Sgd;
        o.lr_ = lr;
        o.momentum_ = momentum;
        o.weight_decay_ = weight_decay;
        return o;
    }

    static Optimizer adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
                          double weight_decay = 0.0) {
        Optimizer o;
        o.kind_ = OptimizerKind::Adam;
        o.lr_ = lr;
        o.beta1_ = beta1;
        o.beta2_ = beta2;
        o.eps_ = eps;
        o.weight_decay_ = weight_decay;
        return o;
    }

    void step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads);

    OptimizerKind kind() const { return kind_; }
    double learning_rate() const { return lr_; }
    int64_t steps_taken() const { return t_; }

private:
    OptimizerKind kind_ = OptimizerKind::Sgd;
    double lr_ = 0.01, momentum_ = 0.0, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8,
           weight_decay_ = 0.0;
    int64_t t_ = 0;
    std::vector<Tensor<T>> m_, v_;  // sgd velocity lives in m_
};

}  // namespace tversky
