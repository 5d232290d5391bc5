#include "tversky/autodiff/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace tversky {

template <class T>
void Optimizer<T>::step(const std::vector<Tensor<T>*>& params,
                        const std::vector<const Tensor<T>*>& grads) {
    if (params.size() != grads.size()) throw std::invalid_argument("optimizer: param/grad count");
    if (m_.empty()) {
        for (const Tensor<T>* p : params) m_.push_back(Tensor<T>::zeros(p->shape));
        if (kind_ == OptimizerKind::Adam)
            for (const Tensor<T>* p : params) v_.push_back(Tensor<T>::zeros(p->shape));
    }
    if (m_.size() != params.size()) throw std::invalid_argument("optimizer: param list changed");
    ++t_;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Tensor<T>& p = *params[pi];
        const Tensor<T>& g = *grads[pi];
        if (!p.same_shape(g) || !p.same_shape(m_[pi]))
            throw std::invalid_argument("optimizer: shape mismatch at parameter " +
                                        std::to_string(pi));
        if (kind_ == OptimizerKind::Sgd) {
            Tensor<T>& vel = m_[pi];
            for (size_t i = 0; i < p.data.size(); ++i) {
                double gi = static_cast<double>(g.data[i]) + weight_decay_ * p.data[i];
                if (momentum_ != 0.0) {
                    vel.data[i] = static_cast<T>(momentum_ * vel.data[i] + gi);
                    gi = vel.data[i];
                }
                p.data[i] = static_cast<T>(p.data[i] - lr_ * gi);
            }
        } else {
            Tensor<T>& m = m_[pi];
            Tensor<T>& v = v_[pi];
            const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
            const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
            for (size_t i = 0; i < p.data.size(); ++i) {
                double gi = static_cast<double>(g.data[i]) + weight_decay_ * p.data[i];
                m.data[i] = static_cast<T>(beta1_ * m.data[i] + (1.0 - beta1_) * gi);
                v.data[i] = static_cast<T>(beta2_ * v.data[i] + (1.0 - beta2_) * gi * gi);
                double mhat = m.data[i] / bc1;
                double vhat = v.data[i] / bc2;
                p.data[i] = static_cast<T>(p.data[i] - lr_ * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace tversky
