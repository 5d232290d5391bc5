#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "tversky/autodiff/random.hpp"
#include "tversky/autodiff/tensor.hpp"

namespace tversky {

template <class T>
class Graph;

// Handle to a node in a Graph. Cheap to copy; valid for the graph's lifetime.
template <class T>
struct Var {
    Graph<T>* graph = nullptr;
    int32_t id = -1;

    bool valid() const { return graph != nullptr && id >= 0; }
    const Tensor<T>& value() const;
    const Tensor<T>& grad() const;
    const std::vector<int64_t>& shape() const { return value().shape; }
};

using VarF = Var<float>;
using VarD = Var<double>;

// Reverse-mode tape. Nodes are append-only; backward() visits each node once
// in reverse insertion order. Confined to one thread while recording.
template <class T>
class Graph {
public:
    struct Node {
        const char* op;
        std::vector<int32_t> inputs;
        Tensor<T> value;
        Tensor<T> grad;  // empty unless requires_grad and backward() ran
        std::function<void(Graph&, const Node&)> backward;
        bool requires_grad = false;
        bool trainable = false;
    };

    explicit Graph(uint64_t seed = 0) : rng(seed) {}
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var<T> constant(Tensor<T> v, const char* op = "const") {
        return add_node(op, {}, std::move(v), nullptr, false, false);
    }

    Var<T> param(Tensor<T> v) {
        Var<T> p = add_node("param", {}, std::move(v), nullptr, true, true);
        params_.push_back(p.id);
        return p;
    }

    Var<T> add_node(const char* op, std::vector<int32_t> inputs, Tensor<T> value,
                    std::function<void(Graph&, const Node&)> backward, bool requires_grad,
                    bool trainable = false) {
        Node n;
        n.op = op;
        n.inputs = std::move(inputs);
        n.value = std::move(value);
        if (requires_grad) n.backward = std::move(backward);
        n.requires_grad = requires_grad;
        n.trainable = trainable;
        nodes_.push_back(std::move(n));
        return Var<T>{this, static_cast<int32_t>(nodes_.size() - 1)};
    }

    const Node& node(int32_t id) const { return nodes_.at(static_cast<size_t>(id)); }
    Node& node(int32_t id) { return nodes_.at(static_cast<size_t>(id)); }

    const Tensor<T>& value(Var<T> v) const { return node(v.id).value; }
    const Tensor<T>& grad(Var<T> v) const {
        const Node& n = node(v.id);
        if (n.grad.data.empty() && n.value.numel() > 0)
            throw std::logic_error("graph: gradient not computed for this node");
        return n.grad;
    }

    size_t size() const { return nodes_.size(); }
    const std::vector<int32_t>& params() const { return params_; }

    bool requires_grad(int32_t id) const { return node(id).requires_grad; }

    // Gradients accumulate by sum over all uses; non-parameter leaves get no
    // gradient storage.
    void backward(Var<T> loss) {
        if (loss.graph != this) throw std::invalid_argument("backward: loss from another graph");
        Node& ln = node(loss.id);
        if (!ln.value.is_scalar()) throw std::invalid_argument("backward: loss must be scalar");
        for (Node& n : nodes_) {
            if (n.requires_grad)
                n.grad = Tensor<T>::zeros(n.value.shape);
            else
                n.grad = Tensor<T>();
        }
        if (!ln.requires_grad) return;  // loss does not depend on any parameter
        ln.grad.data[0] = T(1);
        for (size_t i = nodes_.size(); i-- > 0;) {
            Node& n = nodes_[i];
            if (n.requires_grad && n.backward) n.backward(*this, n);
        }
    }

    void accumulate(int32_t id, const Tensor<T>& g) {
        Node& n = node(id);
        if (!n.requires_grad) return;
        T* dst = n.grad.data.data();
        const T* src = g.data.data();
        for (size_t i = 0; i < g.data.size(); ++i) dst[i] += src[i];
    }

    // Forward masks (indicators, branch picks) feed this hash; two forward
    // passes with different mask decisions hash differently, which is how the
    // finite-difference checker detects boundary crossings.
    void feed_mask_bit(bool b) {
        mask_hash_ = (mask_hash_ ^ (b ? 0x100000001B3ull : 0x9E3779B97F4A7C15ull)) * 0x100000001B3ull;
    }
    uint64_t mask_hash() const { return mask_hash_; }

    bool training = false;
    Rng rng;

private:
    std::vector<Node> nodes_;
    std::vector<int32_t> params_;
    uint64_t mask_hash_ = 0xCBF29CE484222325ull;
};

template <class T>
const Tensor<T>& Var<T>::value() const {
    return graph->value(*this);
}

template <class T>
const Tensor<T>& Var<T>::grad() const {
    return graph->grad(*this);
}

}  // namespace tversky
