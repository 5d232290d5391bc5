#pragma once

#include <memory>
#include <unordered_map>

#include "tversky/autodiff/ops.hpp"
#include "tversky/core/measures.hpp"

namespace tversky {

// Maps persistent parameter tensors to graph nodes for one forward pass.
// A tensor mounted twice (shared bank, tied prototypes, reused backbone)
// yields the same node, so gradient contributions from every use accumulate
// into one gradient.
template <class T>
class Mounter {
public:
    Var<T> operator()(Graph<T>& g, Tensor<T>& t, bool trainable = true) {
        auto it = mounted_.find(&t);
        if (it != mounted_.end()) return it->second;
        Var<T> v = trainable ? g.param(t) : g.constant(t, "frozen");
        mounted_.emplace(&t, v);
        return v;
    }

    Var<T> node_for(const Tensor<T>& t) const {
        auto it = mounted_.find(const_cast<Tensor<T>*>(&t));
        if (it == mounted_.end()) throw std::logic_error("mounter: tensor was not mounted");
        return it->second;
    }

    bool contains(const Tensor<T>& t) const {
        return mounted_.count(const_cast<Tensor<T>*>(&t)) != 0;
    }

private:
    std::unordered_map<Tensor<T>*, Var<T>> mounted_;
};

// Ordered prototypes, one per output unit. A tied bank shares the source
// matrix (no copy); updates through either handle are updates to the one
// parameter.
template <class T>
struct PrototypeBank {
    std::shared_ptr<Tensor<T>> prototypes;  // [p, d]
    bool trainable = true;
    bool tied = false;

    static PrototypeBank owned(Tensor<T> m, bool trainable = true) {
        if (m.rank() != 2) throw std::invalid_argument("prototype bank: expects [p,d]");
        PrototypeBank b;
        b.prototypes = std::make_shared<Tensor<T>>(std::move(m));
        b.trainable = trainable;
        return b;
    }

    static PrototypeBank tied_to(std::shared_ptr<Tensor<T>> source, bool trainable = true) {
        if (!source || source->rank() != 2)
            throw std::invalid_argument("prototype bank: tie source must be [p,d]");
        PrototypeBank b;
        b.prototypes = std::move(source);
        b.trainable = trainable;
        b.tied = true;
        return b;
    }

    int64_t count() const { return prototypes->shape[0]; }
    int64_t dim() const { return prototypes->shape[1]; }
};

// Eq.-style similarity layer: S(a, b) with a learnable feature bank and the
// three contrast weights.
template <class T>
struct TverskySimilarityLayer {
    std::shared_ptr<FeatureBank<T>> features;
    ContrastWeights<T> weights;
    ReductionConfig cfg;

    Var<T> forward(Graph<T>& g, Var<T> a, Var<T> b, Mounter<T>& mount);
};

// Non-linear projection: input -> vector of Tversky similarities to each
// prototype, in prototype order. Output width is the prototype count,
// independent of the feature-bank size.
template <class T>
struct TverskyProjectionLayer {
    PrototypeBank<T> prototypes;
    std::shared_ptr<FeatureBank<T>> features;
    ContrastWeights<T> weights;
    ReductionConfig cfg;

    Var<T> forward(Graph<T>& g, Var<T> input, Mounter<T>& mount);

    // forward on plain values, single input vector -> one similarity per prototype
    std::vector<T> forward_values(const Tensor<T>& x) const;

    std::vector<Tensor<T>*> parameters();
};

template <class T>
struct LinearLayer {
    Tensor<T> weight;  // [p, d]
    Tensor<T> bias;    // [p] when has_bias
    bool has_bias = false;

    static LinearLayer make(int64_t out_dim, int64_t in_dim, bool with_bias = false) {
        LinearLayer l;
        l.weight = Tensor<T>({out_dim, in_dim});
        l.has_bias = with_bias;
        if (with_bias) l.bias = Tensor<T>({out_dim});
        return l;
    }

    Var<T> forward(Graph<T>& g, Var<T> input, Mounter<T>& mount);
    std::vector<Tensor<T>*> parameters();
};

// Named feature banks shared across layers; every layer resolving a name sees
// the identical parameter object.
template <class T>
class SharedBankRegistry {
public:
    void register_bank(const std::string& name, std::shared_ptr<FeatureBank<T>> bank) {
        if (!bank) throw std::invalid_argument("registry: null bank");
        if (banks_.count(name)) throw std::invalid_argument("registry: duplicate bank: " + name);
        banks_[name] = std::move(bank);
        resolve_counts_[name] = 0;
    }

    std::shared_ptr<FeatureBank<T>> resolve(const std::string& name) {
        auto it = banks_.find(name);
        if (it == banks_.end()) throw std::invalid_argument("registry: unknown bank: " + name);
        ++resolve_counts_[name];
        return it->second;
    }

    int64_t resolve_count(const std::string& name) const {
        auto it = resolve_counts_.find(name);
        return it == resolve_counts_.end() ? 0 : it->second;
    }

    size_t size() const { return banks_.size(); }

private:
    std::unordered_map<std::string, std::shared_ptr<FeatureBank<T>>> banks_;
    std::unordered_map<std::string, int64_t> resolve_counts_;
};

// Projection parameters stored as input-shaped tensors, forwarded through a
// backbone to obtain their vector form before each projection. Larger than
// the vector form by design; gradients reach the images through the backbone.
template <class T>
struct VisualParameterization {
    Tensor<T> param_images;  // [count, ...input shape]
    int64_t expected_dim = 0;
};

template <class T>
struct Backbone {
    virtual ~Backbone() = default;
    virtual Var<T> forward(Graph<T>& g, Var<T> input, Mounter<T>& mount) = 0;
    virtual int64_t output_dim() const = 0;
};

// Forwards param_images through the backbone, splits the resulting rows into
// prototypes (first p rows) and features (rest), then projects the batch.
template <class T>
Var<T> visual_forward(Graph<T>& g, VisualParameterization<T>& vp, Backbone<T>& backbone,
                      Var<T> input_embeddings, int64_t prototype_count,
                      ContrastWeights<T>& weights, const ReductionConfig& cfg, Mounter<T>& mount);

}  // namespace tversky
