#include "tversky/layers/layers.hpp"

namespace tversky {

template <class T>
Var<T> TverskySimilarityLayer<T>::forward(Graph<T>& g, Var<T> a, Var<T> b, Mounter<T>& mount) {
    Var<T> feats = mount(g, features->features, features->trainable);
    Var<T> th = mount(g, weights.theta, weights.trainable);
    Var<T> al = mount(g, weights.alpha, weights.trainable);
    Var<T> be = mount(g, weights.beta, weights.trainable);
    return tversky_contrast(g, a, b, feats, th, al, be, cfg);
}

template <class T>
Var<T> TverskyProjectionLayer<T>::forward(Graph<T>& g, Var<T> input, Mounter<T>& mount) {
    if (input.value().rank() != 2 || input.value().shape[1] != features->dim())
        throw std::invalid_argument("projection: input must be [n," +
                                    std::to_string(features->dim()) + "]");
    if (prototypes.dim() != features->dim())
        throw std::invalid_argument("projection: prototype/feature dimensionality mismatch");
    Var<T> protos = mount(g, *prototypes.prototypes, prototypes.trainable);
    Var<T> feats = mount(g, features->features, features->trainable);
    Var<T> th = mount(g, weights.theta, weights.trainable);
    Var<T> al = mount(g, weights.alpha, weights.trainable);
    Var<T> be = mount(g, weights.beta, weights.trainable);
    return tversky_similarity_matrix(input, protos, feats, th, al, be, cfg);
}

template <class T>
std::vector<T> TverskyProjectionLayer<T>::forward_values(const Tensor<T>& x) const {
    Graph<T> g;
    Mounter<T> mount;
    auto* self = const_cast<TverskyProjectionLayer<T>*>(this);
    Var<T> xin = g.constant(Tensor<T>({1, x.numel()}, x.data));
    Var<T> out = self->forward(g, xin, mount);
    return out.value().data;
}

template <class T>
std::vector<Tensor<T>*> TverskyProjectionLayer<T>::parameters() {
    std::vector<Tensor<T>*> ps;
    if (prototypes.trainable) ps.push_back(prototypes.prototypes.get());
    if (features->trainable) ps.push_back(&features->features);
    if (weights.trainable) {
        ps.push_back(&weights.theta);
        ps.push_back(&weights.alpha);
        ps.push_back(&weights.beta);
    }
    return ps;
}

template <class T>
Var<T> LinearLayer<T>::forward(Graph<T>& g, Var<T> input, Mounter<T>& mount) {
    Var<T> w = mount(g, weight);
    Var<T> out = matmul(input, transpose2d(w));
    if (has_bias) out = add_bias(out, mount(g, bias));
    return out;
}

template <class T>
std::vector<Tensor<T>*> LinearLayer<T>::parameters() {
    std::vector<Tensor<T>*> ps{&weight};
    if (has_bias) ps.push_back(&bias);
    return ps;
}

template <class T>
Var<T> visual_forward(Graph<T>& g, VisualParameterization<T>& vp, Backbone<T>& backbone,
                      Var<T> input_embeddings, int64_t prototype_count,
                      ContrastWeights<T>& weights, const ReductionConfig& cfg, Mounter<T>& mount) {
    if (vp.expected_dim != backbone.output_dim())
        throw std::invalid_argument("visual_forward: backbone output dim " +
                                    std::to_string(backbone.output_dim()) + " != expected " +
                                    std::to_string(vp.expected_dim));
    Var<T> images = mount(g, vp.param_images);
    Var<T> vecs = backbone.forward(g, images, mount);
    if (vecs.value().rank() != 2 || vecs.value().shape[1] != vp.expected_dim)
        throw std::invalid_argument("visual_forward: backbone produced wrong dimensionality");
    int64_t total = vecs.value().shape[0];
    if (prototype_count <= 0 || prototype_count > total)
        throw std::invalid_argument("visual_forward: bad prototype count");
    Var<T> protos = slice_rows(vecs, 0, prototype_count);
    Var<T> th = mount(g, weights.theta, weights.trainable);
    Var<T> al = mount(g, weights.alpha, weights.trainable);
    Var<T> be = mount(g, weights.beta, weights.trainable);
    if (prototype_count == total)
        throw std::invalid_argument("visual_forward: no feature rows after prototypes");
    Var<T> feats = slice_rows(vecs, prototype_count, total);
    return tversky_similarity_matrix(input_embeddings, protos, feats, th, al, be, cfg);
}

#define TVERSKY_INSTANTIATE_LAYERS(T)                                                       \
    template struct TverskySimilarityLayer<T>;                                              \
    template struct TverskyProjectionLayer<T>;                                              \
    template struct LinearLayer<T>;                                                         \
    template Var<T> visual_forward<T>(Graph<T>&, VisualParameterization<T>&, Backbone<T>&,  \
                                      Var<T>, int64_t, ContrastWeights<T>&,                 \
                                      const ReductionConfig&, Mounter<T>&);

TVERSKY_INSTANTIATE_LAYERS(float)
TVERSKY_INSTANTIATE_LAYERS(double)

}  // namespace tversky
