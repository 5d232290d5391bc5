#include "tversky/core/measures.hpp"

#include <cmath>

#include "tversky/autodiff/ops.hpp"

namespace tversky {

namespace {

constexpr double kGmeanEps = 1e-12;
constexpr double kSoftminTau = 1.0;

// Psi(x, y) on the masked-positive domain, plus partials. softmin is the
// Boltzmann-weighted average with tau = 1 (stays within [min,max], so the
// intersection measure keeps its sign); gmean is sqrt(max(x*y, eps)) with the
// gradient clamped to 0 below eps.
template <class T>
T psi_forward(T x, T y, IntersectionReduction r) {
    switch (r) {
        case IntersectionReduction::Min: return x <= y ? x : y;
        case IntersectionReduction::Max: return x >= y ? x : y;
        case IntersectionReduction::Product: return x * y;
        case IntersectionReduction::Mean: return (x + y) / T(2);
        case IntersectionReduction::GMean: {
            double v = static_cast<double>(x) * static_cast<double>(y);
            return static_cast<T>(std::sqrt(std::max(v, kGmeanEps)));
        }
        case IntersectionReduction::SoftMin: {
            double m = std::min<double>(x, y);
            double wx = std::exp(-(static_cast<double>(x) - m) / kSoftminTau);
            double wy = std::exp(-(static_cast<double>(y) - m) / kSoftminTau);
            return static_cast<T>((x * wx + y * wy) / (wx + wy));
        }
    }
    return T(0);
}

template <class T>
void psi_partials(T x, T y, IntersectionReduction r, T& dx, T& dy) {
    switch (r) {
        case IntersectionReduction::Min:
            dx = x <= y ? T(1) : T(0);
            dy = x <= y ? T(0) : T(1);
            return;
        case IntersectionReduction::Max:
            dx = x >= y ? T(1) : T(0);
            dy = x >= y ? T(0) : T(1);
            return;
        case IntersectionReduction::Product:
            dx = y;
            dy = x;
            return;
        case IntersectionReduction::Mean:
            dx = dy = T(0.5);
            return;
        case IntersectionReduction::GMean: {
            double v = static_cast<double>(x) * static_cast<double>(y);
            if (v > kGmeanEps) {
                double s = 2.0 * std::sqrt(v);
                dx = static_cast<T>(y / s);
                dy = static_cast<T>(x / s);
            } else {
                dx = dy = T(0);
            }
            return;
        }
        case IntersectionReduction::SoftMin: {
            double m = std::min<double>(x, y);
            double wx = std::exp(-(static_cast<double>(x) - m) / kSoftminTau);
            double wy = std::exp(-(static_cast<double>(y) - m) / kSoftminTau);
            double s = wx + wy;
            double val = (x * wx + y * wy) / s;
            dx = static_cast<T>((wx / s) * (1.0 - (static_cast<double>(x) - val) / kSoftminTau));
            dy = static_cast<T>((wy / s) * (1.0 - (static_cast<double>(y) - val) / kSoftminTau));
            return;
        }
    }
}

template <class T>
void check_dots(Var<T> adot, Var<T> bdot, const char* op) {
    if (adot.graph != bdot.graph) throw std::invalid_argument(std::string(op) + ": mixed graphs");
    const auto& a = adot.value();
    const auto& b = bdot.value();
    if (a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[1])
        throw std::invalid_argument(std::string(op) + ": dot matrices must share feature count");
}

// The positive-membership decisions are the op's only data-dependent
// branches; feeding them keeps finite-difference probes honest near x.f = 0.
template <class T>
void feed_sign_bits(Graph<T>& g, const Tensor<T>& dots) {
    for (const T& v : dots.data) g.feed_mask_bit(v > T(0));
}

}  // namespace

template <class T>
Var<T> masked_intersection(Var<T> adot, Var<T> bdot, IntersectionReduction psi) {
    check_dots(adot, bdot, "masked_intersection");
    Graph<T>& g0 = *adot.graph;
    const Tensor<T>& av = adot.value();
    const Tensor<T>& bv = bdot.value();
    const int64_t n = av.shape[0], p = bv.shape[0], m = av.shape[1];

    feed_sign_bits(g0, av);
    feed_sign_bits(g0, bv);

    Tensor<T> out({n, p});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < p; ++j) {
            T acc = T(0);
            for (int64_t k = 0; k < m; ++k) {
                T x = av.data[static_cast<size_t>(i * m + k)];
                T y = bv.data[static_cast<size_t>(j * m + k)];
                if (x > T(0) && y > T(0)) {
                    if (psi == IntersectionReduction::Min || psi == IntersectionReduction::Max)
                        g0.feed_mask_bit(x <= y);
                    else if (psi == IntersectionReduction::GMean)
                        g0.feed_mask_bit(static_cast<double>(x) * static_cast<double>(y) > kGmeanEps);
                    acc += psi_forward(x, y, psi);
                }
            }
            out.at(i, j) = acc;
        }

    bool rg = g0.requires_grad(adot.id) || g0.requires_grad(bdot.id);
    auto bw = [ai = adot.id, bi = bdot.id, n, p, m, psi](Graph<T>& g,
                                                         const typename Graph<T>::Node& nd) {
        const Tensor<T>& av2 = g.value(Var<T>{&g, ai});
        const Tensor<T>& bv2 = g.value(Var<T>{&g, bi});
        Tensor<T> ga({n, m}), gb({p, m});
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < p; ++j) {
                T gv = nd.grad.at(i, j);
                if (gv == T(0)) continue;
                for (int64_t k = 0; k < m; ++k) {
                    T x = av2.data[static_cast<size_t>(i * m + k)];
                    T y = bv2.data[static_cast<size_t>(j * m + k)];
                    if (x > T(0) && y > T(0)) {
                        T dx, dy;
                        psi_partials(x, y, psi, dx, dy);
                        ga.data[static_cast<size_t>(i * m + k)] += gv * dx;
                        gb.data[static_cast<size_t>(j * m + k)] += gv * dy;
                    }
                }
            }
        g.accumulate(ai, ga);
        g.accumulate(bi, gb);
    };
    return g0.add_node("masked_intersection", {adot.id, bdot.id}, std::move(out),
                       bw, rg);
}

template <class T>
Var<T> masked_difference(Var<T> adot, Var<T> bdot, DifferenceReduction mode, DiffDirection dir) {
    check_dots(adot, bdot, "masked_difference");
    Graph<T>& g0 = *adot.graph;
    const Tensor<T>& av = adot.value();
    const Tensor<T>& bv = bdot.value();
    const int64_t n = av.shape[0], p = bv.shape[0], m = av.shape[1];
    const bool sub = mode == DifferenceReduction::SubstractMatch;

    feed_sign_bits(g0, av);
    feed_sign_bits(g0, bv);

    Tensor<T> out({n, p});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < p; ++j) {
            T acc = T(0);
            for (int64_t k = 0; k < m; ++k) {
                T x = av.data[static_cast<size_t>(i * m + k)];
                T y = bv.data[static_cast<size_t>(j * m + k)];
                if (dir == DiffDirection::BA) std::swap(x, y);
                // x now measures the minuend side
                if (x > T(0) && y <= T(0)) acc += x;
                if (sub && y > T(0)) {
                    g0.feed_mask_bit(x > y);
                    if (x > y) acc += x - y;
                }
            }
            out.at(i, j) = acc;
        }

    bool rg = g0.requires_grad(adot.id) || g0.requires_grad(bdot.id);
    auto bw = [ai = adot.id, bi = bdot.id, n, p, m, sub, dir](Graph<T>& g,
                                                              const typename Graph<T>::Node& nd) {
        const Tensor<T>& av2 = g.value(Var<T>{&g, ai});
        const Tensor<T>& bv2 = g.value(Var<T>{&g, bi});
        Tensor<T> ga({n, m}), gb({p, m});
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < p; ++j) {
                T gv = nd.grad.at(i, j);
                if (gv == T(0)) continue;
                for (int64_t k = 0; k < m; ++k) {
                    T x = av2.data[static_cast<size_t>(i * m + k)];
                    T y = bv2.data[static_cast<size_t>(j * m + k)];
                    T* gx = &ga.data[static_cast<size_t>(i * m + k)];
                    T* gy = &gb.data[static_cast<size_t>(j * m + k)];
                    if (dir == DiffDirection::BA) {
                        std::swap(x, y);
                        std::swap(gx, gy);
                    }
                    if (x > T(0) && y <= T(0)) *gx += gv;
                    if (sub && y > T(0) && x > y) {
                        *gx += gv;
                        *gy -= gv;
                    }
                }
            }
        g.accumulate(ai, ga);
        g.accumulate(bi, gb);
    };
    return g0.add_node("masked_difference", {adot.id, bdot.id}, std::move(out), bw, rg);
}

template <class T>
Var<T> tversky_similarity_matrix(Var<T> objects, Var<T> prototypes, Var<T> features, Var<T> theta,
                                 Var<T> alpha, Var<T> beta, const ReductionConfig& cfg) {
    if (objects.value().rank() != 2 || prototypes.value().rank() != 2 ||
        features.value().rank() != 2)
        throw std::invalid_argument("tversky_similarity_matrix: expects matrices");
    int64_t d = features.value().shape[1];
    if (objects.value().shape[1] != d || prototypes.value().shape[1] != d)
        throw std::invalid_argument("tversky_similarity_matrix: dimensionality mismatch");
    Var<T> a = objects, b = prototypes;
    if (cfg.normalize) {
        a = l2_normalize_rows(a, /*strict=*/false);
        b = l2_normalize_rows(b, /*strict=*/false);
    }
    Var<T> ft = transpose2d(features);
    Var<T> adot = matmul(a, ft);
    Var<T> bdot = matmul(b, ft);
    Var<T> inter = masked_intersection(adot, bdot, cfg.intersection);
    Var<T> da = masked_difference(adot, bdot, cfg.difference, DiffDirection::AB);
    Var<T> db = masked_difference(adot, bdot, cfg.difference, DiffDirection::BA);
    return sub(sub(scalar_mul(theta, inter), scalar_mul(alpha, da)), scalar_mul(beta, db));
}

namespace {

template <class T>
Var<T> as_row(Var<T> v) {
    const auto& t = v.value();
    if (t.rank() == 1) return reshape(v, {1, t.shape[0]});
    if (t.rank() == 2 && t.shape[0] == 1) return v;
    throw std::invalid_argument("expected a vector or single-row matrix");
}

}  // namespace

template <class T>
Var<T> salience(Graph<T>& g, Var<T> x, Var<T> features) {
    (void)g;
    Var<T> dots = matmul(as_row(x), transpose2d(features));
    return sum(relu(dots));
}

template <class T>
Var<T> intersection_measure(Graph<T>& g, Var<T> a, Var<T> b, Var<T> features,
                            const ReductionConfig& cfg) {
    (void)g;
    Var<T> ft = transpose2d(features);
    Var<T> adot = matmul(as_row(a), ft);
    Var<T> bdot = matmul(as_row(b), ft);
    return reshape(masked_intersection(adot, bdot, cfg.intersection), {});
}

template <class T>
Var<T> difference_measure(Graph<T>& g, Var<T> a, Var<T> b, Var<T> features,
                          const ReductionConfig& cfg) {
    (void)g;
    Var<T> ft = transpose2d(features);
    Var<T> adot = matmul(as_row(a), ft);
    Var<T> bdot = matmul(as_row(b), ft);
    return reshape(masked_difference(adot, bdot, cfg.difference, DiffDirection::AB), {});
}

template <class T>
Var<T> tversky_contrast(Graph<T>& g, Var<T> a, Var<T> b, Var<T> features, Var<T> theta,
                        Var<T> alpha, Var<T> beta, const ReductionConfig& cfg) {
    (void)g;
    if (cfg.normalize) {
        // the pairwise form rejects zero vectors outright
        auto norm_of = [](const Tensor<T>& t) {
            T acc = T(0);
            for (T v : t.data) acc += v * v;
            return std::sqrt(acc);
        };
        if (!(norm_of(a.value()) > T(0)) || !(norm_of(b.value()) > T(0)))
            throw std::domain_error("tversky_contrast: cannot normalize a zero vector");
    }
    return reshape(
        tversky_similarity_matrix(as_row(a), as_row(b), features, theta, alpha, beta, cfg), {});
}

// ---- plain-value forms -------------------------------------------------------

template <class T>
FeatureSet feature_membership(const Tensor<T>& x, const FeatureBank<T>& bank, int64_t object_id) {
    if (x.numel() != bank.dim())
        throw std::invalid_argument("feature_membership: dimension mismatch");
    FeatureSet fs;
    fs.object_id = object_id;
    for (int64_t k = 0; k < bank.size(); ++k) {
        T dot = T(0);
        for (int64_t j = 0; j < bank.dim(); ++j)
            dot += x.data[static_cast<size_t>(j)] * bank.features.at(k, j);
        if (dot > T(0)) {
            fs.member_indices.push_back(k);
            fs.measures.push_back(static_cast<double>(dot));
        }
    }
    return fs;
}

namespace {

template <class T>
std::vector<T> all_dots(const Tensor<T>& x, const FeatureBank<T>& bank) {
    if (x.numel() != bank.dim()) throw std::invalid_argument("measure: dimension mismatch");
    std::vector<T> dots(static_cast<size_t>(bank.size()));
    for (int64_t k = 0; k < bank.size(); ++k) {
        T acc = T(0);
        for (int64_t j = 0; j < bank.dim(); ++j)
            acc += x.data[static_cast<size_t>(j)] * bank.features.at(k, j);
        dots[static_cast<size_t>(k)] = acc;
    }
    return dots;
}

template <class T>
Tensor<T> normalized_copy(const Tensor<T>& x) {
    T acc = T(0);
    for (T v : x.data) acc += v * v;
    T nrm = std::sqrt(acc);
    if (!(nrm > T(0))) throw std::domain_error("normalize: zero vector");
    Tensor<T> out = x;
    for (T& v : out.data) v /= nrm;
    return out;
}

}  // namespace

template <class T>
T salience_value(const Tensor<T>& x, const FeatureBank<T>& bank) {
    T acc = T(0);
    for (T d : all_dots(x, bank))
        if (d > T(0)) acc += d;
    return acc;
}

template <class T>
T intersection_measure_value(const Tensor<T>& a, const Tensor<T>& b, const FeatureBank<T>& bank,
                             const ReductionConfig& cfg) {
    auto da = all_dots(a, bank), db = all_dots(b, bank);
    T acc = T(0);
    for (size_t k = 0; k < da.size(); ++k)
        if (da[k] > T(0) && db[k] > T(0)) acc += psi_forward(da[k], db[k], cfg.intersection);
    return acc;
}

template <class T>
T difference_measure_value(const Tensor<T>& a, const Tensor<T>& b, const FeatureBank<T>& bank,
                           const ReductionConfig& cfg) {
    auto da = all_dots(a, bank), db = all_dots(b, bank);
    T acc = T(0);
    for (size_t k = 0; k < da.size(); ++k) {
        if (da[k] > T(0) && db[k] <= T(0)) acc += da[k];
        if (cfg.difference == DifferenceReduction::SubstractMatch && db[k] > T(0) && da[k] > db[k])
            acc += da[k] - db[k];
    }
    return acc;
}

template <class T>
T tversky_contrast_value(const Tensor<T>& a, const Tensor<T>& b, const FeatureBank<T>& bank,
                         const ContrastWeights<T>& w, const ReductionConfig& cfg) {
    const Tensor<T>* pa = &a;
    const Tensor<T>* pb = &b;
    Tensor<T> na, nb;
    if (cfg.normalize) {
        na = normalized_copy(a);
        nb = normalized_copy(b);
        pa = &na;
        pb = &nb;
    }
    T inter = intersection_measure_value(*pa, *pb, bank, cfg);
    T dab = difference_measure_value(*pa, *pb, bank, cfg);
    T dba = difference_measure_value(*pb, *pa, bank, cfg);
    return w.theta.data[0] * inter - w.alpha.data[0] * dab - w.beta.data[0] * dba;
}

#define TVERSKY_INSTANTIATE_MEASURES(T)                                                         \
    template Var<T> masked_intersection<T>(Var<T>, Var<T>, IntersectionReduction);              \
    template Var<T> masked_difference<T>(Var<T>, Var<T>, DifferenceReduction, DiffDirection);   \
    template Var<T> tversky_similarity_matrix<T>(Var<T>, Var<T>, Var<T>, Var<T>, Var<T>,        \
                                                 Var<T>, const ReductionConfig&);               \
    template Var<T> salience<T>(Graph<T>&, Var<T>, Var<T>);                                     \
    template Var<T> intersection_measure<T>(Graph<T>&, Var<T>, Var<T>, Var<T>,                  \
                                            const ReductionConfig&);                            \
    template Var<T> difference_measure<T>(Graph<T>&, Var<T>, Var<T>, Var<T>,                    \
                                          const ReductionConfig&);                              \
    template Var<T> tversky_contrast<T>(Graph<T>&, Var<T>, Var<T>, Var<T>, Var<T>, Var<T>,      \
                                        Var<T>, const ReductionConfig&);                        \
    template FeatureSet feature_membership<T>(const Tensor<T>&, const FeatureBank<T>&, int64_t); \
    template T salience_value<T>(const Tensor<T>&, const FeatureBank<T>&);                      \
    template T intersection_measure_value<T>(const Tensor<T>&, const Tensor<T>&,                \
                                             const FeatureBank<T>&, const ReductionConfig&);    \
    template T difference_measure_value<T>(const Tensor<T>&, const Tensor<T>&,                  \
                                           const FeatureBank<T>&, const ReductionConfig&);      \
    template T tversky_contrast_value<T>(const Tensor<T>&, const Tensor<T>&,                    \
                                         const FeatureBank<T>&, const ContrastWeights<T>&,      \
                                         const ReductionConfig&);

TVERSKY_INSTANTIATE_MEASURES(float)
TVERSKY_INSTANTIATE_MEASURES(double)

}  // namespace tversky
