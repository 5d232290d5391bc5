#include "tversky/autodiff/ops.hpp"

#include <cmath>

namespace tversky {

namespace {

template <class T>
void check_same_graph(Var<T> a, Var<T> b, const char* op) {
    if (a.graph != b.graph) throw std::invalid_argument(std::string(op) + ": mixed graphs");
}

template <class T>
void check_same_shape(Var<T> a, Var<T> b, const char* op) {
    if (!a.value().same_shape(b.value()))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.value().shape_str() +
                                    " vs " + b.value().shape_str());
}

}  // namespace

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
    check_same_graph(a, b, "add");
    check_same_shape(a, b, "add");
    Tensor<T> out = a.value();
    const Tensor<T>& bv = b.value();
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
    bool rg = a.graph->requires_grad(a.id) || a.graph->requires_grad(b.id);
    auto bw = [ai = a.id, bi = b.id](Graph<T>& g, const typename Graph<T>::Node& n) {
        g.accumulate(ai, n.grad);
        g.accumulate(bi, n.grad);
    };
    return a.graph->add_node("add", {a.id, b.id}, std::move(out), bw, rg);
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b) {
    check_same_graph(a, b, "sub");
    check_same_shape(a, b, "sub");
    Tensor<T> out = a.value();
    const Tensor<T>& bv = b.value();
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= bv.data[i];
    bool rg = a.graph->requires_grad(a.id) || a.graph->requires_grad(b.id);
    auto bw = [ai = a.id, bi = b.id](Graph<T>& g, const typename Graph<T>::Node& n) {
        g.accumulate(ai, n.grad);
        Tensor<T> gb = n.grad;
        for (T& v : gb.data) v = -v;
        g.accumulate(bi, gb);
    };
    return a.graph->add_node("sub", {a.id, b.id}, std::move(out), bw, rg);
}

template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
    check_same_graph(a, b, "mul");
    check_same_shape(a, b, "mul");
    Tensor<T> out = a.value();
    const Tensor<T>& bv = b.value();
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
    bool rg = a.graph->requires_grad(a.id) || a.graph->requires_grad(b.id);
    auto bw = [ai = a.id, bi = b.id](Graph<T>& g, const typename Graph<T>::Node& n) {
        const Tensor<T>& av = g.value(Var<T>{&g, ai});
        const Tensor<T>& bv2 = g.value(Var<T>{&g, bi});
        Tensor<T> ga = n.grad, gb = n.grad;
        for (size_t i = 0; i < ga.data.size(); ++i) {
            ga.data[i] *= bv2.data[i];
            gb.data[i] *= av.data[i];
        }
        g.accumulate(ai, ga);
        g.accumulate(bi, gb);
    };
    return a.graph->add_node("mul", {a.id, b.id}, std::move(out), bw, rg);
}

template <class T>
Var<T> scale(Var<T> a, double c) {
    Tensor<T> out = a.value();
    for (T& v : out.data) v = static_cast<T>(v * c);
    bool rg = a.graph->requires_grad(a.id);
    auto bw = [ai = a.id, c](Graph<T>& g, const typename Graph<T>::Node& n) {
        Tensor<T> ga = n.grad;
        for (T& v : ga.data) v = static_cast<T>(v * c);
        g.accumulate(ai, ga);
    };
    return a.graph->add_node("scale", {a.id}, std::move(out), bw, rg);
}

template <class T>
Var<T> scalar_mul(Var<T> s, Var<T> x) {
    check_same_graph(s, x, "scalar_mul");
    if (!s.value().is_scalar()) throw std::invalid_argument("scalar_mul: s must be scalar");
    T sv = s.value().data[0];
    Tensor<T> out = x.value();
    for (T& v : out.data) v *= sv;
    bool rg = s.graph->requires_grad(s.id) || s.graph->requires_grad(x.id);
    auto bw = [si = s.id, xi = x.id](Graph<T>& g, const typename Graph<T>::Node& n) {
        const Tensor<T>& xv = g.value(Var<T>{&g, xi});
        T sv2 = g.value(Var<T>{&g, si}).data[0];
        T ds = T(0);
        for (size_t i = 0; i < xv.data.size(); ++i) ds += n.grad.data[i] * xv.data[i];
        Tensor<T> gs = Tensor<T>::zeros(g.value(Var<T>{&g, si}).shape);
        gs.data[0] = ds;
        g.accumulate(si, gs);
        Tensor<T> gx = n.grad;
        for (T& v : gx.data) v *= sv2;
        g.accumulate(xi, gx);
    };
    return s.graph->add_node("scalar_mul", {s.id, x.id}, std::move(out), bw, rg);
}

template <class T>
Var<T> neg(Var<T> a) {
    return scale(a, -1.0);
}

template <class T>
Var<T> sum(Var<T> a) {
    T acc = T(0);
    for (T v : a.value().data) acc += v;
    bool rg = a.graph->requires_grad(a.id);
    auto bw = [ai = a.id](Graph<T>& g, const typename Graph<T>::Node& n) {
        const Tensor<T>& av = g.value(Var<T>{&g, ai});
        Tensor<T> ga = Tensor<T>::full(av.shape, n.grad.data[0]);
        g.accumulate(ai, ga);
    };
    return a.graph->add_node("sum", {a.id}, Tensor<T>::scalar(acc), bw, rg);
}

template <class T>
Var<T> mean(Var<T> a) {
    int64_t n = a.value().numel();
    if (n == 0) throw std::invalid_argument("mean: empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(n));
}

template <class T>
Var<T> relu(Var<T> x) {
    Tensor<T> out = x.value();
    Graph<T>& g0 = *x.graph;
    for (T& v : out.data) {
        bool pos = v > T(0);
        g0.feed_mask_bit(pos);
        if (!pos) v = T(0);
    }
    bool rg = g0.requires_grad(x.id);
    auto bw = [xi = x.id](Graph<T>& g, const typename Graph<T>::Node& n) {
        const Tensor<T>& xv = g.value(Var<T>{&g, xi});
        Tensor<T> gx = n.grad;
        // subgradient 0 at x == 0
        for (size_t i = 0; i < gx.data.size(); ++i)
            if (!(xv.data[i] > T(0))) gx.data[i] = T(0);
        g.accumulate(xi, gx);
    };
    return g0.add_node("relu", {x.id}, std::move(out), bw, rg);
}

template <class T>
Var<T> matmul(Var<T> a, Var<T> b) {
    check_same_graph(a, b, "matmul");
    const Tensor<T>& av = a.value();
    const Tensor<T>& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.shape[1] != bv.shape[0])
        throw std::invalid_argument("matmul: shape mismatch " + av.shape_str() + " x " +
                                    bv.shape_str());
    int64_t m = av.shape[0], k = av.shape[1], n = bv.shape[1];
    Tensor<T> out({m, n});
    for (int64_t i = 0; i < m; ++i) {
        const T* arow = &av.data[static_cast<size_t>(i * k)];
        T* orow = &out.data[static_cast<size_t>(i * n)];
        for (int64_t kk = 0; kk < k; ++kk) {
            T av_ik = arow[kk];
            const T* brow = &bv.data[static_cast<size_t>(kk * n)];
            for (int64_t j = 0; j < n; ++j) orow[j] += av_ik * brow[j];
        }
    }
    bool rg = a.graph->requires_grad(a.id) || a.graph->requires_grad(b.id);
    auto bw = [ai = a.id, bi = b.id, m, k, n](Graph<T>& g, const typename Graph<T>::Node& nd) {
        const Tensor<T>& av2 = g.value(Var<T>{&g, ai});
        const Tensor<T>& bv2 = g.value(Var<T>{&g, bi});
        const Tensor<T>& go = nd.grad;
        if (g.requires_grad(ai)) {
            // dA = dC * B^T
            Tensor<T> ga({m, k});
            for (int64_t i = 0; i < m; ++i)
                for (int64_t kk = 0; kk < k; ++kk) {
                    T acc = T(0);
                    for (int64_t j = 0; j < n; ++j)
                        acc += go.data[static_cast<size_t>(i * n + j)] *
                               bv2.data[static_cast<size_t>(kk * n + j)];
                    ga.data[static_cast<size_t>(i * k + kk)] = acc;
                }
            g.accumulate(ai, ga);
        }
        if (g.requires_grad(bi)) {
            // dB = A^T * dC
            Tensor<T> gb({k, n});
            for (int64_t kk = 0; kk < k; ++kk)
                for (int64_t i = 0; i < m; ++i) {
                    T av_ik = av2.data[static_cast<size_t>(i * k + kk)];
                    for (int64_t j = 0; j < n; ++j)
                        gb.data[static_cast<size_t>(kk * n + j)] +=
                            av_ik * go.data[static_cast<size_t>(i * n + j)];
                }
            g.accumulate(bi, gb);
        }
    };
    return a.graph->add_node("matmul", {a.id, b.id}, std::move(out), bw, rg);
}

template <class T>
Var<T> transpose2d(Var<T> a) {
    const Tensor<T>& av = a.value();
    if (av.rank() != 2) throw std::invalid_argument("transpose2d: rank != 2");
    int64_t r = av.shape[0], c = av.shape[1];
    Tensor<T> out({c, r});
    for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j)
            out.data[static_cast<size_t>(j * r + i)] = av.data[static_cast<size_t>(i * c + j)];
    bool rg = a.graph->requires_grad(a.id);
    auto bw = [ai = a.id, r, c](Graph<T>& g, const typename Graph<T>::Node& n) {
        Tensor<T> ga({r, c});
        for (int64_t i = 0; i < r; ++i)
            for (int64_t j = 0; j < c; ++j)
                ga.data[static_cast<size_t>(i * c + j)] = n.grad.data[static_cast<size_t>(j * r + i)];
        g.accumulate(ai, ga);
    };
    return a.graph->add_node("transpose", {a.id}, std::move(out), bw, rg);
}

template <class T>
Var<T> reshape(Var<T> a, std::vector<int64_t> shape) {
    const Tensor<T>& av = a.value();
    if (Tensor<T>::count(shape) != av.numel())
        throw std::invalid_argument("reshape: element count mismatch");
    Tensor<T> out(std::move(shape), av.data);
    bool rg = a.graph->requires_grad(a.id);
    auto bw = [ai = a.id](Graph<T>& g, const typename Graph<T>::Node& n) {
        const Tensor<T>& av2 = g.value(Var<T>{&g, ai});
        Tensor<T> ga(av2.shape, n.grad.data);
        g.accumulate(ai, ga);
    };
    return a.graph->add_node("reshape", {a.id}, std::move(out), bw, rg);
}

template <class T>
Var<T> concat_cols(const std::vector<Var<T>>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_cols: no inputs");
    Graph<T>* g = xs[0].graph;
    int64_t n = xs[0].value().shape[0];
    int64_t total = 0;
    std::vector<int32_t> ids;
    std::vector<int64_t> widths;
    bool rg = false;
    for (Var<T> x : xs) {
        if (x.graph != g) throw std::invalid_argument("concat_cols: mixed graphs");
        const Tensor<T>& v = x.value();
        if (v.rank() != 2 || v.shape[0] != n)
            throw std::invalid_argument("concat_cols: row mismatch");
        total += v.shape[1];
        ids.push_back(x.id);
        widths.push_back(v.shape[1]);
        rg = rg || g->requires_grad(x.id);
    }
    Tensor<T> out({n, total});
    int64_t off = 0;
    for (size_t t = 0; t < ids.size(); ++t) {
        const Tensor<T>& v = g->node(ids[t]).value;
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < widths[t]; ++j)
                out.data[static_cast<size_t>(i * total + off + j)] =
                    v.data[static_cast<size_t>(i * widths[t] + j)];
        off += widths[t];
    }
    auto bw = [ids, widths, n, total](Graph<T>& g2, const typename Graph<T>::Node& nd) {
        int64_t o = 0;
        for (size_t t = 0; t < ids.size(); ++t) {
            if (g2.requires_grad(ids[t])) {
                Tensor<T> gx({n, widths[t]});
                for (int64_t i = 0; i < n; ++i)
                    for (int64_t j = 0; j < widths[t]; ++j)
                        gx.data[static_cast<size_t>(i * widths[t] + j)] =
                            nd.grad.data[static_cast<size_t>(i * total + o + j)];
                g2.accumulate(ids[t], gx);
            }
            o += widths[t];
        }
    };
    return g->add_node("concat_cols", std::move(ids), std::move(out), bw, rg);
}

template <class T>
Var<T> add_bias(Var<T> x, Var<T> bias) {
    check_same_graph(x, bias, "add_bias");
    const Tensor<T>& xv = x.value();
    const Tensor<T>& bv = bias.value();
    if (xv.rank() != 2 || bv.rank() != 1 || bv.shape[0] != xv.shape[1])
        throw std::invalid_argument("add_bias: shape mismatch");
    int64_t n = xv.shape[0], p = xv.shape[1];
    Tensor<T> out = xv;
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < p; ++j) out.data[static_cast<size_t>(i * p + j)] += bv.data[static_cast<size_t>(j)];
    bool rg = x.graph->requires_grad(x.id) || x.graph->requires_grad(bias.id);
    auto bw = [xi = x.id, bi = bias.id, n, p](Graph<T>& g, const typename Graph<T>::Node& nd) {
        g.accumulate(xi, nd.grad);
        if (g.requires_grad(bi)) {
            Tensor<T> gb({p});
            for (int64_t i = 0; i < n; ++i)
                for (int64_t j = 0; j < p; ++j)
                    gb.data[static_cast<size_t>(j)] += nd.grad.data[static_cast<size_t>(i * p + j)];
            g.accumulate(bi, gb);
        }
    };
    return x.graph->add_node("add_bias", {x.id, bias.id}, std::move(out), bw, rg);
}

template <class T>
Var<T> slice_rows(Var<T> x, int64_t begin, int64_t end) {
    const Tensor<T>& xv = x.value();
    if (xv.rank() < 1) throw std::invalid_argument("slice_rows: rank must be >= 1");
    int64_t rows = xv.shape[0];
    if (begin < 0 || end > rows || begin >= end)
        throw std::invalid_argument("slice_rows: bad range");
    int64_t stride = xv.numel() / std::max<int64_t>(rows, 1);
    std::vector<int64_t> oshape = xv.shape;
    oshape[0] = end - begin;
    Tensor<T> out(oshape);
    std::copy(xv.data.begin() + begin * stride, xv.data.begin() + end * stride, out.data.begin());
    bool rg = x.graph->requires_grad(x.id);
    auto bw = [xi = x.id, begin, stride](Graph<T>& g, const typename Graph<T>::Node& nd) {
        const Tensor<T>& xv2 = g.value(Var<T>{&g, xi});
        Tensor<T> gx = Tensor<T>::zeros(xv2.shape);
        std::copy(nd.grad.data.begin(), nd.grad.data.end(), gx.data.begin() + begin * stride);
        g.accumulate(xi, gx);
    };
    return x.graph->add_node("slice_rows", {x.id}, std::move(out), bw, rg);
}

template <class T>
Var<T> l2_normalize_rows(Var<T> x, bool strict) {
    const Tensor<T>& xv = x.value();
    int64_t rows, cols;
    if (xv.rank() == 1) {
        rows = 1;
        cols = xv.shape[0];
    } else if (xv.rank() == 2) {
        rows = xv.shape[0];
        cols = xv.shape[1];
    } else {
        throw std::invalid_argument("l2_normalize_rows: rank must be 1 or 2");
    }
    Tensor<T> out = xv;
    std::vector<T> norms(static_cast<size_t>(rows));
    Graph<T>& g0 = *x.graph;
    for (int64_t i = 0; i < rows; ++i) {
        T acc = T(0);
        for (int64_t j = 0; j < cols; ++j) {
            T v = xv.data[static_cast<size_t>(i * cols + j)];
            acc += v * v;
        }
        T nrm = std::sqrt(acc);
        if (!(nrm > T(0)) && strict)
            throw std::domain_error("l2_normalize_rows: zero-norm row cannot be normalized");
        g0.feed_mask_bit(nrm > T(0));
        norms[static_cast<size_t>(i)] = nrm;
        if (nrm > T(0))
            for (int64_t j = 0; j < cols; ++j) out.data[static_cast<size_t>(i * cols + j)] /= nrm;
    }
    bool rg = g0.requires_grad(x.id);
    // d(x/||x||) pulls back as (g - y (y.g)) / ||x||, row by row
    auto bw = [xi = x.id, rows, cols, norms](Graph<T>& g, const typename Graph<T>::Node& nd) {
        const Tensor<T>& y = nd.value;
        Tensor<T> gx(g.value(Var<T>{&g, xi}).shape);
        for (int64_t i = 0; i < rows; ++i) {
            if (!(norms[static_cast<size_t>(i)] > T(0))) continue;  // zero row stays zero
            T dotyg = T(0);
            for (int64_t j = 0; j < cols; ++j)
                dotyg += y.data[static_cast<size_t>(i * cols + j)] *
                         nd.grad.data[static_cast<size_t>(i * cols + j)];
            for (int64_t j = 0; j < cols; ++j) {
                size_t idx = static_cast<size_t>(i * cols + j);
                gx.data[idx] = (nd.grad.data[idx] - y.data[idx] * dotyg) / norms[static_cast<size_t>(i)];
            }
        }
        g.accumulate(xi, gx);
    };
    return g0.add_node("l2norm", {x.id}, std::move(out), bw, rg);
}

#define TVERSKY_INSTANTIATE_OPS(T)                                          \
    template Var<T> add<T>(Var<T>, Var<T>);                                 \
    template Var<T> sub<T>(Var<T>, Var<T>);                                 \
    template Var<T> mul<T>(Var<T>, Var<T>);                                 \
    template Var<T> scale<T>(Var<T>, double);                               \
    template Var<T> scalar_mul<T>(Var<T>, Var<T>);                          \
    template Var<T> neg<T>(Var<T>);                                         \
    template Var<T> sum<T>(Var<T>);                                         \
    template Var<T> mean<T>(Var<T>);                                        \
    template Var<T> relu<T>(Var<T>);                                        \
    template Var<T> matmul<T>(Var<T>, Var<T>);                              \
    template Var<T> transpose2d<T>(Var<T>);                                 \
    template Var<T> reshape<T>(Var<T>, std::vector<int64_t>);               \
    template Var<T> concat_cols<T>(const std::vector<Var<T>>&);             \
    template Var<T> add_bias<T>(Var<T>, Var<T>);                            \
    template Var<T> slice_rows<T>(Var<T>, int64_t, int64_t);                \
    template Var<T> l2_normalize_rows<T>(Var<T>, bool);

TVERSKY_INSTANTIATE_OPS(float)
TVERSKY_INSTANTIATE_OPS(double)

}  // namespace tversky
