#include "tversky/autodiff/nn.hpp"

#include <cmath>
#include <memory>

#include "tversky/autodiff/parallel.hpp"

namespace tversky {

namespace {

struct ConvDims {
    int64_t n, ci, h, w, co, kh, kw, oh, ow;
    int stride, padding;
};

ConvDims conv_dims(const std::vector<int64_t>& in, const std::vector<int64_t>& k, int stride,
                   int padding) {
    if (in.size() != 4 || k.size() != 4) throw std::invalid_argument("conv2d: rank must be 4");
    if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
    if (padding < 0) throw std::invalid_argument("conv2d: padding must be >= 0");
    if (in[1] != k[1]) throw std::invalid_argument("conv2d: channel mismatch");
    ConvDims d{in[0], in[1], in[2], in[3], k[0], k[2], k[3], 0, 0, stride, padding};
    int64_t eh = d.h + 2 * padding - d.kh, ew = d.w + 2 * padding - d.kw;
    if (eh < 0 || ew < 0) throw std::invalid_argument("conv2d: kernel larger than padded input");
    d.oh = eh / stride + 1;
    d.ow = ew / stride + 1;
    return d;
}

}  // namespace

template <class T>
Var<T> conv2d(Var<T> input, Var<T> kernels, int stride, int padding) {
    if (input.graph != kernels.graph) throw std::invalid_argument("conv2d: mixed graphs");
    const Tensor<T>& iv = input.value();
    const Tensor<T>& kv = kernels.value();
    ConvDims d = conv_dims(iv.shape, kv.shape, stride, padding);
    Tensor<T> out({d.n, d.co, d.oh, d.ow});

    const int64_t in_chw = d.ci * d.h * d.w, in_hw = d.h * d.w;
    const int64_t k_cikk = d.ci * d.kh * d.kw, k_kk = d.kh * d.kw;
    const int64_t out_cohw = d.co * d.oh * d.ow, out_hw = d.oh * d.ow;

    const bool fast = d.stride == 1 && d.padding == 0;
    parallel_for(d.n, 8, [&](int64_t nb, int64_t ne) {
        for (int64_t n = nb; n < ne; ++n) {
            const T* in = &iv.data[static_cast<size_t>(n * in_chw)];
            T* op = &out.data[static_cast<size_t>(n * out_cohw)];
            if (fast) {
                // shifted-row accumulation: branch-free, contiguous inner loop
                for (int64_t co = 0; co < d.co; ++co) {
                    T* oplane = op + co * out_hw;
                    const T* kbase = &kv.data[static_cast<size_t>(co * k_cikk)];
                    for (int64_t ci = 0; ci < d.ci; ++ci) {
                        const T* ip = in + ci * in_hw;
                        const T* kp = kbase + ci * k_kk;
                        for (int64_t kh = 0; kh < d.kh; ++kh)
                            for (int64_t kw = 0; kw < d.kw; ++kw) {
                                const T kval = kp[kh * d.kw + kw];
                                for (int64_t oh = 0; oh < d.oh; ++oh) {
                                    const T* irow = ip + (oh + kh) * d.w + kw;
                                    T* orow = oplane + oh * d.ow;
                                    for (int64_t ow = 0; ow < d.ow; ++ow)
                                        orow[ow] += kval * irow[ow];
                                }
                            }
                    }
                }
                continue;
            }
            for (int64_t co = 0; co < d.co; ++co) {
                const T* kbase = &kv.data[static_cast<size_t>(co * k_cikk)];
                for (int64_t oh = 0; oh < d.oh; ++oh)
                    for (int64_t ow = 0; ow < d.ow; ++ow) {
                        T acc = T(0);
                        for (int64_t ci = 0; ci < d.ci; ++ci) {
                            const T* ip = in + ci * in_hw;
                            const T* kp = kbase + ci * k_kk;
                            for (int64_t kh = 0; kh < d.kh; ++kh) {
                                int64_t ih = oh * d.stride - d.padding + kh;
                                if (ih < 0 || ih >= d.h) continue;
                                for (int64_t kw = 0; kw < d.kw; ++kw) {
                                    int64_t iw = ow * d.stride - d.padding + kw;
                                    if (iw < 0 || iw >= d.w) continue;
                                    acc += ip[ih * d.w + iw] * kp[kh * d.kw + kw];
                                }
                            }
                        }
                        op[co * out_hw + oh * d.ow + ow] = acc;
                    }
            }
        }
    });

    bool rg = input.graph->requires_grad(input.id) || input.graph->requires_grad(kernels.id);
    auto bw = [ii = input.id, ki = kernels.id, d, in_chw, in_hw, k_cikk, k_kk, out_cohw,
               out_hw](Graph<T>& g, const typename Graph<T>::Node& nd) {
        const Tensor<T>& iv2 = g.value(Var<T>{&g, ii});
        const Tensor<T>& kv2 = g.value(Var<T>{&g, ki});
        const Tensor<T>& go = nd.grad;
        bool need_input = g.requires_grad(ii);
        bool need_kernel = g.requires_grad(ki);

        Tensor<T> gi = need_input ? Tensor<T>::zeros(iv2.shape) : Tensor<T>();
        auto chunks = partition_ranges(d.n, 8);
        std::vector<Tensor<T>> gk_parts;
        if (need_kernel) gk_parts.assign(chunks.size(), Tensor<T>::zeros(kv2.shape));

        const bool fast = d.stride == 1 && d.padding == 0;
        run_chunks(chunks, [&](size_t chunk, int64_t nb, int64_t ne) {
            for (int64_t n = nb; n < ne; ++n) {
                const T* in = &iv2.data[static_cast<size_t>(n * in_chw)];
                const T* gop = &go.data[static_cast<size_t>(n * out_cohw)];
                T* gip = need_input ? &gi.data[static_cast<size_t>(n * in_chw)] : nullptr;
                T* gkp = need_kernel ? gk_parts[chunk].data.data() : nullptr;
                if (fast) {
                    for (int64_t co = 0; co < d.co; ++co) {
                        const T* goplane = gop + co * out_hw;
                        const T* kbase = &kv2.data[static_cast<size_t>(co * k_cikk)];
                        for (int64_t ci = 0; ci < d.ci; ++ci)
                            for (int64_t kh = 0; kh < d.kh; ++kh)
                                for (int64_t kw = 0; kw < d.kw; ++kw) {
                                    const T kval = kbase[ci * k_kk + kh * d.kw + kw];
                                    T kacc = T(0);
                                    for (int64_t oh = 0; oh < d.oh; ++oh) {
                                        const T* grow = goplane + oh * d.ow;
                                        const int64_t ibase = ci * in_hw + (oh + kh) * d.w + kw;
                                        if (gip) {
                                            T* girow = gip + ibase;
                                            for (int64_t ow = 0; ow < d.ow; ++ow)
                                                girow[ow] += kval * grow[ow];
                                        }
                                        if (gkp) {
                                            const T* irow = in + ibase;
                                            for (int64_t ow = 0; ow < d.ow; ++ow)
                                                kacc += grow[ow] * irow[ow];
                                        }
                                    }
                                    if (gkp) gkp[co * k_cikk + ci * k_kk + kh * d.kw + kw] += kacc;
                                }
                    }
                    continue;
                }
                for (int64_t co = 0; co < d.co; ++co) {
                    const T* kbase = &kv2.data[static_cast<size_t>(co * k_cikk)];
                    for (int64_t oh = 0; oh < d.oh; ++oh)
                        for (int64_t ow = 0; ow < d.ow; ++ow) {
                            T gv = gop[co * out_hw + oh * d.ow + ow];
                            if (gv == T(0)) continue;
                            for (int64_t ci = 0; ci < d.ci; ++ci) {
                                for (int64_t kh = 0; kh < d.kh; ++kh) {
                                    int64_t ih = oh * d.stride - d.padding + kh;
                                    if (ih < 0 || ih >= d.h) continue;
                                    for (int64_t kw = 0; kw < d.kw; ++kw) {
                                        int64_t iw = ow * d.stride - d.padding + kw;
                                        if (iw < 0 || iw >= d.w) continue;
                                        if (gip)
                                            gip[ci * in_hw + ih * d.w + iw] +=
                                                gv * kbase[ci * k_kk + kh * d.kw + kw];
                                        if (gkp)
                                            gkp[co * k_cikk + ci * k_kk + kh * d.kw + kw] +=
                                                gv * in[ci * in_hw + ih * d.w + iw];
                                    }
                                }
                            }
                        }
                }
            }
        });

        if (need_input) g.accumulate(ii, gi);
        if (need_kernel) {
            // combine per-chunk kernel grads in chunk order
            Tensor<T> gk = Tensor<T>::zeros(kv2.shape);
            for (const Tensor<T>& part : gk_parts)
                for (size_t i = 0; i < gk.data.size(); ++i) gk.data[i] += part.data[i];
            g.accumulate(ki, gk);
        }
    };
    return input.graph->add_node("conv2d", {input.id, kernels.id}, std::move(out),
                                 bw, rg);
}

template <class T>
Var<T> global_avg_pool(Var<T> x) {
    const Tensor<T>& xv = x.value();
    if (xv.rank() != 4) throw std::invalid_argument("global_avg_pool: rank must be 4");
    int64_t n = xv.shape[0], c = xv.shape[1], h = xv.shape[2], w = xv.shape[3];
    if (h * w == 0) throw std::invalid_argument("global_avg_pool: empty spatial dims");
    Tensor<T> out({n, c});
    const T inv = T(1) / static_cast<T>(h * w);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < c; ++j) {
            const T* p = &xv.data[static_cast<size_t>((i * c + j) * h * w)];
            T acc = T(0);
            for (int64_t k = 0; k < h * w; ++k) acc += p[k];
            out.data[static_cast<size_t>(i * c + j)] = acc * inv;
        }
    bool rg = x.graph->requires_grad(x.id);
    auto bw = [xi = x.id, n, c, h, w, inv](Graph<T>& g, const typename Graph<T>::Node& nd) {
        Tensor<T> gx({n, c, h, w});
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < c; ++j) {
                T gv = nd.grad.data[static_cast<size_t>(i * c + j)] * inv;
                T* p = &gx.data[static_cast<size_t>((i * c + j) * h * w)];
                for (int64_t k = 0; k < h * w; ++k) p[k] = gv;
            }
        g.accumulate(xi, gx);
    };
    return x.graph->add_node("gap", {x.id}, std::move(out), bw, rg);
}

template <class T>
Var<T> add_channel_bias(Var<T> x, Var<T> bias) {
    if (x.graph != bias.graph) throw std::invalid_argument("add_channel_bias: mixed graphs");
    const Tensor<T>& xv = x.value();
    const Tensor<T>& bv = bias.value();
    if (xv.rank() != 4 || bv.rank() != 1 || bv.shape[0] != xv.shape[1])
        throw std::invalid_argument("add_channel_bias: shape mismatch");
    int64_t n = xv.shape[0], c = xv.shape[1], hw = xv.shape[2] * xv.shape[3];
    Tensor<T> out = xv;
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < c; ++j) {
            T b = bv.data[static_cast<size_t>(j)];
            T* p = &out.data[static_cast<size_t>((i * c + j) * hw)];
            for (int64_t k = 0; k < hw; ++k) p[k] += b;
        }
    bool rg = x.graph->requires_grad(x.id) || x.graph->requires_grad(bias.id);
    auto bw = [xi = x.id, bi = bias.id, n, c, hw](Graph<T>& g, const typename Graph<T>::Node& nd) {
        g.accumulate(xi, nd.grad);
        if (g.requires_grad(bi)) {
            Tensor<T> gb({c});
            for (int64_t i = 0; i < n; ++i)
                for (int64_t j = 0; j < c; ++j) {
                    const T* p = &nd.grad.data[static_cast<size_t>((i * c + j) * hw)];
                    T acc = T(0);
                    for (int64_t k = 0; k < hw; ++k) acc += p[k];
                    gb.data[static_cast<size_t>(j)] += acc;
                }
            g.accumulate(bi, gb);
        }
    };
    return x.graph->add_node("add_channel_bias", {x.id, bias.id}, std::move(out), bw, rg);
}

template <class T>
Var<T> maxpool2(Var<T> x) {
    const Tensor<T>& xv = x.value();
    if (xv.rank() != 4) throw std::invalid_argument("maxpool2: rank must be 4");
    int64_t n = xv.shape[0], c = xv.shape[1], h = xv.shape[2], w = xv.shape[3];
    int64_t oh = h / 2, ow = w / 2;
    if (oh < 1 || ow < 1) throw std::invalid_argument("maxpool2: input too small");
    Tensor<T> out({n, c, oh, ow});
    std::vector<int32_t> argidx(static_cast<size_t>(out.numel()));
    Graph<T>& g0 = *x.graph;
    for (int64_t i = 0; i < n * c; ++i) {
        const T* p = &xv.data[static_cast<size_t>(i * h * w)];
        for (int64_t y = 0; y < oh; ++y)
            for (int64_t z = 0; z < ow; ++z) {
                int64_t best = (2 * y) * w + 2 * z;
                T bv = p[best];
                for (int dy = 0; dy < 2; ++dy)
                    for (int dz = 0; dz < 2; ++dz) {
                        int64_t idx = (2 * y + dy) * w + (2 * z + dz);
                        if (p[idx] > bv) {
                            bv = p[idx];
                            best = idx;
                        }
                    }
                size_t o = static_cast<size_t>((i * oh + y) * ow + z);
                out.data[o] = bv;
                argidx[o] = static_cast<int32_t>(best);
                g0.feed_mask_bit(best & 1);
                g0.feed_mask_bit((best >> 1) & 1);
            }
    }
    bool rg = g0.requires_grad(x.id);
    auto bw = [xi = x.id, n, c, h, w, oh, ow, argidx](Graph<T>& g,
                                                      const typename Graph<T>::Node& nd) {
        Tensor<T> gx({n, c, h, w});
        for (int64_t i = 0; i < n * c; ++i) {
            T* p = &gx.data[static_cast<size_t>(i * h * w)];
            for (int64_t y = 0; y < oh; ++y)
                for (int64_t z = 0; z < ow; ++z) {
                    size_t o = static_cast<size_t>((i * oh + y) * ow + z);
                    p[argidx[o]] += nd.grad.data[o];
                }
        }
        g.accumulate(xi, gx);
    };
    return g0.add_node("maxpool2", {x.id}, std::move(out), bw, rg);
}

template <class T>
Var<T> dropout(Var<T> x, double rate) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
    Graph<T>& g0 = *x.graph;
    if (!g0.training || rate == 0.0) return x;
    const Tensor<T>& xv = x.value();
    Tensor<T> out = xv;
    auto mask = std::make_shared<std::vector<T>>(xv.data.size());
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    for (size_t i = 0; i < out.data.size(); ++i) {
        T m = g0.rng.bernoulli(rate) ? T(0) : keep_scale;
        (*mask)[i] = m;
        out.data[i] *= m;
    }
    bool rg = g0.requires_grad(x.id);
    auto bw = [xi = x.id, mask](Graph<T>& g, const typename Graph<T>::Node& nd) {
        Tensor<T> gx = nd.grad;
        for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] *= (*mask)[i];
        g.accumulate(xi, gx);
    };
    return g0.add_node("dropout", {x.id}, std::move(out), bw, rg);
}

template <class T>
Var<T> softmax_cross_entropy(Var<T> logits, const std::vector<int64_t>& labels) {
    const Tensor<T>& lv = logits.value();
    if (lv.rank() != 2) throw std::invalid_argument("softmax_cross_entropy: logits rank must be 2");
    int64_t n = lv.shape[0], c = lv.shape[1];
    if (static_cast<int64_t>(labels.size()) != n)
        throw std::invalid_argument("softmax_cross_entropy: label count mismatch");
    for (int64_t l : labels)
        if (l < 0 || l >= c) throw std::out_of_range("softmax_cross_entropy: label out of range");
    double total = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const T* row = &lv.data[static_cast<size_t>(i * c)];
        T m = row[0];
        for (int64_t j = 1; j < c; ++j) m = std::max(m, row[j]);
        double lse = 0.0;
        for (int64_t j = 0; j < c; ++j) lse += std::exp(static_cast<double>(row[j] - m));
        lse = static_cast<double>(m) + std::log(lse);
        total += lse - static_cast<double>(row[labels[static_cast<size_t>(i)]]);
    }
    Tensor<T> out = Tensor<T>::scalar(static_cast<T>(total / static_cast<double>(n)));
    bool rg = logits.graph->requires_grad(logits.id);
    auto bw = [li = logits.id, labels, n, c](Graph<T>& g, const typename Graph<T>::Node& nd) {
        const Tensor<T>& lv2 = g.value(Var<T>{&g, li});
        Tensor<T> gl({n, c});
        T gscale = nd.grad.data[0] / static_cast<T>(n);
        for (int64_t i = 0; i < n; ++i) {
            const T* row = &lv2.data[static_cast<size_t>(i * c)];
            T m = row[0];
            for (int64_t j = 1; j < c; ++j) m = std::max(m, row[j]);
            double z = 0.0;
            for (int64_t j = 0; j < c; ++j) z += std::exp(static_cast<double>(row[j] - m));
            for (int64_t j = 0; j < c; ++j) {
                double p = std::exp(static_cast<double>(row[j] - m)) / z;
                double onehot = (j == labels[static_cast<size_t>(i)]) ? 1.0 : 0.0;
                gl.data[static_cast<size_t>(i * c + j)] = static_cast<T>((p - onehot)) * gscale;
            }
        }
        g.accumulate(li, gl);
    };
    return logits.graph->add_node("softmax_ce", {logits.id}, std::move(out), bw, rg);
}

template <class T>
int64_t argmax_row(const Tensor<T>& m, int64_t row) {
    int64_t c = m.shape.back();
    const T* p = &m.data[static_cast<size_t>(row * c)];
    int64_t best = 0;
    for (int64_t j = 1; j < c; ++j)
        if (p[j] > p[best]) best = j;
    return best;
}

template <class T>
double accuracy(const Tensor<T>& logits, const std::vector<int64_t>& labels) {
    int64_t n = logits.shape[0];
    if (n == 0) return 0.0;
    int64_t hit = 0;
    for (int64_t i = 0; i < n; ++i)
        if (argmax_row(logits, i) == labels[static_cast<size_t>(i)]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(n);
}

#define TVERSKY_INSTANTIATE_NN(T)                                                        \
    template Var<T> conv2d<T>(Var<T>, Var<T>, int, int);                                 \
    template Var<T> global_avg_pool<T>(Var<T>);                                          \
    template Var<T> add_channel_bias<T>(Var<T>, Var<T>);                                 \
    template Var<T> maxpool2<T>(Var<T>);                                                 \
    template Var<T> dropout<T>(Var<T>, double);                                          \
    template Var<T> softmax_cross_entropy<T>(Var<T>, const std::vector<int64_t>&);       \
    template int64_t argmax_row<T>(const Tensor<T>&, int64_t);                           \
    template double accuracy<T>(const Tensor<T>&, const std::vector<int64_t>&);

TVERSKY_INSTANTIATE_NN(float)
TVERSKY_INSTANTIATE_NN(double)

}  // namespace tversky
