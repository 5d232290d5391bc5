#include "tversky/autodiff/gradcheck.hpp"

#include <cmath>

namespace tversky {

namespace {

struct Eval {
    double value;
    uint64_t mask_hash;
};

Eval eval_at(const MultiScalarFn& f, const std::vector<Tensor<double>>& xs, uint64_t seed) {
    Graph<double> g(seed);
    std::vector<Var<double>> vars;
    vars.reserve(xs.size());
    for (const auto& x : xs) vars.push_back(g.constant(x, "probe"));
    Var<double> loss = f(g, vars);
    if (!loss.value().is_scalar()) throw std::invalid_argument("finite_diff_check: f not scalar");
    return {loss.value().data[0], g.mask_hash()};
}

}  // namespace

GradCheckReport finite_diff_check_multi(const MultiScalarFn& f, std::vector<Tensor<double>> xs,
                                        double h, uint64_t seed) {
    GradCheckReport rep;

    // analytic pass
    Graph<double> g(seed);
    std::vector<Var<double>> vars;
    vars.reserve(xs.size());
    for (const auto& x : xs) vars.push_back(g.param(x));
    Var<double> loss = f(g, vars);
    if (!loss.value().is_scalar()) throw std::invalid_argument("finite_diff_check: f not scalar");
    g.backward(loss);
    rep.value = loss.value().data[0];
    const uint64_t centre_hash = g.mask_hash();

    std::vector<Tensor<double>> grads;
    grads.reserve(xs.size());
    for (Var<double> v : vars) grads.push_back(v.grad());

    size_t flat = 0;
    for (size_t ti = 0; ti < xs.size(); ++ti) {
        for (size_t ci = 0; ci < xs[ti].data.size(); ++ci, ++flat) {
            const double orig = xs[ti].data[ci];
            xs[ti].data[ci] = orig + h;
            Eval plus = eval_at(f, xs, seed);
            xs[ti].data[ci] = orig - h;
            Eval minus = eval_at(f, xs, seed);
            xs[ti].data[ci] = orig;

            if (plus.mask_hash != centre_hash || minus.mask_hash != centre_hash) {
                rep.excluded.push_back(flat);
                rep.per_coord.push_back(-1.0);
                continue;
            }
            const double fd = (plus.value - minus.value) / (2.0 * h);
            const double ad = grads[ti].data[ci];
            const double rel = std::abs(ad - fd) / std::max(1e-12, std::abs(ad) + std::abs(fd));
            rep.per_coord.push_back(rel);
            rep.max_rel_err = std::max(rep.max_rel_err, rel);
            ++rep.checked;
        }
    }
    return rep;
}

double finite_diff_check(const ScalarFn& f, const Tensor<double>& x, double h,
                         GradCheckReport* report) {
    MultiScalarFn mf = [&f](Graph<double>& g, const std::vector<Var<double>>& vs) {
        return f(g, vs[0]);
    };
    GradCheckReport rep = finite_diff_check_multi(mf, {x}, h);
    if (report) *report = rep;
    return rep.max_rel_err;
}

}  // namespace tversky
