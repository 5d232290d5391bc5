#include "tversky/exp/sweep.hpp"

#include <atomic>
#include <limits>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>

#include "tversky/autodiff/nn.hpp"
#include "tversky/autodiff/parallel.hpp"
#include "tversky/autodiff/optim.hpp"
#include "tversky/layers/layers.hpp"

namespace tversky {

Tensor<float> init_matrix(InitDist dist, int64_t rows, int64_t cols, Rng& rng) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    Tensor<float> m({rows, cols});
    switch (dist) {
        case InitDist::Uniform:
            for (auto& v : m.data) v = static_cast<float>(rng.uniform(-scale, scale));
            return m;
        case InitDist::Normal:
            for (auto& v : m.data) v = static_cast<float>(rng.normal(0.0, scale));
            return m;
        case InitDist::Orthogonal: {
            // Gram-Schmidt on Gaussian rows; rows beyond the dimension restart
            // the basis, giving blocks of mutually orthogonal rows.
            std::vector<std::vector<double>> basis;
            for (int64_t r = 0; r < rows; ++r) {
                std::vector<double> v(static_cast<size_t>(cols));
                while (true) {
                    for (auto& x : v) x = rng.normal(0.0, 1.0);
                    for (const auto& b : basis) {
                        double dot = 0;
                        for (int64_t c = 0; c < cols; ++c) dot += v[static_cast<size_t>(c)] * b[static_cast<size_t>(c)];
                        for (int64_t c = 0; c < cols; ++c) v[static_cast<size_t>(c)] -= dot * b[static_cast<size_t>(c)];
                    }
                    double nrm = 0;
                    for (double x : v) nrm += x * x;
                    nrm = std::sqrt(nrm);
                    if (nrm > 1e-8) {
                        for (double& x : v) x /= nrm;
                        break;
                    }
                }
                basis.push_back(v);
                if (static_cast<int64_t>(basis.size()) == cols) basis.clear();
                for (int64_t c = 0; c < cols; ++c)
                    m.at(r, c) = static_cast<float>(v[static_cast<size_t>(c)] * scale);
            }
            return m;
        }
    }
    throw std::logic_error("init_matrix: unreachable");
}

std::string TrialConfig::key() const {
    std::string s;
    s += to_string(intersection);
    s += ",";
    s += to_string(difference);
    s += ",";
    s += normalize ? "true" : "false";
    s += "," + std::to_string(feature_count);
    s += ",";
    s += to_string(proto_init);
    s += ",";
    s += to_string(feature_init);
    s += "," + std::to_string(seed_index);
    return s;
}

uint64_t TrialConfig::hash() const {
    uint64_t h = 0xCBF29CE484222325ull;
    for (char c : key()) h = (h ^ static_cast<uint64_t>(static_cast<unsigned char>(c))) * 0x100000001B3ull;
    return h;
}

TverskyProjectionLayer<float> make_xor_layer(const TrialConfig& cfg) {
    Rng rng(cfg.seed);
    TverskyProjectionLayer<float> layer;
    layer.prototypes = PrototypeBank<float>::owned(init_matrix(cfg.proto_init, 2, 2, rng));
    layer.features = std::make_shared<FeatureBank<float>>(
        init_matrix(cfg.feature_init, cfg.feature_count, 2, rng));
    layer.weights = ContrastWeights<float>(1.0f, 0.5f, 0.5f);
    layer.cfg = {cfg.intersection, cfg.difference, cfg.normalize};
    return layer;
}

TrialResult train_xor_layer(TverskyProjectionLayer<float>& layer, const TrialConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();

    // the 4 boolean points, full batch; no non-boolean points enter training
    const Tensor<float> X({4, 2}, {0, 0, 0, 1, 1, 0, 1, 1});
    const std::vector<int64_t> labels{0, 1, 1, 0};

    auto params = layer.parameters();
    auto opt = Optimizer<float>::adam(cfg.learning_rate);

    TrialResult res;
    res.config = cfg;
    res.config_hash = cfg.hash();

    double best_acc = 0, last_acc = 0, last_loss = std::numeric_limits<double>::quiet_NaN();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Graph<float> g;
        Mounter<float> mount;
        Var<float> scores = layer.forward(g, g.constant(X), mount);
        Var<float> loss = softmax_cross_entropy(scores, labels);
        last_acc = accuracy(scores.value(), labels);
        best_acc = std::max(best_acc, last_acc);
        last_loss = static_cast<double>(loss.value().data[0]);
        if (!std::isfinite(last_loss)) {
            last_loss = std::numeric_limits<double>::quiet_NaN();
            break;
        }
        g.backward(loss);
        std::vector<const Tensor<float>*> grads;
        grads.reserve(params.size());
        for (Tensor<float>* p : params) grads.push_back(&mount.node_for(*p).grad());
        opt.step(params, grads);
    }
    res.final_loss = last_loss;
    res.final_acc = last_acc;
    res.best_acc = best_acc;
    res.converged = best_acc == 1.0;
    res.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

TrialResult run_trial(const TrialConfig& cfg) {
    TverskyProjectionLayer<float> layer = make_xor_layer(cfg);
    return train_xor_layer(layer, cfg);
}

size_t SweepConfig::trial_count() const {
    return intersections.size() * differences.size() * normalize_modes.size() *
           feature_counts.size() * proto_inits.size() * feature_inits.size() *
           static_cast<size_t>(seeds);
}

TrialConfig SweepConfig::trial_at(size_t index) const {
    if (index >= trial_count()) throw std::out_of_range("sweep: trial index out of range");
    size_t i = index;
    auto take = [&i](size_t n) {
        size_t v = i % n;
        i /= n;
        return v;
    };
    TrialConfig c;
    c.seed_index = static_cast<int>(take(static_cast<size_t>(seeds)));
    c.feature_init = feature_inits[take(feature_inits.size())];
    c.proto_init = proto_inits[take(proto_inits.size())];
    c.feature_count = feature_counts[take(feature_counts.size())];
    c.normalize = normalize_modes[take(normalize_modes.size())];
    c.difference = differences[take(differences.size())];
    c.intersection = intersections[take(intersections.size())];
    c.epochs = epochs;
    c.learning_rate = learning_rate;
    c.seed = derive_seed(master_seed, index);
    return c;
}

std::vector<TrialResult> run_sweep(const SweepConfig& cfg, int parallelism,
                                   const std::function<void(const TrialResult&)>& on_result,
                                   const std::vector<uint64_t>& already_done) {
    const size_t total = cfg.trial_count();
    std::vector<TrialResult> results(total);
    std::vector<char> done(total, 0);

    std::vector<uint64_t> skip = already_done;
    std::sort(skip.begin(), skip.end());
    auto skipped = [&skip](uint64_t h) {
        return std::binary_search(skip.begin(), skip.end(), h);
    };

    std::atomic<size_t> next{0};
    std::mutex emit_mutex;
    auto worker = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= total) return;
            TrialConfig tc = cfg.trial_at(i);
            if (skipped(tc.hash())) continue;
            TrialResult r = run_trial(tc);
            results[i] = r;
            done[i] = 1;
            if (on_result) {
                std::lock_guard<std::mutex> lock(emit_mutex);
                on_result(r);
            }
        }
    };

    int nt = parallelism > 0 ? parallelism : max_threads();
    nt = static_cast<int>(std::min<size_t>(static_cast<size_t>(nt), total));
    if (nt <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(nt));
        for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::vector<TrialResult> out;
    out.reserve(total);
    for (size_t i = 0; i < total; ++i)
        if (done[i]) out.push_back(std::move(results[i]));
    return out;
}

namespace {

std::string group_value(const TrialResult& r, const std::string& key) {
    if (key == "intersection") return to_string(r.config.intersection);
    if (key == "difference") return to_string(r.config.difference);
    if (key == "normalize") return r.config.normalize ? "true" : "false";
    if (key == "fbank") return std::to_string(r.config.feature_count);
    if (key == "proto_init") return to_string(r.config.proto_init);
    if (key == "feature_init") return to_string(r.config.feature_init);
    throw std::invalid_argument("aggregate: unknown group key: " + key);
}

struct Acc {
    int64_t n = 0;
    double loss_sum = 0, loss_sq = 0;
    int64_t loss_n = 0;
    double acc_sum = 0, acc_sq = 0;
    double best = 0;
    int64_t conv = 0;
};

double stderr_of(double sum, double sq, int64_t n) {
    if (n <= 1) return 0.0;
    double mean = sum / static_cast<double>(n);
    double var = (sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1);
    if (var < 0) var = 0;
    return std::sqrt(var / static_cast<double>(n));
}

}  // namespace

std::vector<ConvergenceStats> aggregate_convergence(const std::vector<TrialResult>& results,
                                                    const std::vector<std::string>& group_by) {
    if (results.empty()) throw std::invalid_argument("aggregate: empty result set");
    if (group_by.empty()) throw std::invalid_argument("aggregate: no group keys");
    std::map<std::string, Acc> groups;
    for (const TrialResult& r : results) {
        std::string key;
        for (const std::string& k : group_by) {
            if (!key.empty()) key += "|";
            key += k + "=" + group_value(r, k);
        }
        Acc& a = groups[key];
        ++a.n;
        if (std::isfinite(r.final_loss)) {
            a.loss_sum += r.final_loss;
            a.loss_sq += r.final_loss * r.final_loss;
            ++a.loss_n;
        }
        a.acc_sum += r.final_acc;
        a.acc_sq += r.final_acc * r.final_acc;
        a.best = std::max(a.best, r.best_acc);
        a.conv += r.converged ? 1 : 0;
    }
    std::vector<ConvergenceStats> out;
    for (const auto& [key, a] : groups) {
        ConvergenceStats s;
        s.group = key;
        s.n = a.n;
        s.loss_n = a.loss_n;
        if (a.loss_n > 0) {
            s.loss_mean = a.loss_sum / static_cast<double>(a.loss_n);
            s.loss_stderr = stderr_of(a.loss_sum, a.loss_sq, a.loss_n);
        } else {
            s.loss_mean = std::numeric_limits<double>::quiet_NaN();
            s.loss_stderr = std::numeric_limits<double>::quiet_NaN();
        }
        s.acc_mean = a.acc_sum / static_cast<double>(a.n);
        s.acc_stderr = stderr_of(a.acc_sum, a.acc_sq, a.n);
        s.best_acc_max = a.best;
        double p = static_cast<double>(a.conv) / static_cast<double>(a.n);
        s.pconv_mean = p;
        // convergence is an indicator; sample stddev of a Bernoulli column
        double var = a.n > 1 ? (static_cast<double>(a.conv) - a.n * p * p) /
                                   static_cast<double>(a.n - 1)
                             : 0.0;
        if (var < 0) var = 0;
        s.pconv_stderr = std::sqrt(var / static_cast<double>(a.n));
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const ConvergenceStats& a, const ConvergenceStats& b) {
        if (a.pconv_mean != b.pconv_mean) return a.pconv_mean > b.pconv_mean;
        return a.group < b.group;
    });
    return out;
}

}  // namespace tversky
