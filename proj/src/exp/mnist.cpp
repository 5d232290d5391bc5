#include "tversky/exp/mnist.hpp"

#include <chrono>
#include <cmath>

#include "tversky/autodiff/optim.hpp"

namespace tversky {

namespace {

Tensor<float> uniform_fan_in(Rng& rng, std::vector<int64_t> shape, int64_t fan_in) {
    Tensor<float> t(std::move(shape));
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : t.data) v = static_cast<float>(rng.uniform(-bound, bound));
    return t;
}

}  // namespace

void ConvStack::init(Rng& rng) {
    k0 = uniform_fan_in(rng, {6, 1, 5, 5}, 25);
    b0 = uniform_fan_in(rng, {6}, 25);
    k1 = uniform_fan_in(rng, {12, 6, 4, 4}, 6 * 16);
    k2 = uniform_fan_in(rng, {12, 12, 4, 4}, 12 * 16);
    b2 = uniform_fan_in(rng, {12}, 12 * 16);
    k3 = uniform_fan_in(rng, {12, 12, 4, 4}, 12 * 16);
    b3 = uniform_fan_in(rng, {12}, 12 * 16);
}

Var<float> ConvStack::forward(Graph<float>& g, Var<float> images, Mounter<float>& mount) {
    auto stem = relu(add_channel_bias(conv2d(images, mount(g, k0), 1, 0), mount(g, b0)));
    auto pooled = maxpool2(stem);                                            // 6x12x12
    auto tap1 = relu(conv2d(pooled, mount(g, k1), 1, 0));                    // 12x9x9
    auto tap2 = relu(add_channel_bias(conv2d(tap1, mount(g, k2), 1, 0), mount(g, b2)));  // 12x6x6
    auto tap3 = relu(add_channel_bias(conv2d(maxpool2(tap2), mount(g, k3), 1, 1), mount(g, b3)));
    return concat_cols<float>(
        {global_avg_pool(tap1), global_avg_pool(tap2), global_avg_pool(tap3)});
}

std::vector<Tensor<float>*> ConvStack::parameters() {
    return {&k0, &b0, &k1, &k2, &b2, &k3, &b3};
}

std::vector<std::string> ConvStack::parameter_names() const {
    return {"conv0.weight", "conv0.bias", "conv1.weight", "conv2.weight",
            "conv2.bias",   "conv3.weight", "conv3.bias"};
}

const char* to_string(MnistVariant v) {
    switch (v) {
        case MnistVariant::Baseline: return "baseline";
        case MnistVariant::Tversky: return "tversky";
        case MnistVariant::VisualBaseline: return "visual-baseline";
        case MnistVariant::VisualTversky: return "visual-tversky";
    }
    return "?";
}

MnistVariant mnist_variant_from_string(const std::string& s) {
    if (s == "baseline") return MnistVariant::Baseline;
    if (s == "tversky") return MnistVariant::Tversky;
    if (s == "visual-baseline") return MnistVariant::VisualBaseline;
    if (s == "visual-tversky") return MnistVariant::VisualTversky;
    throw std::invalid_argument("unknown mnist model: " + s);
}

MnistNet::MnistNet(MnistVariant variant, uint64_t init_seed, ReductionConfig head_cfg)
    : variant_(variant), head_cfg_(head_cfg) {
    Rng rng(init_seed);
    stack.init(rng);
    const int64_t d = 36;
    switch (variant_) {
        case MnistVariant::Baseline:
            fc1 = LinearLayer<float>::make(120, d, true);
            fc2 = LinearLayer<float>::make(84, 120, true);
            fc3 = LinearLayer<float>::make(10, 84, true);
            for (LinearLayer<float>* fc : {&fc1, &fc2, &fc3}) {
                int64_t fan = fc->weight.shape[1];
                fc->weight = uniform_fan_in(rng, fc->weight.shape, fan);
                fc->bias = uniform_fan_in(rng, fc->bias.shape, fan);
            }
            break;
        case MnistVariant::Tversky: {
            double bound = 1.0 / std::sqrt(static_cast<double>(d));
            Tensor<float> protos({10, d}), feats({20, d});
            for (auto& v : protos.data) v = static_cast<float>(rng.uniform(-bound, bound));
            for (auto& v : feats.data) v = static_cast<float>(rng.uniform(-bound, bound));
            projection.prototypes = PrototypeBank<float>::owned(std::move(protos));
            projection.features = std::make_shared<FeatureBank<float>>(std::move(feats));
            projection.weights = ContrastWeights<float>(1.0f, 0.5f, 0.5f);
            projection.cfg = head_cfg_;
            break;
        }
        case MnistVariant::VisualTversky:
            visual.param_images = uniform_fan_in(rng, {30, 1, 28, 28}, 28 * 28);
            visual.expected_dim = d;
            projection.weights = ContrastWeights<float>(1.0f, 0.5f, 0.5f);
            break;
        case MnistVariant::VisualBaseline:
            fc1 = LinearLayer<float>::make(120, d, true);
            fc2 = LinearLayer<float>::make(84, 120, true);
            for (LinearLayer<float>* fc : {&fc1, &fc2}) {
                int64_t fan = fc->weight.shape[1];
                fc->weight = uniform_fan_in(rng, fc->weight.shape, fan);
                fc->bias = uniform_fan_in(rng, fc->bias.shape, fan);
            }
            visual.param_images = uniform_fan_in(rng, {10, 1, 28, 28}, 28 * 28);
            visual.expected_dim = 84;
            visual_fc3_bias = uniform_fan_in(rng, {10}, 84);
            break;
    }
}

namespace {

// the conv stack (with its dropout) seen as the backbone for input-shaped
// projection parameters
struct StackBackbone final : Backbone<float> {
    ConvStack* stack;
    double rate;
    StackBackbone(ConvStack* s, double r) : stack(s), rate(r) {}
    Var<float> forward(Graph<float>& g, Var<float> input, Mounter<float>& mount) override {
        return dropout(stack->forward(g, input, mount), rate);
    }
    int64_t output_dim() const override { return 36; }
};

}  // namespace

Var<float> MnistNet::forward(Graph<float>& g, Var<float> images, Mounter<float>& mount,
                             double dropout_rate) {
    auto embed_with_dropout = [&](Var<float> x) {
        return dropout(stack.forward(g, x, mount), dropout_rate);
    };
    auto mlp84 = [&](Var<float> e) {
        return relu(fc2.forward(g, relu(fc1.forward(g, e, mount)), mount));
    };
    Var<float> emb = embed_with_dropout(images);
    switch (variant_) {
        case MnistVariant::Baseline:
            return fc3.forward(g, mlp84(emb), mount);
        case MnistVariant::Tversky:
            return projection.forward(g, emb, mount);
        case MnistVariant::VisualTversky: {
            // prototype and feature images ride the same pipeline as data
            StackBackbone backbone(&stack, dropout_rate);
            return visual_forward(g, visual, backbone, emb, 10, projection.weights, head_cfg_,
                                  mount);
        }
        case MnistVariant::VisualBaseline: {
            Var<float> h = mlp84(emb);
            Var<float> wimgs = mount(g, visual.param_images);
            Var<float> w84 = mlp84(embed_with_dropout(wimgs));  // [10, 84]
            return add_bias(matmul(h, transpose2d(w84)), mount(g, visual_fc3_bias));
        }
    }
    throw std::logic_error("mnist forward: unreachable");
}

std::vector<Tensor<float>*> MnistNet::parameters() {
    std::vector<Tensor<float>*> ps = stack.parameters();
    auto append = [&ps](std::vector<Tensor<float>*> more) {
        ps.insert(ps.end(), more.begin(), more.end());
    };
    switch (variant_) {
        case MnistVariant::Baseline:
            append(fc1.parameters());
            append(fc2.parameters());
            append(fc3.parameters());
            break;
        case MnistVariant::Tversky:
            append(projection.parameters());
            break;
        case MnistVariant::VisualTversky:
            ps.push_back(&visual.param_images);
            ps.push_back(&projection.weights.theta);
            ps.push_back(&projection.weights.alpha);
            ps.push_back(&projection.weights.beta);
            break;
        case MnistVariant::VisualBaseline:
            append(fc1.parameters());
            append(fc2.parameters());
            ps.push_back(&visual.param_images);
            ps.push_back(&visual_fc3_bias);
            break;
    }
    return ps;
}

std::vector<std::string> MnistNet::parameter_names() const {
    std::vector<std::string> names = stack.parameter_names();
    switch (variant_) {
        case MnistVariant::Baseline:
            for (const char* n : {"fc1.weight", "fc1.bias", "fc2.weight", "fc2.bias", "fc3.weight",
                                  "fc3.bias"})
                names.push_back(n);
            break;
        case MnistVariant::Tversky:
            for (const char* n : {"prototypes", "features", "theta", "alpha", "beta"})
                names.push_back(n);
            break;
        case MnistVariant::VisualTversky:
            for (const char* n : {"param_images", "theta", "alpha", "beta"}) names.push_back(n);
            break;
        case MnistVariant::VisualBaseline:
            for (const char* n : {"fc1.weight", "fc1.bias", "fc2.weight", "fc2.bias",
                                  "param_images", "fc3.bias"})
                names.push_back(n);
            break;
    }
    return names;
}

int64_t MnistNet::parameter_count() {
    int64_t total = 0;
    for (Tensor<float>* p : parameters()) total += p->numel();
    return total;
}

ContrastWeights<float>& MnistNet::contrast_weights() {
    if (variant_ == MnistVariant::Baseline || variant_ == MnistVariant::VisualBaseline)
        throw std::logic_error("baseline variants have no contrast weights");
    return projection.weights;
}

Tensor<float> MnistNet::prototype_rows() {
    switch (variant_) {
        case MnistVariant::Baseline: return fc3.weight;          // [10, 84]
        case MnistVariant::Tversky: return *projection.prototypes.prototypes;
        case MnistVariant::VisualTversky:
        case MnistVariant::VisualBaseline: {
            // visual prototypes are the first rows of the image stack
            int64_t rows = variant_ == MnistVariant::VisualTversky ? 10 : 10;
            Tensor<float> out({rows, 28 * 28});
            for (int64_t i = 0; i < rows; ++i)
                for (int64_t j = 0; j < 28 * 28; ++j)
                    out.at(i, j) = visual.param_images.data[static_cast<size_t>(i * 28 * 28 + j)];
            return out;
        }
    }
    throw std::logic_error("prototype_rows: unreachable");
}

Tensor<float> MnistNet::predict_logits(const DatasetHandle& ds, int64_t begin, int64_t end) {
    int64_t n = end - begin;
    Tensor<float> batch({n, 1, 28, 28});
    std::copy(ds.images.data.begin() + begin * 784, ds.images.data.begin() + end * 784,
              batch.data.begin());
    Graph<float> g;
    Mounter<float> mount;
    Var<float> logits = forward(g, g.constant(std::move(batch)), mount, 0.0);
    return logits.value();
}

double MnistNet::evaluate_accuracy(const DatasetHandle& ds, int64_t batch) {
    int64_t n = ds.size();
    int64_t hits = 0;
    for (int64_t b = 0; b < n; b += batch) {
        int64_t e = std::min(n, b + batch);
        Tensor<float> logits = predict_logits(ds, b, e);
        for (int64_t i = 0; i < e - b; ++i)
            if (argmax_row(logits, i) == ds.labels[static_cast<size_t>(b + i)]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

TrainResult train_mnist(MnistNet& net, const DatasetHandle& train, const DatasetHandle& test,
                        const TrainProtocol& protocol, const EpochCallback& on_epoch) {
    if (train.size() == 0) throw std::invalid_argument("train_mnist: empty training set");
    auto params = net.parameters();
    auto opt = Optimizer<float>::adam(protocol.learning_rate, 0.9, 0.999, 1e-8,
                                      protocol.weight_decay);

    std::vector<int64_t> order(static_cast<size_t>(train.size()));
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);

    TrainResult result;
    for (int epoch = 0; epoch < protocol.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        Rng shuffle_rng(derive_seed(protocol.seed, 1000003ull + static_cast<uint64_t>(epoch)));
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1],
                      order[shuffle_rng.next_u64() % static_cast<uint64_t>(i)]);

        double loss_sum = 0;
        int64_t batches = 0;
        const int64_t bs = protocol.batch_size;
        for (int64_t b = 0; b < train.size(); b += bs) {
            int64_t e = std::min<int64_t>(train.size(), b + bs);
            int64_t nb = e - b;
            Tensor<float> batch({nb, 1, 28, 28});
            std::vector<int64_t> labels(static_cast<size_t>(nb));
            for (int64_t i = 0; i < nb; ++i) {
                int64_t src = order[static_cast<size_t>(b + i)];
                std::copy(train.images.data.begin() + src * 784,
                          train.images.data.begin() + (src + 1) * 784,
                          batch.data.begin() + i * 784);
                labels[static_cast<size_t>(i)] = train.labels[static_cast<size_t>(src)];
            }
            Graph<float> g(derive_seed(protocol.seed,
                                       2000003ull * static_cast<uint64_t>(epoch + 1) +
                                           static_cast<uint64_t>(b)));
            g.training = true;
            Mounter<float> mount;
            Var<float> logits = net.forward(g, g.constant(std::move(batch)), mount,
                                            protocol.dropout);
            Var<float> loss = softmax_cross_entropy(logits, labels);
            double lv = static_cast<double>(loss.value().data[0]);
            if (!std::isfinite(lv))
                throw std::runtime_error("train_mnist: non-finite loss at epoch " +
                                         std::to_string(epoch));
            loss_sum += lv;
            ++batches;
            g.backward(loss);
            std::vector<const Tensor<float>*> grads;
            grads.reserve(params.size());
            for (Tensor<float>* p : params) grads.push_back(&mount.node_for(*p).grad());
            opt.step(params, grads);
        }

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = loss_sum / static_cast<double>(std::max<int64_t>(batches, 1));
        bool eval_now = protocol.eval_every > 0 && (epoch % protocol.eval_every == 0 ||
                                                    epoch == protocol.epochs - 1);
        if (eval_now && test.size() > 0) log.test_acc = net.evaluate_accuracy(test);
        if (net.variant() == MnistVariant::Tversky ||
            net.variant() == MnistVariant::VisualTversky) {
            const auto& w = net.contrast_weights();
            log.theta = w.theta.data[0];
            log.alpha = w.alpha.data[0];
            log.beta = w.beta.data[0];
        }
        log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(log);
        result.final_test_acc = log.test_acc;
        result.best_test_acc = std::max(result.best_test_acc, log.test_acc);
        result.epochs_run = epoch + 1;
        if (on_epoch) on_epoch(log, net);
        if (protocol.stop_at_test_acc > 0 && log.test_acc >= protocol.stop_at_test_acc) break;
    }
    return result;
}

void save_mnist_checkpoint(const std::string& path, MnistNet& net, int epoch) {
    nlohmann::json meta = {
        {"kind", "mnist"},
        {"model", to_string(net.variant())},
        {"intersection", to_string(net.head_config().intersection)},
        {"difference", to_string(net.head_config().difference)},
        {"normalize", net.head_config().normalize},
        {"epoch", epoch},
    };
    std::vector<std::pair<std::string, const Tensor<float>*>> tensors;
    auto params = net.parameters();
    auto names = net.parameter_names();
    for (size_t i = 0; i < params.size(); ++i) tensors.emplace_back(names[i], params[i]);
    save_checkpoint(path, meta, tensors);
}

MnistNet load_mnist_checkpoint(const std::string& path) {
    Checkpoint ck = load_checkpoint(path);
    if (!ck.meta.contains("kind") || ck.meta["kind"] != "mnist")
        throw std::runtime_error("checkpoint: not a digit-model checkpoint: " + path);
    ReductionConfig cfg;
    cfg.intersection = intersection_from_string(ck.meta["intersection"].get<std::string>());
    cfg.difference = difference_from_string(ck.meta["difference"].get<std::string>());
    cfg.normalize = ck.meta.value("normalize", false);
    MnistNet net(mnist_variant_from_string(ck.meta["model"].get<std::string>()), 0, cfg);
    auto params = net.parameters();
    auto names = net.parameter_names();
    for (size_t i = 0; i < params.size(); ++i) {
        auto it = ck.tensors.find(names[i]);
        if (it == ck.tensors.end())
            throw std::runtime_error("checkpoint: missing tensor \"" + names[i] + "\" in " + path);
        if (it->second.shape != params[i]->shape)
            throw std::runtime_error("checkpoint: shape mismatch for \"" + names[i] + "\"");
        *params[i] = it->second;
    }
    return net;
}

FeatureBank<float> feature_bank_of(MnistNet& net) {
    switch (net.variant()) {
        case MnistVariant::Tversky: return *net.projection.features;
        case MnistVariant::VisualTversky: {
            Graph<float> g;
            Mounter<float> mount;
            Var<float> vecs =
                net.stack.forward(g, g.constant(net.visual.param_images), mount);
            Tensor<float> feats({20, 36});
            for (int64_t i = 0; i < 20; ++i)
                for (int64_t j = 0; j < 36; ++j) feats.at(i, j) = vecs.value().at(10 + i, j);
            return FeatureBank<float>(std::move(feats));
        }
        default:
            throw std::logic_error("baseline variants have no feature bank");
    }
}

Tensor<float> embed_dataset(MnistNet& net, const DatasetHandle& ds, int64_t limit) {
    int64_t n = std::min<int64_t>(ds.size(), limit);
    Tensor<float> out({n, 36});
    const int64_t chunk = 1000;
    for (int64_t b = 0; b < n; b += chunk) {
        int64_t e = std::min(n, b + chunk);
        Tensor<float> batch({e - b, 1, 28, 28});
        std::copy(ds.images.data.begin() + b * 784, ds.images.data.begin() + e * 784,
                  batch.data.begin());
        Graph<float> g;
        Mounter<float> mount;
        Var<float> emb = net.stack.forward(g, g.constant(std::move(batch)), mount);
        std::copy(emb.value().data.begin(), emb.value().data.end(),
                  out.data.begin() + b * 36);
    }
    return out;
}

DatasetHandle make_synthetic_digits(int64_t n, uint64_t seed, const std::string& split_tag) {
    // blurry class-dependent stroke patterns; enough structure to learn,
    // nothing resembling the real benchmark
    DatasetHandle ds;
    ds.split = split_tag;
    ds.images = Tensor<float>({n, 1, 28, 28});
    Rng rng(seed);
    for (int64_t i = 0; i < n; ++i) {
        int64_t cls = static_cast<int64_t>(rng.next_u64() % 10);
        ds.labels.push_back(cls);
        float* img = &ds.images.data[static_cast<size_t>(i * 784)];
        double cx = 7.0 + 1.4 * static_cast<double>(cls % 5) + rng.uniform(-1, 1);
        double cy = 7.0 + 2.8 * static_cast<double>(cls / 5) + rng.uniform(-1, 1);
        double rx = 3.0 + 0.6 * static_cast<double>(cls % 3);
        double ry = 4.0 + 0.5 * static_cast<double>(cls % 4);
        for (int64_t y = 0; y < 28; ++y)
            for (int64_t x = 0; x < 28; ++x) {
                double dx = (x - cx - 6) / rx, dy = (y - cy - 6) / ry;
                double ring = std::exp(-std::abs(dx * dx + dy * dy - 1.0) * 2.0);
                double bar = (cls % 2 == 0) ? std::exp(-dx * dx * 3.0) * 0.5 : 0.0;
                double v = std::min(1.0, ring + bar + rng.uniform(0, 0.08));
                img[y * 28 + x] = static_cast<float>(v);
            }
    }
    return ds;
}

}  // namespace tversky
