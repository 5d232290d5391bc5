#pragma once

#include <functional>
#include <string>

#include "tversky/autodiff/nn.hpp"
#include "tversky/io/checkpoint.hpp"
#include "tversky/io/idx.hpp"
#include "tversky/layers/layers.hpp"

namespace tversky {

// Shared convolutional embedding: stem conv (1->6, 5x5) + maxpool, then three
// tapped convs (6->12 4x4 bias-free, 12->12 4x4, maxpool, 12->12 4x4 pad 1).
// Each tap is globally averaged to a 12-vector; the concatenation is the
// 36-dimensional representation. 5,940 parameters.
struct ConvStack {
    Tensor<float> k0, b0;  // [6,1,5,5], [6]
    Tensor<float> k1;      // [12,6,4,4], no bias
    Tensor<float> k2, b2;  // [12,12,4,4], [12]
    Tensor<float> k3, b3;  // [12,12,4,4], [12]

    void init(Rng& rng);
    Var<float> forward(Graph<float>& g, Var<float> images, Mounter<float>& mount);
    std::vector<Tensor<float>*> parameters();
    std::vector<std::string> parameter_names() const;
};

enum class MnistVariant { Baseline, Tversky, VisualBaseline, VisualTversky };

const char* to_string(MnistVariant v);
MnistVariant mnist_variant_from_string(const std::string& s);

// The four digit-recognition networks sharing ConvStack. Baseline heads are a
// 120/84/10 linear stack with ReLU; Tversky heads are a single projection
// with 10 prototypes and 20 features. Visual variants store the head's
// prototype parameters as 28x28 images forwarded through the network like
// data.
class MnistNet {
public:
    MnistNet(MnistVariant variant, uint64_t init_seed,
             ReductionConfig head_cfg = {IntersectionReduction::Product,
                                         DifferenceReduction::IgnoreMatch, false});

    Var<float> forward(Graph<float>& g, Var<float> images, Mounter<float>& mount,
                       double dropout_rate = 0.0);

    Tensor<float> predict_logits(const DatasetHandle& ds, int64_t begin, int64_t end);
    double evaluate_accuracy(const DatasetHandle& ds, int64_t batch = 1000);

    std::vector<Tensor<float>*> parameters();
    std::vector<std::string> parameter_names() const;
    int64_t parameter_count();

    MnistVariant variant() const { return variant_; }
    const ReductionConfig& head_config() const { return head_cfg_; }

    // contrast weights of the tversky heads; throws for baseline variants
    ContrastWeights<float>& contrast_weights();

    // vector-form prototypes or visual prototype images for export
    Tensor<float> prototype_rows();

    ConvStack stack;
    // baseline head
    LinearLayer<float> fc1, fc2, fc3;
    // tversky head
    TverskyProjectionLayer<float> projection;
    // visual heads
    VisualParameterization<float> visual;  // tversky: 30 images; baseline: 10 images
    Tensor<float> visual_fc3_bias;         // [10], baseline visual only

private:
    MnistVariant variant_;
    ReductionConfig head_cfg_;
};

struct TrainProtocol {
    int epochs = 1000;
    int batch_size = 500;
    double learning_rate = 0.002;
    double weight_decay = 1e-5;
    double dropout = 0.05;
    uint64_t seed = 0;
    double stop_at_test_acc = -1.0;  // early stop once reached (<=0: never)
    int eval_every = 1;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0;
    double test_acc = 0;
    double theta = 0, alpha = 0, beta = 0;
    double seconds = 0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    double final_test_acc = 0;
    double best_test_acc = 0;
    int epochs_run = 0;
};

using EpochCallback = std::function<void(const EpochLog&, MnistNet&)>;

TrainResult train_mnist(MnistNet& net, const DatasetHandle& train, const DatasetHandle& test,
                        const TrainProtocol& protocol, const EpochCallback& on_epoch = nullptr);

// Deterministic synthetic digit-like dataset for pipeline tests when the real
// IDX files are not present.
DatasetHandle make_synthetic_digits(int64_t n, uint64_t seed, const std::string& split_tag);

void save_mnist_checkpoint(const std::string& path, MnistNet& net, int epoch);
MnistNet load_mnist_checkpoint(const std::string& path);

// The head's feature bank; for the visual variant the feature images are
// pushed through the conv stack first (eval mode).
FeatureBank<float> feature_bank_of(MnistNet& net);

// 36-d embeddings of ds[0:limit] (eval mode, dropout off).
Tensor<float> embed_dataset(MnistNet& net, const DatasetHandle& ds, int64_t limit);

}  // namespace tversky
