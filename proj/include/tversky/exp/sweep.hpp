#pragma once

#include <functional>
#include <optional>
#include <string>

#include "tversky/autodiff/random.hpp"
#include "tversky/layers/layers.hpp"

namespace tversky {

enum class InitDist { Uniform, Normal, Orthogonal };

inline const char* to_string(InitDist d) {
    switch (d) {
        case InitDist::Uniform: return "uniform";
        case InitDist::Normal: return "normal";
        case InitDist::Orthogonal: return "orthogonal";
    }
    return "?";
}

inline InitDist init_from_string(const std::string& s) {
    if (s == "uniform") return InitDist::Uniform;
    if (s == "normal") return InitDist::Normal;
    if (s == "orthogonal") return InitDist::Orthogonal;
    throw std::invalid_argument("unknown init distribution: " + s);
}

// uniform: U(-1/sqrt d, 1/sqrt d); normal: N(0, 1/d) i.e. stddev 1/sqrt d;
// orthogonal: semi-orthogonal rows from QR of a Gaussian, scaled by 1/sqrt d.
// Variance-matched so init comparisons isolate shape, not scale.
Tensor<float> init_matrix(InitDist dist, int64_t rows, int64_t cols, Rng& rng);

struct TrialConfig {
    IntersectionReduction intersection = IntersectionReduction::Product;
    DifferenceReduction difference = DifferenceReduction::SubstractMatch;
    bool normalize = false;
    int64_t feature_count = 16;
    InitDist proto_init = InitDist::Uniform;
    InitDist feature_init = InitDist::Uniform;
    int seed_index = 0;
    uint64_t seed = 0;  // derived: the rng seed actually used
    int epochs = 1000;
    double learning_rate = 0.01;  // Adam, no weight decay

    uint64_t hash() const;
    std::string key() const;  // canonical "psi,diff,norm,fbank,pinit,finit,seed" string
};

struct TrialResult {
    TrialConfig config;
    uint64_t config_hash = 0;
    double final_loss = 0;  // NaN when training blew up
    double final_acc = 0;
    double best_acc = 0;
    bool converged = false;  // best_acc == 1.0
    double wall_time_sec = 0;
};

// The layer a trial starts from: 2 prototypes and cfg.feature_count features
// in d=2, initialized from cfg.seed (prototypes first, then features).
TverskyProjectionLayer<float> make_xor_layer(const TrialConfig& cfg);

// The xor training loop over a caller-owned layer: the 4 boolean points, full
// batch, softmax cross-entropy, Adam. A non-finite loss aborts the trial and
// is recorded, not thrown. The trained layer stays with the caller.
TrialResult train_xor_layer(TverskyProjectionLayer<float>& layer, const TrialConfig& cfg);

// make_xor_layer + train_xor_layer, metrics only.
TrialResult run_trial(const TrialConfig& cfg);

struct SweepConfig {
    std::vector<IntersectionReduction> intersections{
        IntersectionReduction::Min,   IntersectionReduction::Max,
        IntersectionReduction::Product, IntersectionReduction::Mean,
        IntersectionReduction::GMean, IntersectionReduction::SoftMin};
    std::vector<DifferenceReduction> differences{DifferenceReduction::IgnoreMatch,
                                                 DifferenceReduction::SubstractMatch};
    std::vector<bool> normalize_modes{false, true};
    std::vector<int64_t> feature_counts{1, 2, 4, 8, 16, 32};
    std::vector<InitDist> proto_inits{InitDist::Uniform, InitDist::Normal, InitDist::Orthogonal};
    std::vector<InitDist> feature_inits{InitDist::Uniform, InitDist::Normal, InitDist::Orthogonal};
    int seeds = 9;
    uint64_t master_seed = 0;
    int epochs = 1000;
    double learning_rate = 0.01;

    size_t trial_count() const;
    TrialConfig trial_at(size_t index) const;  // row-major over the lists above
};

// Executes the cross product. Trials are independent and seed-deterministic
// regardless of execution order; results come back in index order. on_result
// fires as trials complete (any order) for incremental checkpointing.
// Trials whose config hash is in `already_done` are skipped (resume).
std::vector<TrialResult> run_sweep(
    const SweepConfig& cfg, int parallelism,
    const std::function<void(const TrialResult&)>& on_result = nullptr,
    const std::vector<uint64_t>& already_done = {});

struct ConvergenceStats {
    std::string group;   // "key=value|key=value"
    int64_t n = 0;
    double loss_mean = 0, loss_stderr = 0;  // NaN losses excluded from the mean
    int64_t loss_n = 0;                      // finite-loss count
    double acc_mean = 0, acc_stderr = 0;
    double best_acc_max = 0;
    double pconv_mean = 0, pconv_stderr = 0;
};

// Marginal means and standard errors (sample stddev / sqrt n) grouped by the
// named keys: intersection, difference, normalize, fbank, proto_init,
// feature_init. Groups come back sorted by descending p(conv).
std::vector<ConvergenceStats> aggregate_convergence(const std::vector<TrialResult>& results,
                                                    const std::vector<std::string>& group_by);

}  // namespace tversky
