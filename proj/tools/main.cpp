#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tversky/exp/constructed.hpp"
#include "tversky/exp/gradsuite.hpp"
#include "tversky/exp/mnist.hpp"
#include "tversky/exp/sweep.hpp"
#include "tversky/interpret/boundary.hpp"
#include "tversky/interpret/fields.hpp"
#include "tversky/interpret/images.hpp"
#include "tversky/interpret/salience.hpp"
#include "tversky/io/config.hpp"
#include "tversky/io/csv.hpp"
#include "tversky/io/idx.hpp"
#include "tversky/io/pgm.hpp"

using namespace tversky;
using nlohmann::json;

namespace {

std::string default_out_root() {
    if (const char* env = std::getenv("TVERSKY_OUT")) return env;
    return "out";
}

void print_constructed(const ConstructedModel& m, const std::string& name) {
    std::cout << name << " truth table (theta=1, alpha=beta=0.5, min/ignorematch):\n";
    for (size_t i = 0; i < m.inputs.size(); ++i) {
        auto scores = constructed_scores(m, m.inputs[i]);
        int64_t cls = constructed_predict(m, m.inputs[i]);
        std::cout << "  " << m.input_names[i] << " -> " << cls << "   scores:";
        for (double s : scores) std::cout << " " << format_float(s);
        std::cout << (cls == m.expected_class[i] ? "" : "   MISMATCH") << "\n";
    }
    const auto& bank = *m.layer.features;
    std::cout << "memberships:\n";
    for (int64_t r = 0; r < m.layer.prototypes.count(); ++r) {
        Tensor<double> proto({bank.dim()});
        for (int64_t j = 0; j < bank.dim(); ++j)
            proto.data[static_cast<size_t>(j)] = m.layer.prototypes.prototypes->at(r, j);
        auto fs = feature_membership(proto, bank, r);
        std::cout << "  p" << r << " = {";
        for (size_t k = 0; k < fs.member_indices.size(); ++k)
            std::cout << (k ? ", " : "") << "f" << fs.member_indices[k];
        std::cout << "}\n";
    }
}

DatasetHandle load_split(const std::string& data_dir, const std::string& split,
                         int64_t synthetic_n, uint64_t synthetic_seed) {
    if (!data_dir.empty()) {
        std::string imgs, lbls;
        if (split == "train") {
            imgs = data_dir + "/train-images-idx3-ubyte";
            lbls = data_dir + "/train-labels-idx1-ubyte";
        } else {
            imgs = data_dir + "/t10k-images-idx3-ubyte";
            lbls = data_dir + "/t10k-labels-idx1-ubyte";
        }
        return load_idx(imgs, lbls, split);
    }
    if (synthetic_n > 0)
        return make_synthetic_digits(synthetic_n, synthetic_seed + (split == "train" ? 0 : 1),
                                     split);
    throw std::runtime_error("no dataset: pass --data-dir or --synthetic");
}

std::string trial_csv_header_note;

std::vector<std::string> trial_columns() {
    return {"index",       "config_hash", "intersection", "difference", "normalize",
            "fbank",       "proto_init",  "feature_init", "seed_index", "seed",
            "final_loss",  "final_acc",   "best_acc",     "converged",  "wall_time_sec"};
}

std::vector<std::string> trial_cells(size_t index, const TrialResult& r) {
    return {std::to_string(index),
            std::to_string(r.config_hash),
            to_string(r.config.intersection),
            to_string(r.config.difference),
            r.config.normalize ? "true" : "false",
            std::to_string(r.config.feature_count),
            to_string(r.config.proto_init),
            to_string(r.config.feature_init),
            std::to_string(r.config.seed_index),
            std::to_string(r.config.seed),
            format_float(r.final_loss),
            format_float(r.final_acc),
            format_float(r.best_acc),
            r.converged ? "1" : "0",
            format_float(r.wall_time_sec)};
}

void write_aggregates(const std::vector<TrialResult>& results, const std::string& out_dir) {
    struct Marginal {
        const char* file;
        std::vector<std::string> keys;
    };
    const Marginal marginals[] = {
        {"aggregates_intersection_difference.csv", {"intersection", "difference"}},
        {"aggregates_init.csv", {"feature_init", "proto_init"}},
        {"aggregates_normalize.csv", {"normalize"}},
        {"aggregates_fbank.csv", {"fbank"}},
    };
    for (const auto& m : marginals) {
        CsvWriter w({"group", "n", "loss_mean", "loss_stderr", "acc_mean", "acc_stderr",
                     "best_acc", "pconv", "pconv_stderr"});
        for (const auto& s : aggregate_convergence(results, m.keys))
            w.row({s.group, std::to_string(s.n), format_float(s.loss_mean),
                   format_float(s.loss_stderr), format_float(s.acc_mean),
                   format_float(s.acc_stderr), format_float(s.best_acc_max),
                   format_float(s.pconv_mean), format_float(s.pconv_stderr)});
        w.save(out_dir + "/" + m.file);
    }
}

json sweep_defaults() {
    return json{{"intersections", {"min", "max", "product", "mean", "gmean", "softmin"}},
                {"differences", {"ignorematch", "substractmatch"}},
                {"normalize_modes", {false, true}},
                {"feature_counts", {1, 2, 4, 8, 16, 32}},
                {"proto_inits", {"uniform", "normal", "orthogonal"}},
                {"feature_inits", {"uniform", "normal", "orthogonal"}},
                {"seeds", 9},
                {"master_seed", 0},
                {"epochs", 1000},
                {"learning_rate", 0.01},
                {"parallel", 0},
                {"out", default_out_root() + "/xor-sweep"}};
}

SweepConfig sweep_from_json(const json& j) {
    SweepConfig cfg;
    cfg.intersections.clear();
    for (const auto& s : j["intersections"])
        cfg.intersections.push_back(intersection_from_string(s.get<std::string>()));
    cfg.differences.clear();
    for (const auto& s : j["differences"])
        cfg.differences.push_back(difference_from_string(s.get<std::string>()));
    cfg.normalize_modes.clear();
    for (const auto& b : j["normalize_modes"]) cfg.normalize_modes.push_back(b.get<bool>());
    cfg.feature_counts.clear();
    for (const auto& v : j["feature_counts"]) cfg.feature_counts.push_back(v.get<int64_t>());
    cfg.proto_inits.clear();
    for (const auto& s : j["proto_inits"])
        cfg.proto_inits.push_back(init_from_string(s.get<std::string>()));
    cfg.feature_inits.clear();
    for (const auto& s : j["feature_inits"])
        cfg.feature_inits.push_back(init_from_string(s.get<std::string>()));
    cfg.seeds = j["seeds"].get<int>();
    cfg.master_seed = j["master_seed"].get<uint64_t>();
    cfg.epochs = j["epochs"].get<int>();
    cfg.learning_rate = j["learning_rate"].get<double>();
    return cfg;
}

int cmd_xor_sweep(const json& resolved, bool dry_run, bool resume) {
    SweepConfig cfg = sweep_from_json(resolved);
    size_t total = cfg.trial_count();
    std::cout << "sweep cardinality: " << total << " trials\n";
    if (total == 11664)
        std::cout << "note: the enumerated hyperparameter lists give 11,664 combinations; the "
                     "originally reported total was 12,960 (unexplained extra factor).\n";
    if (dry_run) return 0;

    std::string out_dir = resolved["out"].get<std::string>();
    ensure_directory(out_dir);
    echo_resolved_config(resolved, out_dir);

    std::vector<uint64_t> done_hashes;
    std::string trials_path = out_dir + "/trials.csv";
    std::vector<std::vector<std::string>> previous_rows;
    if (resume && std::filesystem::exists(trials_path)) {
        auto rows = read_csv_file(trials_path);
        for (size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].size() < 2) continue;
            done_hashes.push_back(std::stoull(rows[i][1]));
            previous_rows.push_back(rows[i]);
        }
        std::cout << "resume: " << done_hashes.size() << " trials already recorded\n";
    }

    // incremental checkpoint stream, one row per completed trial
    std::ofstream stream(out_dir + "/trials_stream.csv", std::ios::app);
    size_t completed = 0;
    auto on_result = [&](const TrialResult& r) {
        stream << r.config.key() << "," << format_float(r.final_loss) << ","
               << format_float(r.best_acc) << "," << (r.converged ? 1 : 0) << "\n";
        stream.flush();
        if (++completed % 500 == 0)
            std::cout << "  " << completed << " trials done\n" << std::flush;
    };
    auto results = run_sweep(cfg, resolved["parallel"].get<int>(), on_result, done_hashes);

    CsvWriter w(trial_columns());
    for (const auto& row : previous_rows) w.row(row);
    size_t base = previous_rows.size();
    for (size_t i = 0; i < results.size(); ++i) w.row(trial_cells(base + i, results[i]));
    w.save(trials_path);

    std::vector<TrialResult> all = results;  // aggregates over fresh rows only when resuming
    if (!all.empty()) write_aggregates(all, out_dir);
    std::cout << "ran " << results.size() << " trials; results in " << out_dir << "\n";
    auto stats = aggregate_convergence(all, {"intersection", "difference"});
    for (const auto& s : stats)
        std::cout << "  " << s.group << ": p(conv) " << format_float(s.pconv_mean) << " +- "
                  << format_float(s.pconv_stderr) << " (n=" << s.n << ")\n";
    return 0;
}

ObjectTable<float> table_from_csv(const std::string& path) {
    ObjectTable<float> table;
    auto rows = read_csv_file(path);
    for (const auto& row : rows) {
        if (row.empty() || row.size() < 2) continue;
        Tensor<float> v({static_cast<int64_t>(row.size() - 1)});
        bool numeric = true;
        for (size_t i = 1; i < row.size(); ++i) {
            try {
                v.data[i - 1] = std::stof(row[i]);
            } catch (...) {
                numeric = false;
                break;
            }
        }
        if (!numeric) continue;  // header line
        table.names.push_back(row[0]);
        table.vectors.push_back(std::move(v));
    }
    if (table.names.empty()) throw std::runtime_error("objects csv: no rows in " + path);
    return table;
}

FeatureBank<float> bank_from_csv(const std::string& path) {
    auto rows = read_csv_file(path);
    std::vector<std::vector<float>> feats;
    for (const auto& row : rows) {
        if (row.empty()) continue;
        std::vector<float> v;
        bool numeric = true;
        for (const auto& cell : row) {
            try {
                v.push_back(std::stof(cell));
            } catch (...) {
                numeric = false;
                break;
            }
        }
        if (numeric && !v.empty()) feats.push_back(std::move(v));
    }
    if (feats.empty()) throw std::runtime_error("features csv: no rows in " + path);
    Tensor<float> m({static_cast<int64_t>(feats.size()), static_cast<int64_t>(feats[0].size())});
    for (size_t i = 0; i < feats.size(); ++i) {
        if (feats[i].size() != feats[0].size())
            throw std::runtime_error("features csv: ragged rows in " + path);
        for (size_t j = 0; j < feats[i].size(); ++j)
            m.at(static_cast<int64_t>(i), static_cast<int64_t>(j)) = feats[i][j];
    }
    return FeatureBank<float>(std::move(m));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Differentiable Tversky similarity: layers, experiments, interpretability"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    // xor-construct / add-construct
    app.add_subcommand("xor-construct", "Print the hand-set xor layer's truth table");
    app.add_subcommand("add-construct", "Print the hand-set binary-addition layer's truth table");

    // gradcheck
    auto* sc_grad = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
    int grad_points = 100;
    double grad_tol = 1e-5, grad_h = 1e-6;
    uint64_t grad_seed = 12345;
    sc_grad->add_option("--points", grad_points, "Mask-safe sample points per combination");
    sc_grad->add_option("--tolerance", grad_tol, "Max relative error allowed");
    sc_grad->add_option("--step", grad_h, "Central-difference step");
    sc_grad->add_option("--seed", grad_seed, "Sampling seed");

    // xor-sweep
    auto* sc_sweep = app.add_subcommand("xor-sweep", "Convergence sweep over the xor task");
    std::string sweep_config_path, sweep_out;
    bool sweep_dry = false, sweep_resume = false;
    int sweep_parallel = -1;
    int sweep_seeds = -1, sweep_epochs = -1;
    uint64_t sweep_master = UINT64_MAX;
    std::string sweep_grid;
    sc_sweep->add_option("--config", sweep_config_path, "JSON config file");
    sc_sweep->add_flag("--dry-run", sweep_dry, "Print the trial count and exit");
    sc_sweep->add_flag("--resume", sweep_resume, "Skip trials already in trials.csv");
    sc_sweep->add_option("--parallel", sweep_parallel, "Worker threads (0 = all cores)");
    sc_sweep->add_option("--out", sweep_out, "Output directory");
    sc_sweep->add_option("--seeds", sweep_seeds, "Seeds per configuration");
    sc_sweep->add_option("--epochs", sweep_epochs, "Training epochs per trial");
    sc_sweep->add_option("--master-seed", sweep_master, "Master seed for per-trial seeds");
    sc_sweep->add_option("--grid", sweep_grid,
                         "Named grid: paper (default) or desk "
                         "({product,min} x both differences x fbank {1,16}, uniform init)");

    // train-mnist
    auto* sc_train = app.add_subcommand("train-mnist", "Train a digit-recognition network");
    std::string tr_data, tr_model = "tversky", tr_out = default_out_root() + "/mnist";
    std::string tr_inter = "product", tr_diff = "ignorematch";
    int tr_epochs = 100, tr_batch = 500, tr_snapshot = 0;
    int64_t tr_synth = 0;
    double tr_lr = 0.002, tr_wd = 1e-5, tr_dropout = 0.05, tr_stop = -1;
    uint64_t tr_seed = 0;
    sc_train->add_option("--data-dir", tr_data, "Directory holding the 4 IDX files");
    sc_train->add_option("--synthetic", tr_synth, "Use N synthetic samples instead of IDX data");
    sc_train->add_option("--model", tr_model,
                         "baseline | tversky | visual-baseline | visual-tversky");
    sc_train->add_option("--intersection", tr_inter, "Tversky head intersection reduction");
    sc_train->add_option("--difference", tr_diff, "Tversky head difference reduction");
    sc_train->add_option("--epochs", tr_epochs, "Training epochs");
    sc_train->add_option("--batch", tr_batch, "Batch size");
    sc_train->add_option("--lr", tr_lr, "Adam learning rate");
    sc_train->add_option("--wd", tr_wd, "Weight decay");
    sc_train->add_option("--dropout", tr_dropout, "Dropout on the conv-stack output");
    sc_train->add_option("--seed", tr_seed, "Master seed");
    sc_train->add_option("--stop-at-acc", tr_stop, "Early-stop once test accuracy reaches this");
    sc_train->add_option("--snapshot-every", tr_snapshot,
                         "Export prototype images every N epochs (visual variants)");
    sc_train->add_option("--out", tr_out, "Output directory");

    // eval
    auto* sc_eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    std::string ev_ck, ev_data, ev_split = "test";
    int64_t ev_synth = 0;
    sc_eval->add_option("--checkpoint", ev_ck, "Checkpoint path")->required();
    sc_eval->add_option("--data-dir", ev_data, "Directory holding the IDX files");
    sc_eval->add_option("--synthetic", ev_synth, "Use N synthetic samples");
    sc_eval->add_option("--split", ev_split, "train | test");

    // salience
    auto* sc_sal = app.add_subcommand("salience", "Rank dataset examples by salience");
    std::string sal_ck, sal_data, sal_split = "test", sal_out = default_out_root() + "/salience";
    int64_t sal_limit = 10000, sal_synth = 0;
    sc_sal->add_option("--checkpoint", sal_ck, "Tversky checkpoint")->required();
    sc_sal->add_option("--data-dir", sal_data, "IDX directory");
    sc_sal->add_option("--synthetic", sal_synth, "Use N synthetic samples");
    sc_sal->add_option("--split", sal_split, "train | test");
    sc_sal->add_option("--limit", sal_limit, "Examples to rank");
    sc_sal->add_option("--out", sal_out, "Output directory");

    // field
    auto* sc_field = app.add_subcommand("field", "Evaluate a semantic-field expression");
    std::string fd_expr, fd_objects, fd_features, fd_ck, fd_data,
        fd_out = default_out_root() + "/field";
    int64_t fd_limit = 200, fd_top = 20, fd_synth = 0;
    sc_field->add_option("--expr", fd_expr, "Expression, e.g. \"a & b - c\"")->required();
    sc_field->add_option("--objects", fd_objects, "CSV of name,v0,v1,... rows");
    sc_field->add_option("--features", fd_features, "CSV of feature vectors (one per row)");
    sc_field->add_option("--checkpoint", fd_ck, "Tversky checkpoint (objects = embedded images)");
    sc_field->add_option("--data-dir", fd_data, "IDX directory");
    sc_field->add_option("--synthetic", fd_synth, "Use N synthetic samples");
    sc_field->add_option("--limit", fd_limit, "Images to embed as objects (named i0, i1, ...)");
    sc_field->add_option("--top", fd_top, "Ranked objects to keep");
    sc_field->add_option("--out", fd_out, "Output directory");

    // boundary
    auto* sc_bnd = app.add_subcommand("boundary", "Decision-boundary grid of a 2-d model");
    std::string bd_construct, bd_out = default_out_root() + "/boundary";
    std::string bd_inter = "product", bd_diff = "substractmatch", bd_pinit = "uniform",
                bd_finit = "uniform";
    bool bd_norm = false, bd_trained = false;
    int bd_res = 41, bd_epochs = 1000;
    int64_t bd_features = 16;
    uint64_t bd_seed = 0;
    double bd_lo = -2, bd_hi = 2, bd_lr = 0.01;
    sc_bnd->add_option("--construct", bd_construct, "xor | add (hand-set layer)");
    sc_bnd->add_flag("--trained", bd_trained, "Train one xor trial, then plot it");
    sc_bnd->add_option("--intersection", bd_inter, "Trial intersection reduction");
    sc_bnd->add_option("--difference", bd_diff, "Trial difference reduction");
    sc_bnd->add_flag("--normalize", bd_norm, "Trial normalization mode");
    sc_bnd->add_option("--features", bd_features, "Trial feature count");
    sc_bnd->add_option("--proto-init", bd_pinit, "uniform | normal | orthogonal");
    sc_bnd->add_option("--feature-init", bd_finit, "uniform | normal | orthogonal");
    sc_bnd->add_option("--seed", bd_seed, "Trial seed");
    sc_bnd->add_option("--epochs", bd_epochs, "Trial epochs");
    sc_bnd->add_option("--lr", bd_lr, "Trial learning rate");
    sc_bnd->add_option("--resolution", bd_res, "Grid resolution per axis");
    sc_bnd->add_option("--min", bd_lo, "Range minimum (both axes)");
    sc_bnd->add_option("--max", bd_hi, "Range maximum (both axes)");
    sc_bnd->add_option("--out", bd_out, "Output directory");

    // proto-images
    auto* sc_img = app.add_subcommand("proto-images", "Export prototype images from a checkpoint");
    std::string im_ck, im_out = default_out_root() + "/proto-images", im_tag;
    sc_img->add_option("--checkpoint", im_ck, "Checkpoint path")->required();
    sc_img->add_option("--out", im_out, "Output directory");
    sc_img->add_option("--tag", im_tag, "Filename suffix, e.g. _ep100");

    try {
        app.parse(argc, argv);

        if (app.got_subcommand("xor-construct")) {
            print_constructed(build_constructed_xor(), "txor");
            return 0;
        }
        if (app.got_subcommand("add-construct")) {
            print_constructed(build_constructed_add(), "tadd");
            return 0;
        }

        if (app.got_subcommand("gradcheck")) {
            auto res = run_gradcheck_suite(grad_points, grad_h, grad_seed);
            for (const auto& c : res.cases)
                std::cout << (c.max_rel_err < grad_tol ? "[ok]   " : "[FAIL] ") << c.name
                          << "  max_rel_err=" << format_float(c.max_rel_err)
                          << "  coords=" << c.checked << " excluded=" << c.excluded << "\n";
            std::cout << "worst: " << format_float(res.worst) << " (tolerance "
                      << format_float(grad_tol) << ")\n";
            return res.passed(grad_tol) ? 0 : 1;
        }

        if (app.got_subcommand("xor-sweep")) {
            json resolved = sweep_defaults();
            if (!sweep_config_path.empty())
                resolved = merge_config(resolved, load_config_file(sweep_config_path));
            if (sweep_grid == "desk") {
                resolved["intersections"] = {"product", "min"};
                resolved["differences"] = {"ignorematch", "substractmatch"};
                resolved["normalize_modes"] = {false};
                resolved["feature_counts"] = {1, 16};
                resolved["proto_inits"] = {"uniform"};
                resolved["feature_inits"] = {"uniform"};
                resolved["seeds"] = 50;
            } else if (!sweep_grid.empty() && sweep_grid != "paper") {
                throw std::runtime_error("unknown grid \"" + sweep_grid + "\"");
            }
            if (sweep_parallel >= 0) resolved["parallel"] = sweep_parallel;
            if (!sweep_out.empty()) resolved["out"] = sweep_out;
            if (sweep_seeds > 0) resolved["seeds"] = sweep_seeds;
            if (sweep_epochs > 0) resolved["epochs"] = sweep_epochs;
            if (sweep_master != UINT64_MAX) resolved["master_seed"] = sweep_master;
            return cmd_xor_sweep(resolved, sweep_dry, sweep_resume);
        }

        if (app.got_subcommand("train-mnist")) {
            ensure_directory(tr_out);
            ReductionConfig head{intersection_from_string(tr_inter),
                                 difference_from_string(tr_diff), false};
            MnistNet net(mnist_variant_from_string(tr_model), derive_seed(tr_seed, 0), head);
            std::cout << to_string(net.variant()) << ": " << net.parameter_count()
                      << " parameters\n";
            DatasetHandle train = load_split(tr_data, "train", tr_synth, tr_seed + 100);
            DatasetHandle test = load_split(tr_data, "test", tr_synth / 6 + 1, tr_seed + 100);

            json resolved = {{"model", tr_model},       {"intersection", tr_inter},
                             {"difference", tr_diff},   {"epochs", tr_epochs},
                             {"batch", tr_batch},       {"lr", tr_lr},
                             {"wd", tr_wd},             {"dropout", tr_dropout},
                             {"seed", tr_seed},         {"stop_at_acc", tr_stop},
                             {"snapshot_every", tr_snapshot}, {"data_dir", tr_data},
                             {"synthetic", tr_synth},   {"out", tr_out}};
            echo_resolved_config(resolved, tr_out);

            TrainProtocol protocol;
            protocol.epochs = tr_epochs;
            protocol.batch_size = tr_batch;
            protocol.learning_rate = tr_lr;
            protocol.weight_decay = tr_wd;
            protocol.dropout = tr_dropout;
            protocol.seed = tr_seed;
            protocol.stop_at_test_acc = tr_stop;

            CsvWriter log({"epoch", "train_loss", "test_acc", "theta", "alpha", "beta",
                           "seconds"});
            auto on_epoch = [&](const EpochLog& l, MnistNet& n) {
                log.row({std::to_string(l.epoch), format_float(l.train_loss),
                         format_float(l.test_acc), format_float(l.theta), format_float(l.alpha),
                         format_float(l.beta), format_float(l.seconds)});
                log.save(tr_out + "/log.csv");
                std::cout << "epoch " << l.epoch << ": loss " << format_float(l.train_loss)
                          << ", test acc " << format_float(l.test_acc) << "\n"
                          << std::flush;
                if (tr_snapshot > 0 && l.epoch % tr_snapshot == 0 &&
                    (n.variant() == MnistVariant::VisualTversky ||
                     n.variant() == MnistVariant::VisualBaseline)) {
                    export_prototype_images(n.prototype_rows(), 28, 28, tr_out, "proto",
                                            "_ep" + std::to_string(l.epoch));
                }
            };
            TrainResult res = train_mnist(net, train, test, protocol, on_epoch);
            save_mnist_checkpoint(tr_out + "/checkpoint.tvck", net, res.epochs_run);

            // contrast-weight trace for the tversky variants
            if (net.variant() == MnistVariant::Tversky ||
                net.variant() == MnistVariant::VisualTversky) {
                CsvWriter trace({"epoch", "theta", "alpha", "beta"});
                for (const auto& l : res.log)
                    trace.row({std::to_string(l.epoch), format_float(l.theta),
                               format_float(l.alpha), format_float(l.beta)});
                trace.save(tr_out + "/trace.csv");
            }
            std::cout << "final test acc " << format_float(res.final_test_acc) << " after "
                      << res.epochs_run << " epochs; checkpoint in " << tr_out << "\n";
            return 0;
        }

        if (app.got_subcommand("eval")) {
            MnistNet net = load_mnist_checkpoint(ev_ck);
            DatasetHandle ds = load_split(ev_data, ev_split, ev_synth, 100);
            std::cout << "accuracy(" << ev_split << ") = "
                      << format_float(net.evaluate_accuracy(ds)) << "\n";
            return 0;
        }

        if (app.got_subcommand("salience")) {
            MnistNet net = load_mnist_checkpoint(sal_ck);
            FeatureBank<float> bank = feature_bank_of(net);
            DatasetHandle ds = load_split(sal_data, sal_split, sal_synth, 100);
            Tensor<float> emb = embed_dataset(net, ds, sal_limit);
            std::vector<Tensor<float>> objects;
            for (int64_t i = 0; i < emb.shape[0]; ++i) {
                Tensor<float> v({36});
                for (int64_t j = 0; j < 36; ++j) v.data[static_cast<size_t>(j)] = emb.at(i, j);
                objects.push_back(std::move(v));
            }
            auto ranked = salience_rank(objects, bank);
            ensure_directory(sal_out);
            CsvWriter w({"rank", "id", "label", "salience"});
            for (size_t r = 0; r < ranked.size(); ++r)
                w.row({std::to_string(r), std::to_string(ranked[r].id),
                       std::to_string(ds.labels[static_cast<size_t>(ranked[r].id)]),
                       format_float(ranked[r].score)});
            w.save(sal_out + "/salience.csv");
            std::cout << "ranked " << ranked.size() << " examples (ascending salience) into "
                      << sal_out << "/salience.csv\n";
            return 0;
        }

        if (app.got_subcommand("field")) {
            FieldExpr expr = parse_field_expr(fd_expr);
            ObjectTable<float> table;
            std::unique_ptr<FeatureBank<float>> bank;
            if (!fd_objects.empty()) {
                table = table_from_csv(fd_objects);
                if (fd_features.empty())
                    throw std::runtime_error("--objects needs --features (csv of feature rows)");
                bank = std::make_unique<FeatureBank<float>>(bank_from_csv(fd_features));
            } else if (!fd_ck.empty()) {
                MnistNet net = load_mnist_checkpoint(fd_ck);
                bank = std::make_unique<FeatureBank<float>>(feature_bank_of(net));
                DatasetHandle ds = load_split(fd_data, "test", fd_synth, 100);
                Tensor<float> emb = embed_dataset(net, ds, fd_limit);
                for (int64_t i = 0; i < emb.shape[0]; ++i) {
                    Tensor<float> v({36});
                    for (int64_t j = 0; j < 36; ++j)
                        v.data[static_cast<size_t>(j)] = emb.at(i, j);
                    table.names.push_back("i" + std::to_string(i));
                    table.vectors.push_back(std::move(v));
                }
            } else {
                throw std::runtime_error("field: pass --objects/--features or --checkpoint");
            }
            auto field = evaluate_field(expr, table, *bank);
            std::cout << field_expr_to_string(expr) << " -> {";
            for (size_t i = 0; i < field.size(); ++i)
                std::cout << (i ? ", " : "") << "f" << field[i];
            std::cout << "}  (" << field.size() << " features)\n";
            auto ranked = rank_in_field(field, table, *bank, static_cast<size_t>(fd_top));
            ensure_directory(fd_out);
            CsvWriter w({"rank", "object", "score"});
            for (size_t r = 0; r < ranked.size(); ++r) {
                w.row({std::to_string(r), table.names[static_cast<size_t>(ranked[r].object)],
                       format_float(ranked[r].score)});
                if (r < 20)
                    std::cout << "  " << table.names[static_cast<size_t>(ranked[r].object)]
                              << "  " << format_float(ranked[r].score) << "\n";
            }
            w.save(fd_out + "/field.csv");
            return 0;
        }

        if (app.got_subcommand("boundary")) {
            ensure_directory(bd_out);
            BoundaryGrid grid;
            if (!bd_construct.empty()) {
                ConstructedModel model =
                    bd_construct == "xor" ? build_constructed_xor() : build_constructed_add();
                if (bd_construct != "xor" && bd_construct != "add")
                    throw std::runtime_error("boundary: --construct must be xor or add");
                if (model.layer.features->dim() != 2)
                    throw std::runtime_error("boundary: " + bd_construct +
                                             " is not a 2-d-input model");
                grid = decision_boundary_grid(plane_scorer(model), model.class_count, bd_lo,
                                              bd_hi, bd_lo, bd_hi, bd_res);
            } else if (bd_trained) {
                TrialConfig tc;
                tc.intersection = intersection_from_string(bd_inter);
                tc.difference = difference_from_string(bd_diff);
                tc.normalize = bd_norm;
                tc.feature_count = bd_features;
                tc.proto_init = init_from_string(bd_pinit);
                tc.feature_init = init_from_string(bd_finit);
                tc.seed = derive_seed(bd_seed, 0);
                tc.epochs = bd_epochs;
                tc.learning_rate = bd_lr;
                TverskyProjectionLayer<float> layer = make_xor_layer(tc);
                TrialResult tr = train_xor_layer(layer, tc);
                std::cout << "trial best acc " << format_float(tr.best_acc)
                          << (tr.converged ? " (converged)" : " (not converged)") << "\n";
                // lift to double for plotting
                TverskyProjectionLayer<double> dlayer;
                Tensor<double> dp({2, 2}), df({tc.feature_count, 2});
                for (size_t i = 0; i < dp.data.size(); ++i)
                    dp.data[i] = layer.prototypes.prototypes->data[i];
                for (size_t i = 0; i < df.data.size(); ++i)
                    df.data[i] = layer.features->features.data[i];
                dlayer.prototypes = PrototypeBank<double>::owned(std::move(dp));
                dlayer.features = std::make_shared<FeatureBank<double>>(std::move(df));
                dlayer.weights = ContrastWeights<double>(layer.weights.theta.data[0],
                                                         layer.weights.alpha.data[0],
                                                         layer.weights.beta.data[0]);
                dlayer.cfg = layer.cfg;
                grid = decision_boundary_grid(plane_scorer(dlayer), 2, bd_lo, bd_hi, bd_lo,
                                              bd_hi, bd_res);
            } else {
                throw std::runtime_error("boundary: pass --construct xor|add or --trained");
            }

            CsvWriter w({"x", "y", "class"});
            for (int iy = 0; iy < grid.resolution; ++iy)
                for (int ix = 0; ix < grid.resolution; ++ix)
                    w.row({format_float(grid.xs[static_cast<size_t>(ix)]),
                           format_float(grid.ys[static_cast<size_t>(iy)]),
                           std::to_string(
                               grid.cls[static_cast<size_t>(iy) * grid.resolution + ix])});
            w.save(bd_out + "/grid.csv");
            // class map as a grayscale image, classes spread over [0,255]
            std::vector<uint8_t> px(grid.cls.size());
            for (size_t i = 0; i < px.size(); ++i)
                px[i] = static_cast<uint8_t>(grid.classes == 1
                                                 ? 0
                                                 : grid.cls[i] * 255 / (grid.classes - 1));
            write_pgm(bd_out + "/grid.pgm", grid.resolution, grid.resolution, px);
            std::cout << "grid " << grid.resolution << "x" << grid.resolution << " written to "
                      << bd_out << "\n";
            return 0;
        }

        if (app.got_subcommand("proto-images")) {
            MnistNet net = load_mnist_checkpoint(im_ck);
            ensure_directory(im_out);
            Tensor<float> rows = net.prototype_rows();
            int64_t per = rows.numel() / rows.shape[0];
            if (per != 28 * 28)
                throw std::runtime_error(
                    "proto-images: parameters of width " + std::to_string(per) +
                    " are not 28x28-reshapeable; use a visual variant checkpoint");
            auto paths = export_prototype_images(rows, 28, 28, im_out, "proto", im_tag);
            if (net.variant() == MnistVariant::VisualTversky) {
                Tensor<float> feats({20, 784});
                for (int64_t i = 0; i < 20; ++i)
                    for (int64_t j = 0; j < 784; ++j)
                        feats.at(i, j) =
                            net.visual.param_images.data[static_cast<size_t>((10 + i) * 784 + j)];
                auto fpaths = export_prototype_images(feats, 28, 28, im_out, "feature", im_tag);
                paths.insert(paths.end(), fpaths.begin(), fpaths.end());
            }
            std::cout << "wrote " << paths.size() << " images to " << im_out << "\n";
            return 0;
        }

        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
