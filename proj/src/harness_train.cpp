#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "corolla/harness.hpp"
#include "corolla/num/optim.hpp"

namespace corolla::harness {

namespace {

std::uint64_t branch_id(supcon::Branch b) {
    return b == supcon::Branch::fundus ? 0 : 1;
}

// Deterministic shuffled copy.
std::vector<int> shuffled(std::vector<int> v, Pcg32& rng) {
    for (size_t i = v.size() > 0 ? v.size() - 1 : 0; i > 0; --i) {
        size_t j = rng.next_below(static_cast<std::uint32_t>(i + 1));
        std::swap(v[i], v[j]);
    }
    return v;
}

// Batch boundaries: full batches plus a trailing remainder when it still
// holds >= 2 cases.
std::vector<std::pair<int, int>> batch_ranges(int n, int batch) {
    std::vector<std::pair<int, int>> out;
    int pos = 0;
    while (n - pos >= batch) {
        out.emplace_back(pos, pos + batch);
        pos += batch;
    }
    if (n - pos >= 2) out.emplace_back(pos, n);
    return out;
}

// Smoothed-loss convergence tracker: convergence fires when `patience`
// epochs pass without a new best mean-of-last-3 loss; training then runs a
// fixed tail of extra epochs.
struct ConvergenceTracker {
    int patience;
    int extra;
    double best = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    int converged_epoch = -1;
    int stop_epoch = -1;
    std::vector<double> losses;

    ConvergenceTracker(int patience_, int extra_)
        : patience(patience_), extra(extra_) {}

    // returns true when training should stop after this epoch
    bool update(double loss) {
        losses.push_back(loss);
        size_t n = losses.size();
        size_t take = std::min<size_t>(3, n);
        double smoothed = 0.0;
        for (size_t i = n - take; i < n; ++i) smoothed += losses[i];
        smoothed /= static_cast<double>(take);
        int epoch = static_cast<int>(n) - 1;
        if (smoothed < best - 1e-9) {
            best = smoothed;
            best_epoch = epoch;
        }
        if (converged_epoch < 0 && epoch - best_epoch >= patience) {
            converged_epoch = epoch;
            stop_epoch = epoch + extra;
        }
        return converged_epoch >= 0 && epoch >= stop_epoch;
    }
};

const ImageRGB& branch_image(const LoadedDataset& data, supcon::Branch b,
                             int idx) {
    return b == supcon::Branch::fundus ? data.fundus[idx] : data.thickness[idx];
}

}  // namespace

Stage1Result train_stage1(const LoadedDataset& data,
                          const std::vector<int>& case_indices,
                          supcon::Branch branch, const TrainConfig& cfg,
                          std::uint64_t fold_tag) {
    cfg.validate();
    require(!case_indices.empty(), ErrorCode::invalid_argument,
            "train_stage1: empty case list");
    const int n = static_cast<int>(case_indices.size());
    require(n >= 2, ErrorCode::invalid_argument,
            "train_stage1: need at least 2 cases");

    Pcg32 enc_rng = fork_stream(cfg.seed, "stage1.init.encoder",
                                branch_id(branch), fold_tag);
    Pcg32 proj_rng = fork_stream(cfg.seed, "stage1.init.projection",
                                 branch_id(branch), fold_tag);
    auto enc = fusion::Encoder<float>::init(cfg.encoder_config(branch), enc_rng);
    auto proj = fusion::ProjectionHead<float>::init(cfg.feature_width,
                                                    cfg.projection_dim, proj_rng);
    std::vector<num::Var<float>> params = enc.params();
    for (auto& p : proj.params()) params.push_back(p);
    auto adam = num::AdamState<float>::init(params);

    supcon::AugmentationSpec aug = cfg.augmentation(branch);
    supcon::ContrastiveConfig loss_cfg;
    loss_cfg.temperature = cfg.temperature;
    loss_cfg.reduction = cfg.loss_reduction;

    const auto ranges = batch_ranges(n, cfg.batch_size);
    require(!ranges.empty(), ErrorCode::invalid_argument,
            "train_stage1: no usable batches (need >= 2 cases)");
    const long total_steps =
        static_cast<long>(cfg.epochs_stage1) * static_cast<long>(ranges.size());

    Stage1Result res;
    ConvergenceTracker tracker(cfg.patience, cfg.extra_epochs_stage1);
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs_stage1; ++epoch) {
        Pcg32 epoch_rng = fork_stream(cfg.seed, "stage1.epoch",
                                      branch_id(branch), fold_tag,
                                      static_cast<std::uint64_t>(epoch));
        std::vector<int> order = shuffled(case_indices, epoch_rng);
        double loss_acc = 0.0;
        double pos_sim_acc = 0.0;
        long skipped = 0;
        for (const auto& [lo, hi] : ranges) {
            std::vector<num::Var<float>> rows;
            std::vector<int> labels, pairing;
            for (int bi = lo; bi < hi; ++bi) {
                int ci = order[bi];
                const ImageRGB& img = branch_image(data, branch, ci);
                for (int view = 0; view < 2; ++view) {
                    ImageRGB v = supcon::augment(img, aug, epoch_rng);
                    auto leaf = num::Var<float>::leaf(
                        fusion::image_to_tensor<float>(v), false);
                    rows.push_back(proj.forward(enc.forward(leaf)));
                    labels.push_back(data.grades[ci]);
                }
                int base = static_cast<int>(pairing.size());
                pairing.push_back(base + 1);
                pairing.push_back(base);
            }
            supcon::EmbeddingBatch<float> batch;
            batch.z = num::stack_rows(rows);
            batch.labels = std::move(labels);
            batch.pairing = std::move(pairing);
            auto loss = supcon::sup_contrastive_loss(batch, loss_cfg);
            num::backward(loss.loss);
            float lr = static_cast<float>(
                num::cosine_lr(step, total_steps, cfg.lr_stage1));
            num::adam_step(params, adam, lr);
            for (auto& p : params) p.zero_grad();
            ++step;
            loss_acc += static_cast<double>(loss.loss.value()[0]);
            pos_sim_acc += loss.mean_positive_similarity;
            skipped += loss.skipped_anchors;
        }
        res.epoch_losses.push_back(loss_acc / static_cast<double>(ranges.size()));
        res.epoch_mean_positive_similarity.push_back(
            pos_sim_acc / static_cast<double>(ranges.size()));
        res.epoch_skipped_anchors.push_back(skipped);
        if (tracker.update(res.epoch_losses.back())) break;
    }
    res.converged_epoch = tracker.converged_epoch;

    fusion::save_encoder(res.checkpoint, "encoder", enc);
    fusion::save_projection(res.checkpoint, "projection", proj);
    res.checkpoint.meta["stage"] = 1;
    res.checkpoint.meta["branch"] =
        branch == supcon::Branch::fundus ? "fundus" : "thickness";
    res.checkpoint.meta["seed"] = cfg.seed;
    res.checkpoint.meta["fold"] = fold_tag;
    return res;
}

std::vector<num::Var<float>> FusedModel::trainable_params(
    bool freeze_backbones) {
    std::vector<num::Var<float>> params;
    if (!freeze_backbones) {
        if (enc_fundus)
            for (auto& p : enc_fundus->params()) params.push_back(p);
        if (enc_thickness)
            for (auto& p : enc_thickness->params()) params.push_back(p);
    } else {
        if (enc_fundus)
            for (auto& p : enc_fundus->params()) p.set_requires_grad(false);
        if (enc_thickness)
            for (auto& p : enc_thickness->params()) p.set_requires_grad(false);
    }
    for (auto& p : head.params()) params.push_back(p);
    return params;
}

num::Var<float> FusedModel::logits(const LoadedDataset& data,
                                   int case_index) const {
    std::optional<num::Var<float>> f_fundus, f_thick;
    if (enc_fundus) {
        auto leaf = num::Var<float>::leaf(
            fusion::image_to_tensor<float>(data.fundus[case_index]), false);
        f_fundus = enc_fundus->forward(leaf);
    }
    if (enc_thickness) {
        auto leaf = num::Var<float>::leaf(
            fusion::image_to_tensor<float>(data.thickness[case_index]), false);
        f_thick = enc_thickness->forward(leaf);
    }
    num::Var<float> feature;
    if (f_fundus && f_thick)
        feature = fusion::fuse(*f_fundus, *f_thick);
    else if (f_fundus)
        feature = *f_fundus;
    else
        feature = *f_thick;
    return head.forward(feature);
}

void FusedModel::save(const std::string& path, std::uint64_t seed,
                      const std::string& config_hash) const {
    num::Checkpoint ck;
    if (enc_fundus) fusion::save_encoder(ck, "fundus", *enc_fundus);
    if (enc_thickness) fusion::save_encoder(ck, "thickness", *enc_thickness);
    ck.add("head.weight", head.w.value());
    ck.add("head.bias", head.b.value());
    ck.meta["stage"] = 2;
    ck.meta["branches"] = branches == ModelBranches::both ? "both"
                          : branches == ModelBranches::fundus_only
                              ? "fundus"
                              : "thickness";
    ck.meta["seed"] = seed;
    ck.meta["config_hash"] = config_hash;
    ck.save(path);
}

FusedModel FusedModel::load(const std::string& path) {
    num::Checkpoint ck = num::Checkpoint::load(path);
    FusedModel m;
    std::string branches = ck.meta.value("branches", "both");
    m.branches = branches == "both"            ? ModelBranches::both
                 : branches == "fundus"        ? ModelBranches::fundus_only
                                               : ModelBranches::thickness_only;
    if (m.branches != ModelBranches::thickness_only)
        m.enc_fundus = fusion::load_encoder<float>(ck, "fundus");
    if (m.branches != ModelBranches::fundus_only)
        m.enc_thickness = fusion::load_encoder<float>(ck, "thickness");
    m.head.w = num::Var<float>::leaf(ck.get<float>("head.weight"), true);
    m.head.b = num::Var<float>::leaf(ck.get<float>("head.bias"), true);
    return m;
}

Stage2Result train_stage2(const LoadedDataset& data,
                          const std::vector<int>& case_indices,
                          ModelBranches branches,
                          const num::Checkpoint* stage1_fundus,
                          const num::Checkpoint* stage1_thickness,
                          const TrainConfig& cfg, std::uint64_t fold_tag) {
    cfg.validate();
    require(!case_indices.empty(), ErrorCode::invalid_argument,
            "train_stage2: empty case list");

    FusedModel model;
    model.branches = branches;
    int active = 0;
    if (branches != ModelBranches::thickness_only) {
        if (stage1_fundus) {
            // Stage-1 projection head is dropped here.
            model.enc_fundus =
                fusion::load_encoder<float>(*stage1_fundus, "encoder");
            require(model.enc_fundus->cfg ==
                        cfg.encoder_config(supcon::Branch::fundus),
                    ErrorCode::bad_header,
                    "train_stage2: fundus checkpoint architecture mismatch");
        } else {
            Pcg32 rng = fork_stream(cfg.seed, "stage2.init.encoder", 0, fold_tag);
            model.enc_fundus = fusion::Encoder<float>::init(
                cfg.encoder_config(supcon::Branch::fundus), rng);
        }
        ++active;
    }
    if (branches != ModelBranches::fundus_only) {
        if (stage1_thickness) {
            model.enc_thickness =
                fusion::load_encoder<float>(*stage1_thickness, "encoder");
            require(model.enc_thickness->cfg ==
                        cfg.encoder_config(supcon::Branch::thickness),
                    ErrorCode::bad_header,
                    "train_stage2: thickness checkpoint architecture mismatch");
        } else {
            Pcg32 rng = fork_stream(cfg.seed, "stage2.init.encoder", 1, fold_tag);
            model.enc_thickness = fusion::Encoder<float>::init(
                cfg.encoder_config(supcon::Branch::thickness), rng);
        }
        ++active;
    }
    Pcg32 head_rng = fork_stream(cfg.seed, "stage2.init.head", fold_tag);
    model.head = fusion::ClassifierHead<float>::init(
        cfg.feature_width * active, 3, head_rng);

    auto params = model.trainable_params(cfg.freeze_backbones);
    auto adam = num::AdamState<float>::init(params);

    const int n = static_cast<int>(case_indices.size());
    const auto ranges = batch_ranges(n, cfg.batch_size);
    require(!ranges.empty(), ErrorCode::invalid_argument,
            "train_stage2: no usable batches");

    Stage2Result res;
    ConvergenceTracker tracker(cfg.patience, cfg.extra_epochs_stage2);
    for (int epoch = 0; epoch < cfg.epochs_stage2; ++epoch) {
        Pcg32 epoch_rng = fork_stream(cfg.seed, "stage2.epoch", fold_tag,
                                      static_cast<std::uint64_t>(epoch));
        std::vector<int> order = shuffled(case_indices, epoch_rng);
        double loss_acc = 0.0;
        for (const auto& [lo, hi] : ranges) {
            num::Var<float> batch_loss;
            for (int bi = lo; bi < hi; ++bi) {
                int ci = order[bi];
                auto ce = fusion::cross_entropy(model.logits(data, ci),
                                                data.grades[ci]);
                batch_loss = bi == lo ? ce : num::add(batch_loss, ce);
            }
            batch_loss =
                num::scale(batch_loss, 1.0f / static_cast<float>(hi - lo));
            num::backward(batch_loss);
            num::adam_step(params, adam, static_cast<float>(cfg.lr_stage2));
            for (auto& p : params) p.zero_grad();
            loss_acc += static_cast<double>(batch_loss.value()[0]);
        }
        res.epoch_losses.push_back(loss_acc / static_cast<double>(ranges.size()));
        if (tracker.update(res.epoch_losses.back())) break;
    }
    res.converged_epoch = tracker.converged_epoch;
    res.model = std::move(model);
    return res;
}

Metrics evaluate(const FusedModel& model, const LoadedDataset& data,
                 const std::vector<int>& case_indices) {
    require(!case_indices.empty(), ErrorCode::invalid_argument,
            "evaluate: empty split");
    std::vector<std::vector<long>> confusion(3, std::vector<long>(3, 0));
    for (int ci : case_indices) {
        const auto& logits = model.logits(data, ci).value();
        int pred = 0;
        for (int c = 1; c < static_cast<int>(logits.numel()); ++c)
            if (logits[c] > logits[pred]) pred = c;
        confusion[data.grades[ci]][pred] += 1;
    }
    return metrics_from_confusion(confusion);
}

SimilarityReport embedding_similarity(const num::Checkpoint& stage1,
                                      supcon::Branch branch,
                                      const LoadedDataset& data,
                                      const std::vector<int>& case_indices) {
    auto enc = fusion::load_encoder<float>(stage1, "encoder");
    auto proj = fusion::load_projection<float>(stage1, "projection");
    std::vector<std::vector<float>> zs;
    std::vector<int> labels;
    for (int ci : case_indices) {
        auto leaf = num::Var<float>::leaf(
            fusion::image_to_tensor<float>(branch_image(data, branch, ci)),
            false);
        auto z = proj.forward(enc.forward(leaf));
        zs.push_back(z.value().data);
        labels.push_back(data.grades[ci]);
    }
    double intra = 0.0, inter = 0.0;
    long n_intra = 0, n_inter = 0;
    for (size_t i = 0; i < zs.size(); ++i)
        for (size_t j = i + 1; j < zs.size(); ++j) {
            double dot = 0.0;
            for (size_t c = 0; c < zs[i].size(); ++c)
                dot += static_cast<double>(zs[i][c]) * zs[j][c];
            if (labels[i] == labels[j]) {
                intra += dot;
                ++n_intra;
            } else {
                inter += dot;
                ++n_inter;
            }
        }
    SimilarityReport rep;
    if (n_intra > 0) rep.intra = intra / n_intra;
    if (n_inter > 0) rep.inter = inter / n_inter;
    return rep;
}

const AblationCell& GridResult::cell(const std::string& name) const {
    for (const auto& c : cells)
        if (c.name == name) return c;
    fail(ErrorCode::invalid_argument, "no ablation cell named " + name);
}

GridResult run_ablation_grid(const LoadedDataset& data,
                             const DatasetManifest& manifest,
                             const TrainConfig& cfg, int max_threads) {
    require(manifest.fold_count >= 2, ErrorCode::invalid_argument,
            "run_ablation_grid: manifest has no folds");
    const int folds = manifest.fold_count;

    struct RowSpec {
        const char* name;
        ModelBranches branches;
        bool scl;
    };
    const RowSpec rows[] = {
        {"fundus", ModelBranches::fundus_only, false},
        {"thickness", ModelBranches::thickness_only, false},
        {"fused", ModelBranches::both, false},
        {"fundus_scl", ModelBranches::fundus_only, true},
        {"thickness_scl", ModelBranches::thickness_only, true},
        {"fused_scl", ModelBranches::both, true},
    };
    constexpr int kRows = 6;

    std::vector<std::vector<Metrics>> metric_grid(
        kRows, std::vector<Metrics>(folds));
    std::vector<std::exception_ptr> errors(folds);

    auto run_fold = [&](int fold) {
        try {
            auto train_idx = manifest.fold_indices(fold, false);
            auto val_idx = manifest.fold_indices(fold, true);
            std::uint64_t tag = static_cast<std::uint64_t>(fold);

            // Stage-1 checkpoints are shared by every SCL row in this fold.
            auto s1_fundus = train_stage1(data, train_idx,
                                          supcon::Branch::fundus, cfg, tag);
            auto s1_thick = train_stage1(data, train_idx,
                                         supcon::Branch::thickness, cfg, tag);
            for (int r = 0; r < kRows; ++r) {
                const RowSpec& row = rows[r];
                const num::Checkpoint* ck_f =
                    row.scl && row.branches != ModelBranches::thickness_only
                        ? &s1_fundus.checkpoint
                        : nullptr;
                const num::Checkpoint* ck_t =
                    row.scl && row.branches != ModelBranches::fundus_only
                        ? &s1_thick.checkpoint
                        : nullptr;
                auto s2 = train_stage2(data, train_idx, row.branches, ck_f,
                                       ck_t, cfg, tag);
                metric_grid[r][fold] = evaluate(s2.model, data, val_idx);
            }
        } catch (...) {
            errors[fold] = std::current_exception();
        }
    };

    unsigned hw = std::thread::hardware_concurrency();
    int threads = max_threads > 0 ? max_threads
                                  : static_cast<int>(hw > 0 ? hw : 4);
    threads = std::min(threads, folds);
    if (threads <= 1) {
        for (int f = 0; f < folds; ++f) run_fold(f);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (;;) {
                    int f = next.fetch_add(1);
                    if (f >= folds) return;
                    run_fold(f);
                }
            });
        for (auto& th : pool) th.join();
    }
    for (int f = 0; f < folds; ++f)
        if (errors[f]) std::rethrow_exception(errors[f]);

    GridResult grid;
    for (int r = 0; r < kRows; ++r) {
        AblationCell cell;
        cell.name = rows[r].name;
        cell.uses_fundus = rows[r].branches != ModelBranches::thickness_only;
        cell.uses_thickness = rows[r].branches != ModelBranches::fundus_only;
        cell.uses_scl = rows[r].scl;
        cell.fold_metrics = metric_grid[r];
        for (const auto& m : cell.fold_metrics) {
            cell.mean_accuracy += m.accuracy;
            cell.mean_kappa += m.kappa;
            cell.mean_kappa_quadratic += m.kappa_quadratic;
        }
        cell.mean_accuracy /= folds;
        cell.mean_kappa /= folds;
        cell.mean_kappa_quadratic /= folds;
        grid.cells.push_back(std::move(cell));
    }
    return grid;
}

nlohmann::ordered_json grid_to_json(const GridResult& grid,
                                    const std::string& config_hash,
                                    std::uint64_t seed) {
    nlohmann::ordered_json j;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["rows"] = nlohmann::ordered_json::object();
    for (const auto& cell : grid.cells) {
        nlohmann::ordered_json row;
        row["uses_fundus"] = cell.uses_fundus;
        row["uses_thickness"] = cell.uses_thickness;
        row["uses_scl"] = cell.uses_scl;
        row["mean_accuracy"] = cell.mean_accuracy;
        row["mean_kappa"] = cell.mean_kappa;
        row["mean_kappa_quadratic"] = cell.mean_kappa_quadratic;
        row["folds"] = nlohmann::ordered_json::array();
        for (const auto& m : cell.fold_metrics) {
            nlohmann::ordered_json fm;
            fm["accuracy"] = m.accuracy;
            fm["kappa"] = m.kappa;
            fm["kappa_quadratic"] = m.kappa_quadratic;
            fm["confusion"] = m.confusion;
            row["folds"].push_back(fm);
        }
        j["rows"][cell.name] = row;
    }
    return j;
}

}  // namespace corolla::harness
