#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "corolla/fusion.hpp"
#include "corolla/image.hpp"
#include "corolla/supcon.hpp"

namespace corolla::harness {

struct CaseEntry {
    std::string id;
    std::string fundus_path;
    std::string thickness_path;
    std::string volume_path;  // optional, may be empty
    int grade = 0;
};

struct DatasetManifest {
    std::vector<CaseEntry> cases;
    int fold_count = 5;
    std::uint64_t fold_seed = 0;
    std::vector<int> fold_of;  // per case

    void save(const std::string& path) const;
    static DatasetManifest load(const std::string& path,
                                bool check_files = true);

    std::vector<int> fold_indices(int fold, bool validation) const;
};

// Per-class shuffle, then round-robin assignment with a rotating start so
// fold sizes stay balanced across classes.
std::vector<int> stratified_kfold(const std::vector<int>& labels, int k,
                                  std::uint64_t seed);

enum class KappaWeighting { none, quadratic };

// Chance-corrected agreement; quadratic weighting uses
// w_ij = 1 - (i-j)^2/(C-1)^2.
double cohen_kappa(const std::vector<std::vector<long>>& confusion,
                   KappaWeighting weighting);

struct Metrics {
    std::vector<std::vector<long>> confusion;  // [true][predicted]
    double accuracy = 0.0;
    double kappa = 0.0;
    double kappa_quadratic = 0.0;
};

Metrics metrics_from_confusion(const std::vector<std::vector<long>>& confusion);
nlohmann::ordered_json metrics_to_json(const Metrics& m,
                                       const std::string& config_hash);

struct TrainConfig {
    int batch_size = 8;
    double lr_stage1 = 1e-3;  // cosine decay
    double lr_stage2 = 2e-3;  // constant
    double temperature = 0.05;
    int epochs_stage1 = 30;
    int epochs_stage2 = 40;
    int patience = 5;           // epochs without a new best smoothed loss
    int extra_epochs_stage1 = 10;  // tail after convergence
    int extra_epochs_stage2 = 10;
    int fundus_size = 64;      // paper scale: 1024
    int thickness_size = 64;   // paper scale: 384
    int feature_width = 64;    // paper scale: 2048
    int projection_dim = 128;
    std::vector<int> channel_widths = {8, 16, 32};
    bool freeze_backbones = false;
    supcon::Reduction loss_reduction = supcon::Reduction::mean;
    double jitter_strength = 0.4;
    double grayscale_prob = 0.2;
    double crop_scale_lo = 0.7;
    double crop_scale_hi = 1.0;
    double flip_prob = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
    fusion::EncoderConfig encoder_config(supcon::Branch branch) const;
    supcon::AugmentationSpec augmentation(supcon::Branch branch) const;
};

// Images decoded and resized once; grades per case.
struct LoadedDataset {
    std::vector<ImageRGB> fundus;
    std::vector<ImageRGB> thickness;
    std::vector<int> grades;
};

LoadedDataset load_dataset(const DatasetManifest& manifest,
                           const TrainConfig& cfg);

enum class ModelBranches { fundus_only, thickness_only, both };

struct FusedModel {
    ModelBranches branches = ModelBranches::both;
    std::optional<fusion::Encoder<float>> enc_fundus;
    std::optional<fusion::Encoder<float>> enc_thickness;
    fusion::ClassifierHead<float> head;

    std::vector<num::Var<float>> trainable_params(bool freeze_backbones);
    num::Var<float> logits(const LoadedDataset& data, int case_index) const;

    void save(const std::string& path, std::uint64_t seed,
              const std::string& config_hash) const;
    static FusedModel load(const std::string& path);
};

struct Stage1Result {
    num::Checkpoint checkpoint;
    std::vector<double> epoch_losses;
    std::vector<double> epoch_mean_positive_similarity;
    std::vector<long> epoch_skipped_anchors;
    int converged_epoch = -1;  // -1: ran to the epoch cap
};

// Supervised-contrastive pretraining of one branch on the given cases.
Stage1Result train_stage1(const LoadedDataset& data,
                          const std::vector<int>& case_indices,
                          supcon::Branch branch, const TrainConfig& cfg,
                          std::uint64_t fold_tag = 0);

struct Stage2Result {
    FusedModel model;
    std::vector<double> epoch_losses;
    int converged_epoch = -1;
};

// Classification training: fuses branch features and fits the head with
// cross-entropy; encoders fine-tune unless freeze_backbones is set.
Stage2Result train_stage2(const LoadedDataset& data,
                          const std::vector<int>& case_indices,
                          ModelBranches branches,
                          const num::Checkpoint* stage1_fundus,
                          const num::Checkpoint* stage1_thickness,
                          const TrainConfig& cfg, std::uint64_t fold_tag = 0);

Metrics evaluate(const FusedModel& model, const LoadedDataset& data,
                 const std::vector<int>& case_indices);

// Mean intra-class vs inter-class cosine similarity of projected embeddings.
struct SimilarityReport {
    double intra = 0.0;
    double inter = 0.0;
};
SimilarityReport embedding_similarity(const num::Checkpoint& stage1,
                                      supcon::Branch branch,
                                      const LoadedDataset& data,
                                      const std::vector<int>& case_indices);

struct AblationCell {
    std::string name;
    bool uses_fundus = false;
    bool uses_thickness = false;
    bool uses_scl = false;
    std::vector<Metrics> fold_metrics;
    double mean_accuracy = 0.0;
    double mean_kappa = 0.0;
    double mean_kappa_quadratic = 0.0;
};

struct GridResult {
    std::vector<AblationCell> cells;
    const AblationCell& cell(const std::string& name) const;
};

// The six-configuration grid {fundus, thickness, fused} x {plain, SCL},
// cross-validated over the manifest folds. Stage-1 checkpoints are shared
// between the SCL rows within a fold. Folds may run in parallel.
GridResult run_ablation_grid(const LoadedDataset& data,
                             const DatasetManifest& manifest,
                             const TrainConfig& cfg, int max_threads = 0);

nlohmann::ordered_json grid_to_json(const GridResult& grid,
                                    const std::string& config_hash,
                                    std::uint64_t seed);

}  // namespace corolla::harness
