#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "corolla/app_config.hpp"
#include "corolla/png_io.hpp"

namespace fs = std::filesystem;
using namespace corolla;

namespace {

void write_json(const nlohmann::ordered_json& j, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    require(f.good(), ErrorCode::io, "cannot open for write: " + path);
    f << j.dump(2) << '\n';
    require(f.good(), ErrorCode::io, "write failed: " + path);
}

void write_loss_csv(const std::string& path,
                    const std::vector<double>& losses,
                    const std::vector<double>* pos_sim,
                    const std::vector<long>* skipped) {
    std::ofstream f(path, std::ios::trunc);
    require(f.good(), ErrorCode::io, "cannot open for write: " + path);
    f << "epoch,loss";
    if (pos_sim) f << ",mean_positive_similarity";
    if (skipped) f << ",skipped_anchors";
    f << '\n';
    char buf[64];
    for (size_t e = 0; e < losses.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g", e, losses[e]);
        f << buf;
        if (pos_sim) {
            std::snprintf(buf, sizeof(buf), ",%.17g", (*pos_sim)[e]);
            f << buf;
        }
        if (skipped) f << ',' << (*skipped)[e];
        f << '\n';
    }
}

std::vector<int> resolve_split(const harness::DatasetManifest& manifest,
                               int fold, const std::string& split) {
    if (fold < 0) {
        std::vector<int> all(manifest.cases.size());
        for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
        return all;
    }
    bool validation = split != "train";
    return manifest.fold_indices(fold, validation);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"COROLLA: synthetic OCT/fundus glaucoma-grading pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file")
        ->check(CLI::ExistingFile);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a labeled dataset");
    std::string synth_out;
    synth->add_option("--out", synth_out, "output directory")->required();
    std::uint64_t synth_seed = 0;
    bool synth_seed_set = false;
    synth->add_option("--seed", synth_seed, "dataset seed")
        ->each([&](const std::string&) { synth_seed_set = true; });
    int synth_cases = -1;
    synth->add_option("--cases-per-class", synth_cases, "cases per grade");
    bool synth_volumes = false;
    synth->add_flag("--with-volumes", synth_volumes, "also write .corovol files");

    // segment
    auto* segment = app.add_subcommand("segment", "extract layer surfaces");
    std::string seg_in, seg_out;
    segment->add_option("--in", seg_in, "input .corovol")->required();
    segment->add_option("--out", seg_out, "output base path (CSV per surface)")
        ->required();

    // thickness
    auto* thick = app.add_subcommand("thickness", "render a thickness map");
    std::string thick_in, thick_out;
    thick->add_option("--in", thick_in, "input .corovol")->required();
    thick->add_option("--out", thick_out, "output PNG")->required();

    // train-stage1
    auto* ts1 = app.add_subcommand("train-stage1",
                                   "contrastive pretraining of one branch");
    std::string ts1_manifest, ts1_branch, ts1_out, ts1_log;
    std::uint64_t ts1_seed = 0;
    int ts1_fold = -1;
    ts1->add_option("--manifest", ts1_manifest, "dataset manifest")->required();
    ts1->add_option("--branch", ts1_branch, "fundus | thickness")
        ->required()
        ->check(CLI::IsMember({"fundus", "thickness"}));
    ts1->add_option("--out", ts1_out, "checkpoint path")->required();
    ts1->add_option("--seed", ts1_seed, "training seed")->required();
    ts1->add_option("--fold", ts1_fold, "train on this fold's training split");
    ts1->add_option("--loss-log", ts1_log, "per-epoch CSV loss log");

    // train-stage2
    auto* ts2 = app.add_subcommand("train-stage2", "fusion classifier training");
    std::string ts2_manifest, ts2_out, ts2_branch = "both";
    std::string ts2_fundus_ckpt, ts2_thick_ckpt, ts2_log;
    std::uint64_t ts2_seed = 0;
    int ts2_fold = -1;
    bool ts2_freeze = false;
    ts2->add_option("--manifest", ts2_manifest, "dataset manifest")->required();
    ts2->add_option("--out", ts2_out, "model checkpoint path")->required();
    ts2->add_option("--seed", ts2_seed, "training seed")->required();
    ts2->add_option("--branch", ts2_branch, "both | fundus | thickness")
        ->check(CLI::IsMember({"both", "fundus", "thickness"}));
    ts2->add_option("--fundus-ckpt", ts2_fundus_ckpt, "stage-1 fundus checkpoint");
    ts2->add_option("--thickness-ckpt", ts2_thick_ckpt,
                    "stage-1 thickness checkpoint");
    ts2->add_option("--fold", ts2_fold, "train on this fold's training split");
    ts2->add_flag("--freeze-backbones", ts2_freeze,
                  "train only the classification head");
    ts2->add_option("--loss-log", ts2_log, "per-epoch CSV loss log");

    // crossval
    auto* cv = app.add_subcommand("crossval", "run the full ablation grid");
    std::string cv_manifest, cv_out;
    std::uint64_t cv_seed = 0;
    int cv_threads = 0;
    cv->add_option("--manifest", cv_manifest, "dataset manifest")->required();
    cv->add_option("--out", cv_out, "results JSON")->required();
    cv->add_option("--seed", cv_seed, "training seed")->required();
    cv->add_option("--threads", cv_threads, "max worker threads (0 = auto)");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a trained model");
    std::string ev_manifest, ev_model, ev_out, ev_split = "val";
    int ev_fold = -1;
    ev->add_option("--manifest", ev_manifest, "dataset manifest")->required();
    ev->add_option("--model", ev_model, "stage-2 checkpoint")->required();
    ev->add_option("--out", ev_out, "metrics JSON")->required();
    ev->add_option("--fold", ev_fold, "evaluate this fold");
    ev->add_option("--split", ev_split, "val | train (with --fold)")
        ->check(CLI::IsMember({"val", "train"}));

    CLI11_PARSE(app, argc, argv);

    try {
        AppConfig cfg = load_app_config(config_path);

        if (synth->parsed()) {
            if (synth_seed_set) cfg.seed = synth_seed;
            if (synth_cases > 0) cfg.cases_per_class = synth_cases;
            if (synth_volumes) cfg.with_volumes = true;
            auto manifest = synth_dataset(cfg, synth_out);
            std::printf("wrote %zu cases to %s\n", manifest.cases.size(),
                        synth_out.c_str());
        } else if (segment->parsed()) {
            OctVolume vol = load_volume(seg_in);
            SurfaceSet surfaces =
                segment_layers(vol, cfg.thickness_map.segmentation);
            save_surfaces_csv(surfaces, seg_out);
            std::printf("wrote %d surfaces to %s_surface_*.csv\n",
                        surfaces.num_surfaces, seg_out.c_str());
        } else if (thick->parsed()) {
            OctVolume vol = load_volume(thick_in);
            auto result = generate_thickness_map(vol, cfg.thickness_map);
            write_png_rgb8(result.rgb, thick_out);
            nlohmann::ordered_json sidecar;
            sidecar["config"] = app_config_to_json(cfg)["thickness_map"];
            sidecar["range"] = {result.t_lo, result.t_hi};
            sidecar["alpha"] = cfg.thickness_map.alpha;
            sidecar["surface_config_hash"] = config_hash(cfg);
            write_json(sidecar, thick_out + ".json");
            std::printf("wrote %s\n", thick_out.c_str());
        } else if (ts1->parsed()) {
            cfg.train.seed = ts1_seed;
            auto manifest = harness::DatasetManifest::load(ts1_manifest);
            auto data = harness::load_dataset(manifest, cfg.train);
            auto branch = ts1_branch == "fundus" ? supcon::Branch::fundus
                                                 : supcon::Branch::thickness;
            std::vector<int> idx = resolve_split(
                manifest, ts1_fold, "train");
            auto result = harness::train_stage1(
                data, idx, branch, cfg.train,
                ts1_fold < 0 ? 0 : static_cast<std::uint64_t>(ts1_fold));
            result.checkpoint.meta["config_hash"] = config_hash(cfg);
            result.checkpoint.save(ts1_out);
            if (!ts1_log.empty())
                write_loss_csv(ts1_log, result.epoch_losses,
                               &result.epoch_mean_positive_similarity,
                               &result.epoch_skipped_anchors);
            std::printf("stage-1 %s: %zu epochs, final loss %.6f -> %s\n",
                        ts1_branch.c_str(), result.epoch_losses.size(),
                        result.epoch_losses.back(), ts1_out.c_str());
        } else if (ts2->parsed()) {
            cfg.train.seed = ts2_seed;
            cfg.train.freeze_backbones = ts2_freeze || cfg.train.freeze_backbones;
            auto manifest = harness::DatasetManifest::load(ts2_manifest);
            auto data = harness::load_dataset(manifest, cfg.train);
            harness::ModelBranches branches =
                ts2_branch == "both"     ? harness::ModelBranches::both
                : ts2_branch == "fundus" ? harness::ModelBranches::fundus_only
                                         : harness::ModelBranches::thickness_only;
            num::Checkpoint ck_f, ck_t;
            const num::Checkpoint* pf = nullptr;
            const num::Checkpoint* pt = nullptr;
            if (!ts2_fundus_ckpt.empty()) {
                ck_f = num::Checkpoint::load(ts2_fundus_ckpt);
                pf = &ck_f;
            }
            if (!ts2_thick_ckpt.empty()) {
                ck_t = num::Checkpoint::load(ts2_thick_ckpt);
                pt = &ck_t;
            }
            std::vector<int> idx = resolve_split(manifest, ts2_fold, "train");
            auto result = harness::train_stage2(
                data, idx, branches, pf, pt, cfg.train,
                ts2_fold < 0 ? 0 : static_cast<std::uint64_t>(ts2_fold));
            result.model.save(ts2_out, ts2_seed, config_hash(cfg));
            if (!ts2_log.empty())
                write_loss_csv(ts2_log, result.epoch_losses, nullptr, nullptr);
            std::printf("stage-2 (%s): %zu epochs, final loss %.6f -> %s\n",
                        ts2_branch.c_str(), result.epoch_losses.size(),
                        result.epoch_losses.back(), ts2_out.c_str());
        } else if (cv->parsed()) {
            cfg.train.seed = cv_seed;
            auto manifest = harness::DatasetManifest::load(cv_manifest);
            auto data = harness::load_dataset(manifest, cfg.train);
            auto grid =
                harness::run_ablation_grid(data, manifest, cfg.train, cv_threads);
            write_json(harness::grid_to_json(grid, config_hash(cfg), cv_seed),
                       cv_out);
            for (const auto& cell : grid.cells)
                std::printf("%-14s acc %.4f  kappa %.4f  kappa_q %.4f\n",
                            cell.name.c_str(), cell.mean_accuracy,
                            cell.mean_kappa, cell.mean_kappa_quadratic);
        } else if (ev->parsed()) {
            auto manifest = harness::DatasetManifest::load(ev_manifest);
            auto data = harness::load_dataset(manifest, cfg.train);
            auto model = harness::FusedModel::load(ev_model);
            std::vector<int> idx = resolve_split(manifest, ev_fold, ev_split);
            auto metrics = harness::evaluate(model, data, idx);
            write_json(harness::metrics_to_json(metrics, config_hash(cfg)),
                       ev_out);
            std::printf("accuracy %.4f  kappa %.4f  kappa_q %.4f\n",
                        metrics.accuracy, metrics.kappa,
                        metrics.kappa_quadratic);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
