#include "corolla/app_config.hpp"

#include <filesystem>
#include <fstream>

#include "corolla/png_io.hpp"

namespace corolla {

namespace fs = std::filesystem;

namespace {

nlohmann::ordered_json phantom_to_json(const PhantomSpec& p) {
    nlohmann::ordered_json j;
    j["slices"] = p.slices;
    j["rows"] = p.rows;
    j["cols"] = p.cols;
    j["voxel_scale"] = {p.voxel_scale.axial_um, p.voxel_scale.lateral_um,
                        p.voxel_scale.slice_um};
    j["base_depths"] = p.base_depths;
    j["undulation_amplitude"] = p.undulation_amplitude;
    j["undulation_frequency"] = p.undulation_frequency;
    j["bump_amplitude"] = p.bump_amplitude;
    j["bump_sigma_frac"] = p.bump_sigma_frac;
    j["layer_intensities"] = p.layer_intensities;
    j["noise_sigma"] = p.noise_sigma;
    j["thinning"] = p.thinning;
    j["target_layer"] = p.target_layer;
    j["fundus_size"] = p.fundus_size;
    j["vessel_intensity"] = p.vessel_intensity;
    return j;
}

void phantom_from_json(PhantomSpec& p, const nlohmann::json& j) {
    p.slices = j.value("slices", p.slices);
    p.rows = j.value("rows", p.rows);
    p.cols = j.value("cols", p.cols);
    if (j.contains("voxel_scale")) {
        auto vs = j["voxel_scale"].get<std::vector<double>>();
        require(vs.size() == 3, ErrorCode::bad_header, "voxel_scale needs 3 values");
        p.voxel_scale = {vs[0], vs[1], vs[2]};
    }
    if (j.contains("base_depths"))
        p.base_depths = j["base_depths"].get<std::vector<double>>();
    p.undulation_amplitude = j.value("undulation_amplitude", p.undulation_amplitude);
    p.undulation_frequency = j.value("undulation_frequency", p.undulation_frequency);
    p.bump_amplitude = j.value("bump_amplitude", p.bump_amplitude);
    p.bump_sigma_frac = j.value("bump_sigma_frac", p.bump_sigma_frac);
    if (j.contains("layer_intensities"))
        p.layer_intensities = j["layer_intensities"].get<std::vector<double>>();
    p.noise_sigma = j.value("noise_sigma", p.noise_sigma);
    p.thinning = j.value("thinning", p.thinning);
    p.target_layer = j.value("target_layer", p.target_layer);
    p.fundus_size = j.value("fundus_size", p.fundus_size);
    p.vessel_intensity = j.value("vessel_intensity", p.vessel_intensity);
}

std::string polarity_name(Polarity p) {
    return p == Polarity::dark_to_bright ? "dark_to_bright" : "bright_to_dark";
}

Polarity polarity_from(const std::string& s) {
    if (s == "dark_to_bright") return Polarity::dark_to_bright;
    if (s == "bright_to_dark") return Polarity::bright_to_dark;
    fail(ErrorCode::bad_header, "unknown polarity: " + s);
}

nlohmann::ordered_json segmentation_to_json(const SegmentationConfig& s) {
    nlohmann::ordered_json j;
    j["num_surfaces"] = s.num_surfaces;
    nlohmann::ordered_json pol = nlohmann::ordered_json::array();
    for (auto p : s.polarities) pol.push_back(polarity_name(p));
    j["polarities"] = pol;
    j["delta"] = s.delta;
    j["gap"] = s.gap;
    j["boundary_sentinel"] = s.boundary_sentinel;
    return j;
}

void segmentation_from_json(SegmentationConfig& s, const nlohmann::json& j) {
    s.num_surfaces = j.value("num_surfaces", s.num_surfaces);
    if (j.contains("polarities")) {
        s.polarities.clear();
        for (const auto& p : j["polarities"])
            s.polarities.push_back(polarity_from(p.get<std::string>()));
    }
    s.delta = j.value("delta", s.delta);
    s.gap = j.value("gap", s.gap);
    s.boundary_sentinel = j.value("boundary_sentinel", s.boundary_sentinel);
}

nlohmann::ordered_json thickness_to_json(const ThicknessMapConfig& t) {
    nlohmann::ordered_json j;
    j["surface_i"] = t.surface_i;
    j["surface_j"] = t.surface_j;
    j["projection_layers"] = t.projection_layers;
    j["t_lo"] = t.t_lo;
    j["t_hi"] = t.t_hi;
    j["alpha"] = t.alpha;
    j["out_size"] = t.out_size;
    j["segmentation"] = segmentation_to_json(t.segmentation);
    return j;
}

void thickness_from_json(ThicknessMapConfig& t, const nlohmann::json& j) {
    t.surface_i = j.value("surface_i", t.surface_i);
    t.surface_j = j.value("surface_j", t.surface_j);
    if (j.contains("projection_layers"))
        t.projection_layers = j["projection_layers"].get<std::vector<int>>();
    t.t_lo = j.value("t_lo", t.t_lo);
    t.t_hi = j.value("t_hi", t.t_hi);
    t.alpha = j.value("alpha", t.alpha);
    t.out_size = j.value("out_size", t.out_size);
    if (j.contains("segmentation"))
        segmentation_from_json(t.segmentation, j["segmentation"]);
}

nlohmann::ordered_json train_to_json(const harness::TrainConfig& t) {
    nlohmann::ordered_json j;
    j["batch_size"] = t.batch_size;
    j["lr_stage1"] = t.lr_stage1;
    j["lr_stage2"] = t.lr_stage2;
    j["temperature"] = t.temperature;
    j["epochs_stage1"] = t.epochs_stage1;
    j["epochs_stage2"] = t.epochs_stage2;
    j["patience"] = t.patience;
    j["extra_epochs_stage1"] = t.extra_epochs_stage1;
    j["extra_epochs_stage2"] = t.extra_epochs_stage2;
    j["fundus_size"] = t.fundus_size;
    j["thickness_size"] = t.thickness_size;
    j["feature_width"] = t.feature_width;
    j["projection_dim"] = t.projection_dim;
    j["channel_widths"] = t.channel_widths;
    j["freeze_backbones"] = t.freeze_backbones;
    j["loss_reduction"] =
        t.loss_reduction == supcon::Reduction::mean ? "mean" : "sum";
    j["jitter_strength"] = t.jitter_strength;
    j["grayscale_prob"] = t.grayscale_prob;
    j["crop_scale_lo"] = t.crop_scale_lo;
    j["crop_scale_hi"] = t.crop_scale_hi;
    j["flip_prob"] = t.flip_prob;
    return j;
}

void train_from_json(harness::TrainConfig& t, const nlohmann::json& j) {
    t.batch_size = j.value("batch_size", t.batch_size);
    t.lr_stage1 = j.value("lr_stage1", t.lr_stage1);
    t.lr_stage2 = j.value("lr_stage2", t.lr_stage2);
    t.temperature = j.value("temperature", t.temperature);
    t.epochs_stage1 = j.value("epochs_stage1", t.epochs_stage1);
    t.epochs_stage2 = j.value("epochs_stage2", t.epochs_stage2);
    t.patience = j.value("patience", t.patience);
    t.extra_epochs_stage1 = j.value("extra_epochs_stage1", t.extra_epochs_stage1);
    t.extra_epochs_stage2 = j.value("extra_epochs_stage2", t.extra_epochs_stage2);
    t.fundus_size = j.value("fundus_size", t.fundus_size);
    t.thickness_size = j.value("thickness_size", t.thickness_size);
    t.feature_width = j.value("feature_width", t.feature_width);
    t.projection_dim = j.value("projection_dim", t.projection_dim);
    if (j.contains("channel_widths"))
        t.channel_widths = j["channel_widths"].get<std::vector<int>>();
    t.freeze_backbones = j.value("freeze_backbones", t.freeze_backbones);
    if (j.contains("loss_reduction")) {
        std::string r = j["loss_reduction"].get<std::string>();
        require(r == "mean" || r == "sum", ErrorCode::bad_header,
                "loss_reduction must be mean or sum");
        t.loss_reduction =
            r == "mean" ? supcon::Reduction::mean : supcon::Reduction::sum;
    }
    t.jitter_strength = j.value("jitter_strength", t.jitter_strength);
    t.grayscale_prob = j.value("grayscale_prob", t.grayscale_prob);
    t.crop_scale_lo = j.value("crop_scale_lo", t.crop_scale_lo);
    t.crop_scale_hi = j.value("crop_scale_hi", t.crop_scale_hi);
    t.flip_prob = j.value("flip_prob", t.flip_prob);
}

}  // namespace

nlohmann::ordered_json app_config_to_json(const AppConfig& cfg) {
    nlohmann::ordered_json j;
    j["phantom"] = phantom_to_json(cfg.phantom);
    j["cases_per_class"] = cfg.cases_per_class;
    j["map_size"] = cfg.map_size;
    j["with_volumes"] = cfg.with_volumes;
    j["thickness_map"] = thickness_to_json(cfg.thickness_map);
    j["train"] = train_to_json(cfg.train);
    j["folds"] = cfg.folds;
    j["seed"] = cfg.seed;
    return j;
}

void apply_config_json(AppConfig& cfg, const nlohmann::json& j) {
    if (j.contains("phantom")) phantom_from_json(cfg.phantom, j["phantom"]);
    cfg.cases_per_class = j.value("cases_per_class", cfg.cases_per_class);
    cfg.map_size = j.value("map_size", cfg.map_size);
    cfg.with_volumes = j.value("with_volumes", cfg.with_volumes);
    if (j.contains("thickness_map"))
        thickness_from_json(cfg.thickness_map, j["thickness_map"]);
    if (j.contains("train")) train_from_json(cfg.train, j["train"]);
    cfg.folds = j.value("folds", cfg.folds);
    cfg.seed = j.value("seed", cfg.seed);
}

AppConfig load_app_config(const std::string& path) {
    AppConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream f(path);
    require(f.good(), ErrorCode::missing_file, "cannot open config: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        fail(ErrorCode::bad_header,
             std::string("config parse error: ") + e.what());
    }
    apply_config_json(cfg, j);
    return cfg;
}

std::string config_hash(const AppConfig& cfg) {
    std::uint64_t h = fnv1a64(app_config_to_json(cfg).dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return std::string(buf);
}

harness::DatasetManifest synth_dataset(const AppConfig& cfg,
                                       const std::string& out_dir) {
    require(cfg.cases_per_class >= 1, ErrorCode::invalid_argument,
            "synth_dataset: cases_per_class must be >= 1");
    fs::create_directories(out_dir);

    ThicknessMapConfig map_cfg = cfg.thickness_map;
    map_cfg.out_size = cfg.map_size;

    harness::DatasetManifest manifest;
    std::vector<int> grades;
    for (int g = 0; g < 3; ++g) {
        for (int c = 0; c < cfg.cases_per_class; ++c) {
            std::uint64_t h = fnv1a64("case");
            h = fnv1a64_u64(cfg.seed, h);
            h = fnv1a64_u64(static_cast<std::uint64_t>(g), h);
            h = fnv1a64_u64(static_cast<std::uint64_t>(c), h);

            SynthCase sc = synth_case(cfg.phantom, static_cast<Grade>(g), h);
            char id[32];
            std::snprintf(id, sizeof(id), "g%d_c%03d", g, c);

            std::string fundus_rel = std::string(id) + "_fundus.png";
            std::string map_rel = std::string(id) + "_thickness.png";
            write_png_rgb8(to_u8(sc.fundus), (fs::path(out_dir) / fundus_rel).string());
            auto map = generate_thickness_map(sc.volume, map_cfg);
            write_png_rgb8(map.rgb, (fs::path(out_dir) / map_rel).string());

            harness::CaseEntry entry;
            entry.id = id;
            entry.fundus_path = fundus_rel;
            entry.thickness_path = map_rel;
            entry.grade = g;
            if (cfg.with_volumes) {
                std::string vol_rel = std::string(id) + ".corovol";
                save_volume(sc.volume, (fs::path(out_dir) / vol_rel).string());
                entry.volume_path = vol_rel;
            }
            manifest.cases.push_back(std::move(entry));
            grades.push_back(g);
        }
    }
    manifest.fold_count = cfg.folds;
    manifest.fold_seed = cfg.seed;
    manifest.fold_of = harness::stratified_kfold(grades, cfg.folds, cfg.seed);
    manifest.save((fs::path(out_dir) / "manifest.json").string());
    // Reload so paths resolve exactly as consumers will see them.
    return harness::DatasetManifest::load(
        (fs::path(out_dir) / "manifest.json").string());
}

}  // namespace corolla
