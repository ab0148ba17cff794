#pragma once

#include <string>

#include <json.hpp>

#include "corolla/harness.hpp"
#include "corolla/thickness.hpp"
#include "corolla/volume.hpp"

namespace corolla {

// Whole-pipeline configuration: desk-scale defaults, every knob reachable
// from one JSON file. CLI flags override individual fields.
struct AppConfig {
    PhantomSpec phantom;
    int cases_per_class = 40;
    int map_size = 64;         // thickness-map PNG size in synthesized datasets
    bool with_volumes = false;
    ThicknessMapConfig thickness_map;
    harness::TrainConfig train;
    int folds = 5;
    std::uint64_t seed = 0;
};

nlohmann::ordered_json app_config_to_json(const AppConfig& cfg);
void apply_config_json(AppConfig& cfg, const nlohmann::json& j);
AppConfig load_app_config(const std::string& path);  // "" -> defaults

// FNV-1a of the canonical JSON serialization, hex-encoded.
std::string config_hash(const AppConfig& cfg);

// Synthesizes `cases_per_class` phantoms per grade: fundus and thickness-map
// PNGs (plus volumes when requested) and a manifest with stratified folds.
harness::DatasetManifest synth_dataset(const AppConfig& cfg,
                                       const std::string& out_dir);

}  // namespace corolla
