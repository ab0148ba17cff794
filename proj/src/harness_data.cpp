#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include "corolla/harness.hpp"
#include "corolla/png_io.hpp"

namespace corolla::harness {

namespace fs = std::filesystem;

void DatasetManifest::save(const std::string& path) const {
    nlohmann::ordered_json j;
    j["cases"] = nlohmann::ordered_json::array();
    for (const auto& c : cases) {
        nlohmann::ordered_json e;
        e["id"] = c.id;
        e["fundus"] = c.fundus_path;
        e["thickness"] = c.thickness_path;
        if (!c.volume_path.empty()) e["volume"] = c.volume_path;
        e["grade"] = c.grade;
        j["cases"].push_back(e);
    }
    j["folds"] = {{"k", fold_count},
                  {"seed", fold_seed},
                  {"assignment", fold_of}};
    std::ofstream f(path, std::ios::trunc);
    require(f.good(), ErrorCode::io, "cannot open for write: " + path);
    f << j.dump(2) << '\n';
    require(f.good(), ErrorCode::io, "write failed: " + path);
}

DatasetManifest DatasetManifest::load(const std::string& path,
                                      bool check_files) {
    std::ifstream f(path);
    require(f.good(), ErrorCode::missing_file, "cannot open: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        fail(ErrorCode::bad_header,
             std::string("manifest parse error: ") + e.what());
    }
    fs::path base = fs::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        if (p.empty()) return std::string();
        fs::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    DatasetManifest m;
    for (const auto& e : j.at("cases")) {
        CaseEntry c;
        c.id = e.at("id").get<std::string>();
        c.fundus_path = resolve(e.at("fundus").get<std::string>());
        c.thickness_path = resolve(e.at("thickness").get<std::string>());
        c.volume_path = resolve(e.value("volume", std::string()));
        c.grade = e.at("grade").get<int>();
        require(c.grade >= 0 && c.grade <= 2, ErrorCode::validation,
                "manifest: grade out of {0,1,2} for case " + c.id);
        if (check_files) {
            require(fs::exists(c.fundus_path), ErrorCode::missing_file,
                    "manifest: missing fundus image " + c.fundus_path);
            require(fs::exists(c.thickness_path), ErrorCode::missing_file,
                    "manifest: missing thickness map " + c.thickness_path);
            if (!c.volume_path.empty())
                require(fs::exists(c.volume_path), ErrorCode::missing_file,
                        "manifest: missing volume " + c.volume_path);
        }
        m.cases.push_back(std::move(c));
    }
    if (j.contains("folds")) {
        const auto& folds = j["folds"];
        m.fold_count = folds.at("k").get<int>();
        m.fold_seed = folds.value("seed", 0ULL);
        m.fold_of = folds.at("assignment").get<std::vector<int>>();
        require(m.fold_of.size() == m.cases.size(), ErrorCode::validation,
                "manifest: fold assignment length mismatch");
        for (int fo : m.fold_of)
            require(fo >= 0 && fo < m.fold_count, ErrorCode::validation,
                    "manifest: fold id out of range");
    } else {
        m.fold_count = 0;
    }
    return m;
}

std::vector<int> DatasetManifest::fold_indices(int fold, bool validation) const {
    require(fold_count > 0 && fold >= 0 && fold < fold_count,
            ErrorCode::invalid_argument, "fold out of range");
    std::vector<int> out;
    for (size_t i = 0; i < cases.size(); ++i)
        if ((fold_of[i] == fold) == validation) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> stratified_kfold(const std::vector<int>& labels, int k,
                                  std::uint64_t seed) {
    require(k >= 2, ErrorCode::invalid_argument, "stratified_kfold: k >= 2");
    std::map<int, std::vector<int>> by_class;
    for (size_t i = 0; i < labels.size(); ++i)
        by_class[labels[i]].push_back(static_cast<int>(i));
    for (const auto& [label, members] : by_class)
        require(static_cast<int>(members.size()) >= k, ErrorCode::invalid_argument,
                "stratified_kfold: class " + std::to_string(label) +
                    " has fewer members than folds");

    std::vector<int> fold_of(labels.size(), -1);
    int rotation = 0;
    for (auto& [label, members] : by_class) {
        Pcg32 rng = fork_stream(seed, "kfold.class",
                                static_cast<std::uint64_t>(label));
        for (size_t i = members.size() - 1; i > 0; --i) {
            size_t j = rng.next_below(static_cast<std::uint32_t>(i + 1));
            std::swap(members[i], members[j]);
        }
        for (size_t i = 0; i < members.size(); ++i)
            fold_of[members[i]] = (rotation + static_cast<int>(i)) % k;
        rotation = (rotation + static_cast<int>(members.size())) % k;
    }
    return fold_of;
}

double cohen_kappa(const std::vector<std::vector<long>>& confusion,
                   KappaWeighting weighting) {
    size_t c = confusion.size();
    require(c >= 1, ErrorCode::invalid_argument, "cohen_kappa: empty matrix");
    for (const auto& row : confusion)
        require(row.size() == c, ErrorCode::invalid_argument,
                "cohen_kappa: matrix must be square");

    std::vector<long> row_sum(c, 0), col_sum(c, 0);
    long total = 0;
    for (size_t i = 0; i < c; ++i)
        for (size_t j = 0; j < c; ++j) {
            require(confusion[i][j] >= 0, ErrorCode::invalid_argument,
                    "cohen_kappa: negative count");
            row_sum[i] += confusion[i][j];
            col_sum[j] += confusion[i][j];
            total += confusion[i][j];
        }
    require(total > 0, ErrorCode::invalid_argument,
            "cohen_kappa: total count must be positive");

    auto weight = [&](size_t i, size_t j) {
        if (weighting == KappaWeighting::none) return i == j ? 1.0 : 0.0;
        if (c == 1) return 1.0;
        double d = static_cast<double>(i) - static_cast<double>(j);
        double span = static_cast<double>(c - 1);
        return 1.0 - (d * d) / (span * span);
    };

    double po = 0.0, pe = 0.0;
    double n = static_cast<double>(total);
    for (size_t i = 0; i < c; ++i)
        for (size_t j = 0; j < c; ++j) {
            po += weight(i, j) * confusion[i][j] / n;
            pe += weight(i, j) * (row_sum[i] / n) * (col_sum[j] / n);
        }
    require(pe < 1.0, ErrorCode::degenerate_batch,
            "cohen_kappa: expected agreement is 1, kappa undefined");
    return (po - pe) / (1.0 - pe);
}

Metrics metrics_from_confusion(const std::vector<std::vector<long>>& confusion) {
    Metrics m;
    m.confusion = confusion;
    long total = 0, diag = 0;
    for (size_t i = 0; i < confusion.size(); ++i)
        for (size_t j = 0; j < confusion[i].size(); ++j) {
            total += confusion[i][j];
            if (i == j) diag += confusion[i][j];
        }
    require(total > 0, ErrorCode::invalid_argument,
            "metrics: empty confusion matrix");
    m.accuracy = static_cast<double>(diag) / static_cast<double>(total);
    m.kappa = cohen_kappa(confusion, KappaWeighting::none);
    m.kappa_quadratic = cohen_kappa(confusion, KappaWeighting::quadratic);
    return m;
}

nlohmann::ordered_json metrics_to_json(const Metrics& m,
                                       const std::string& config_hash) {
    nlohmann::ordered_json j;
    j["accuracy"] = m.accuracy;
    j["kappa"] = m.kappa;
    j["kappa_quadratic"] = m.kappa_quadratic;
    j["confusion"] = m.confusion;
    j["config_hash"] = config_hash;
    return j;
}

void TrainConfig::validate() const {
    require(batch_size >= 2, ErrorCode::validation,
            "TrainConfig: batch_size must be >= 2 (contrastive loss needs "
            "non-empty A(i))");
    require(lr_stage1 > 0.0 && lr_stage2 > 0.0, ErrorCode::validation,
            "TrainConfig: learning rates must be positive");
    require(temperature > 0.0, ErrorCode::validation,
            "TrainConfig: temperature must be positive");
    require(epochs_stage1 >= 1 && epochs_stage2 >= 1, ErrorCode::validation,
            "TrainConfig: epochs must be >= 1");
    require(fundus_size >= 8 && thickness_size >= 8, ErrorCode::validation,
            "TrainConfig: image sizes too small");
    require(feature_width >= 1 && projection_dim >= 1, ErrorCode::validation,
            "TrainConfig: widths must be positive");
}

fusion::EncoderConfig TrainConfig::encoder_config(supcon::Branch branch) const {
    fusion::EncoderConfig e;
    e.image_size =
        branch == supcon::Branch::fundus ? fundus_size : thickness_size;
    e.channel_widths = channel_widths;
    e.feature_width = feature_width;
    return e;
}

supcon::AugmentationSpec TrainConfig::augmentation(supcon::Branch branch) const {
    supcon::AugmentationSpec a;
    a.branch = branch;
    a.jitter_strength = jitter_strength;
    a.grayscale_prob = grayscale_prob;
    a.crop_scale_lo = crop_scale_lo;
    a.crop_scale_hi = crop_scale_hi;
    a.flip_prob = flip_prob;
    return a;
}

LoadedDataset load_dataset(const DatasetManifest& manifest,
                           const TrainConfig& cfg) {
    LoadedDataset d;
    for (const auto& c : manifest.cases) {
        ImageRGB fundus = read_png(c.fundus_path);
        ImageRGB thick = read_png(c.thickness_path);
        d.fundus.push_back(
            supcon::resize_image(fundus, cfg.fundus_size, cfg.fundus_size));
        d.thickness.push_back(supcon::resize_image(thick, cfg.thickness_size,
                                                   cfg.thickness_size));
        d.grades.push_back(c.grade);
    }
    return d;
}

}  // namespace corolla::harness
