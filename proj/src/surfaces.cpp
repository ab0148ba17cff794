#include "corolla/surfaces.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace corolla {

void SurfaceSet::validate(int height, bool check_smoothness) const {
    require(num_surfaces >= 1 && slices >= 1 && cols >= 1,
            ErrorCode::validation, "SurfaceSet: empty dimensions");
    require(rows.size() ==
                static_cast<size_t>(num_surfaces) * slices * cols,
            ErrorCode::validation, "SurfaceSet: row buffer size mismatch");
    for (int k = 0; k < num_surfaces; ++k)
        for (int s = 0; s < slices; ++s)
            for (int x = 0; x < cols; ++x) {
                int r = at(k, s, x);
                require(r >= 0 && r < height, ErrorCode::validation,
                        "SurfaceSet: row out of range at surface " +
                            std::to_string(k) + " slice " + std::to_string(s) +
                            " col " + std::to_string(x));
                if (k > 0)
                    require(r >= at(k - 1, s, x) + gap, ErrorCode::validation,
                            "SurfaceSet: gap violated at surface " +
                                std::to_string(k) + " slice " +
                                std::to_string(s) + " col " + std::to_string(x));
                if (check_smoothness && x > 0) {
                    int d = r - at(k, s, x - 1);
                    require(d <= delta && -d <= delta, ErrorCode::validation,
                            "SurfaceSet: smoothness violated at surface " +
                                std::to_string(k) + " slice " +
                                std::to_string(s) + " col " + std::to_string(x));
                }
            }
}

void save_surfaces_csv(const SurfaceSet& s, const std::string& base_path) {
    for (int k = 0; k < s.num_surfaces; ++k) {
        std::string path = base_path + "_surface_" + std::to_string(k) + ".csv";
        std::ofstream f(path, std::ios::trunc);
        require(f.good(), ErrorCode::io, "cannot open for write: " + path);
        f << "slice,column,row\n";
        for (int sl = 0; sl < s.slices; ++sl)
            for (int x = 0; x < s.cols; ++x)
                f << sl << ',' << x << ',' << s.at(k, sl, x) << '\n';
        require(f.good(), ErrorCode::io, "write failed: " + path);
    }
    nlohmann::ordered_json sidecar;
    sidecar["num_surfaces"] = s.num_surfaces;
    sidecar["slices"] = s.slices;
    sidecar["cols"] = s.cols;
    sidecar["delta"] = s.delta;
    sidecar["gap"] = s.gap;
    std::string jpath = base_path + "_surfaces.json";
    std::ofstream jf(jpath, std::ios::trunc);
    require(jf.good(), ErrorCode::io, "cannot open for write: " + jpath);
    jf << sidecar.dump(2) << '\n';
}

SurfaceSet load_surfaces_csv(const std::string& base_path) {
    std::string jpath = base_path + "_surfaces.json";
    std::ifstream jf(jpath);
    require(jf.good(), ErrorCode::missing_file, "cannot open: " + jpath);
    nlohmann::json sidecar;
    try {
        jf >> sidecar;
    } catch (const std::exception& e) {
        fail(ErrorCode::bad_header,
             std::string("surfaces sidecar parse error: ") + e.what());
    }
    SurfaceSet s(sidecar.at("num_surfaces").get<int>(),
                 sidecar.at("slices").get<int>(), sidecar.at("cols").get<int>(),
                 sidecar.at("delta").get<int>(), sidecar.at("gap").get<int>());
    for (int k = 0; k < s.num_surfaces; ++k) {
        std::string path = base_path + "_surface_" + std::to_string(k) + ".csv";
        std::ifstream f(path);
        require(f.good(), ErrorCode::missing_file, "cannot open: " + path);
        std::string line;
        std::getline(f, line);  // header
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            int sl, x, r;
            if (std::sscanf(line.c_str(), "%d,%d,%d", &sl, &x, &r) != 3)
                fail(ErrorCode::bad_header, "bad CSV line in " + path);
            require(sl >= 0 && sl < s.slices && x >= 0 && x < s.cols,
                    ErrorCode::bad_header, "CSV index out of range in " + path);
            s.at(k, sl, x) = r;
        }
    }
    return s;
}

}  // namespace corolla
