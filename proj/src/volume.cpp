#include "corolla/volume.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace corolla {

void OctVolume::validate() const {
    require(slices >= 1 && rows >= 4 && cols >= 2, ErrorCode::validation,
            "OctVolume: dims must satisfy S>=1, H>=4, W>=2");
    require(data.size() == static_cast<size_t>(slices) * rows * cols,
            ErrorCode::validation, "OctVolume: payload size mismatch");
    for (float v : data)
        require(std::isfinite(v) && v >= 0.0f && v <= 1.0f,
                ErrorCode::validation,
                "OctVolume: intensities must be finite and within [0,1]");
}

void save_volume(const OctVolume& vol, const std::string& path) {
    vol.validate();
    nlohmann::ordered_json header;
    header["dims"] = {vol.slices, vol.rows, vol.cols};
    header["voxel_scale"] = {vol.voxel_scale.axial_um, vol.voxel_scale.lateral_um,
                             vol.voxel_scale.slice_um};
    header["dtype"] = "f32";
    std::string hjson = header.dump();

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), ErrorCode::io, "cannot open for write: " + path);
    f.write("COROVOL1", 8);
    std::uint32_t len = static_cast<std::uint32_t>(hjson.size());
    char lenb[4];
    for (int i = 0; i < 4; ++i) lenb[i] = static_cast<char>((len >> (8 * i)) & 0xff);
    f.write(lenb, 4);
    f.write(hjson.data(), static_cast<std::streamsize>(hjson.size()));
    f.write(reinterpret_cast<const char*>(vol.data.data()),
            static_cast<std::streamsize>(vol.data.size() * sizeof(float)));
    require(f.good(), ErrorCode::io, "write failed: " + path);
}

OctVolume load_volume(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), ErrorCode::missing_file, "cannot open: " + path);
    char magic[8];
    f.read(magic, 8);
    require(f.gcount() == 8 && std::memcmp(magic, "COROVOL1", 8) == 0,
            ErrorCode::bad_magic, "not a COROVOL1 file: " + path);
    char lenb[4];
    f.read(lenb, 4);
    require(f.gcount() == 4, ErrorCode::bad_header, "truncated header length");
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i)
        len |= static_cast<std::uint32_t>(static_cast<unsigned char>(lenb[i]))
               << (8 * i);
    std::string hjson(len, '\0');
    f.read(hjson.data(), len);
    require(f.gcount() == static_cast<std::streamsize>(len),
            ErrorCode::bad_header, "truncated header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hjson);
    } catch (const std::exception& e) {
        fail(ErrorCode::bad_header,
             std::string("volume header parse error: ") + e.what());
    }
    require(header.value("dtype", "") == "f32", ErrorCode::bad_header,
            "unsupported volume dtype");
    auto dims = header.at("dims").get<std::vector<int>>();
    require(dims.size() == 3 && dims[0] >= 1 && dims[1] >= 1 && dims[2] >= 1,
            ErrorCode::bad_header, "bad dims in volume header");

    OctVolume vol(dims[0], dims[1], dims[2]);
    if (header.contains("voxel_scale")) {
        auto vs = header["voxel_scale"].get<std::vector<double>>();
        require(vs.size() == 3, ErrorCode::bad_header, "bad voxel_scale");
        vol.voxel_scale = {vs[0], vs[1], vs[2]};
    }
    f.read(reinterpret_cast<char*>(vol.data.data()),
           static_cast<std::streamsize>(vol.data.size() * sizeof(float)));
    require(f.gcount() ==
                static_cast<std::streamsize>(vol.data.size() * sizeof(float)),
            ErrorCode::payload_mismatch,
            "volume payload shorter than header dims");
    f.peek();
    require(f.eof(), ErrorCode::payload_mismatch,
            "volume payload longer than header dims");
    for (float v : vol.data)
        require(std::isfinite(v), ErrorCode::non_finite,
                "volume payload contains non-finite values");
    vol.validate();
    return vol;
}

}  // namespace corolla
