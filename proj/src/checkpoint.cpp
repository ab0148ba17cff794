#include "corolla/num/checkpoint.hpp"

#include <fstream>

namespace corolla::num {

namespace {
constexpr char kMagic[8] = {'C', 'O', 'R', 'O', 'C', 'K', 'P', 'T'};

size_t dtype_size(const std::string& dtype) {
    if (dtype == "f32") return 4;
    if (dtype == "f64") return 8;
    fail(ErrorCode::bad_header, "checkpoint: unknown dtype " + dtype);
}
}  // namespace

bool Checkpoint::has(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return true;
    return false;
}

const Checkpoint::Entry& Checkpoint::find(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e;
    fail(ErrorCode::invalid_argument, "checkpoint: no tensor named " + name);
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
    nlohmann::ordered_json manifest;
    manifest["tensors"] = nlohmann::ordered_json::array();
    size_t offset = 0;
    for (const auto& e : entries_) {
        nlohmann::ordered_json t;
        t["name"] = e.name;
        t["shape"] = e.shape;
        t["dtype"] = e.dtype;
        t["offset"] = offset;
        manifest["tensors"].push_back(t);
        offset += e.bytes.size();
    }
    manifest["meta"] = meta;
    std::string mjson = manifest.dump();

    std::vector<std::uint8_t> out;
    out.reserve(8 + 4 + mjson.size() + offset);
    out.insert(out.end(), kMagic, kMagic + 8);
    std::uint32_t len = static_cast<std::uint32_t>(mjson.size());
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>((len >> (8 * i)) & 0xff));
    out.insert(out.end(), mjson.begin(), mjson.end());
    for (const auto& e : entries_)
        out.insert(out.end(), e.bytes.begin(), e.bytes.end());
    return out;
}

void Checkpoint::save(const std::string& path) const {
    auto bytes = serialize();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), ErrorCode::io, "cannot open for write: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    require(f.good(), ErrorCode::io, "write failed: " + path);
}

Checkpoint Checkpoint::deserialize(const std::vector<std::uint8_t>& bytes) {
    require(bytes.size() >= 12 && std::memcmp(bytes.data(), kMagic, 8) == 0,
            ErrorCode::bad_magic, "checkpoint: bad magic");
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i)
        len |= static_cast<std::uint32_t>(bytes[8 + i]) << (8 * i);
    require(12 + static_cast<size_t>(len) <= bytes.size(),
            ErrorCode::bad_header, "checkpoint: truncated manifest");
    nlohmann::ordered_json manifest;
    try {
        manifest = nlohmann::ordered_json::parse(
            bytes.begin() + 12, bytes.begin() + 12 + len);
    } catch (const std::exception& e) {
        fail(ErrorCode::bad_header,
             std::string("checkpoint: manifest parse error: ") + e.what());
    }
    size_t payload_start = 12 + len;

    Checkpoint ck;
    if (manifest.contains("meta")) ck.meta = manifest["meta"];
    for (const auto& t : manifest.at("tensors")) {
        Entry e;
        e.name = t.at("name").get<std::string>();
        e.shape = t.at("shape").get<std::vector<size_t>>();
        e.dtype = t.at("dtype").get<std::string>();
        size_t offset = t.at("offset").get<size_t>();
        size_t numel = 1;
        for (size_t d : e.shape) numel *= d;
        size_t nbytes = numel * dtype_size(e.dtype);
        require(payload_start + offset + nbytes <= bytes.size(),
                ErrorCode::payload_mismatch,
                "checkpoint: payload shorter than manifest claims");
        e.bytes.assign(bytes.begin() + payload_start + offset,
                       bytes.begin() + payload_start + offset + nbytes);
        ck.entries_.push_back(std::move(e));
    }
    return ck;
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), ErrorCode::missing_file, "cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace corolla::num
