#pragma once

#include <bit>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "corolla/num/tensor.hpp"

namespace corolla::num {

static_assert(std::endian::native == std::endian::little,
              "little-endian host required by the file formats");

// Named-tensor container: `COROCKPT` magic, length-prefixed JSON manifest
// (name, shape, dtype, byte offset), then the raw little-endian payload.
// Round-trips bit-exactly.
class Checkpoint {
  public:
    struct Entry {
        std::string name;
        std::vector<size_t> shape;
        std::string dtype;  // "f32" | "f64"
        std::vector<std::uint8_t> bytes;
    };

    nlohmann::ordered_json meta = nlohmann::ordered_json::object();

    template <class T>
    void add(const std::string& name, const Tensor<T>& t) {
        Entry e;
        e.name = name;
        e.shape = t.shape;
        e.dtype = sizeof(T) == 4 ? "f32" : "f64";
        e.bytes.resize(t.data.size() * sizeof(T));
        std::memcpy(e.bytes.data(), t.data.data(), e.bytes.size());
        entries_.push_back(std::move(e));
    }

    template <class T>
    Tensor<T> get(const std::string& name) const {
        const Entry& e = find(name);
        const char* want = sizeof(T) == 4 ? "f32" : "f64";
        require(e.dtype == want, ErrorCode::bad_header,
                "checkpoint tensor '" + name + "' has dtype " + e.dtype);
        Tensor<T> t(e.shape);
        require(t.numel() * sizeof(T) == e.bytes.size(),
                ErrorCode::payload_mismatch,
                "checkpoint tensor '" + name + "' payload size mismatch");
        std::memcpy(t.data.data(), e.bytes.data(), e.bytes.size());
        return t;
    }

    bool has(const std::string& name) const;
    const Entry& find(const std::string& name) const;
    const std::vector<Entry>& entries() const { return entries_; }

    std::vector<std::uint8_t> serialize() const;
    void save(const std::string& path) const;
    static Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);
    static Checkpoint load(const std::string& path);

  private:
    std::vector<Entry> entries_;
};

}  // namespace corolla::num
