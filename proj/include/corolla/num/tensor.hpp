#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "corolla/error.hpp"
#include "corolla/rng.hpp"

namespace corolla::num {

inline bool& debug_checks() {
    static bool enabled = false;
    return enabled;
}

// Dense row-major tensor. 64-bit scalars in tests, 32-bit in training.
template <class T>
struct Tensor {
    std::vector<size_t> shape;
    std::vector<T> data;

    Tensor() = default;

    explicit Tensor(std::vector<size_t> s, T fill = T(0))
        : shape(std::move(s)),
          data(std::accumulate(shape.begin(), shape.end(), size_t{1},
                               std::multiplies<size_t>()),
               fill) {}

    Tensor(std::vector<size_t> s, std::vector<T> values)
        : shape(std::move(s)), data(std::move(values)) {
        require(numel() == data.size(), ErrorCode::shape_mismatch,
                "tensor value count does not match shape");
    }

    static Tensor scalar(T v) { return Tensor({1}, std::vector<T>{v}); }

    size_t numel() const {
        return std::accumulate(shape.begin(), shape.end(), size_t{1},
                               std::multiplies<size_t>());
    }
    size_t rank() const { return shape.size(); }

    T& operator[](size_t i) { return data[i]; }
    T operator[](size_t i) const { return data[i]; }

    // 2-D / 3-D / 4-D indexing.
    T& at2(size_t i, size_t j) { return data[i * shape[1] + j]; }
    T at2(size_t i, size_t j) const { return data[i * shape[1] + j]; }
    T& at3(size_t i, size_t j, size_t k) {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    T at3(size_t i, size_t j, size_t k) const {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    T& at4(size_t i, size_t j, size_t k, size_t l) {
        return data[((i * shape[1] + j) * shape[2] + k) * shape[3] + l];
    }
    T at4(size_t i, size_t j, size_t k, size_t l) const {
        return data[((i * shape[1] + j) * shape[2] + k) * shape[3] + l];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    static std::string shape_str(const std::vector<size_t>& s) {
        std::string out = "[";
        for (size_t i = 0; i < s.size(); ++i)
            out += (i ? "x" : "") + std::to_string(s[i]);
        return out + "]";
    }
};

template <class T>
Tensor<T> random_uniform(std::vector<size_t> shape, T lo, T hi, Pcg32& rng) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

template <class T>
Tensor<T> random_gaussian(std::vector<size_t> shape, T mean, T sigma,
                          Pcg32& rng) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.data)
        v = static_cast<T>(mean + sigma * static_cast<T>(rng.gaussian()));
    return t;
}

template <class T>
void check_finite(const Tensor<T>& t, const char* where) {
    if (debug_checks() && !t.all_finite())
        fail(ErrorCode::numeric, std::string("non-finite values after ") + where);
}

}  // namespace corolla::num
