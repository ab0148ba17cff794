#pragma once

#include <cstdint>
#include <vector>

#include "corolla/error.hpp"

namespace corolla {

// Interleaved RGB, float values in [0,1]. Row-major, origin top-left.
struct ImageRGB {
    int h = 0;
    int w = 0;
    std::vector<float> px;  // 3 * h * w

    ImageRGB() = default;
    ImageRGB(int h_, int w_, float fill = 0.0f)
        : h(h_), w(w_), px(static_cast<size_t>(h_) * w_ * 3, fill) {
        require(h_ >= 1 && w_ >= 1, ErrorCode::invalid_argument,
                "ImageRGB dims must be positive");
    }

    float& at(int y, int x, int c) {
        return px[(static_cast<size_t>(y) * w + x) * 3 + c];
    }
    float at(int y, int x, int c) const {
        return px[(static_cast<size_t>(y) * w + x) * 3 + c];
    }
};

// Interleaved 8-bit RGB.
struct ImageU8 {
    int h = 0;
    int w = 0;
    std::vector<std::uint8_t> px;  // 3 * h * w

    ImageU8() = default;
    ImageU8(int h_, int w_, std::uint8_t fill = 0)
        : h(h_), w(w_), px(static_cast<size_t>(h_) * w_ * 3, fill) {
        require(h_ >= 1 && w_ >= 1, ErrorCode::invalid_argument,
                "ImageU8 dims must be positive");
    }

    std::uint8_t& at(int y, int x, int c) {
        return px[(static_cast<size_t>(y) * w + x) * 3 + c];
    }
    std::uint8_t at(int y, int x, int c) const {
        return px[(static_cast<size_t>(y) * w + x) * 3 + c];
    }
};

// Dense double grid, row-major.
struct Grid2 {
    int h = 0;
    int w = 0;
    std::vector<double> v;

    Grid2() = default;
    Grid2(int h_, int w_, double fill = 0.0)
        : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {
        require(h_ >= 1 && w_ >= 1, ErrorCode::invalid_argument,
                "Grid2 dims must be positive");
    }

    double& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
};

// 8-bit quantization, round half up.
inline std::uint8_t quantize8(double x) {
    if (x <= 0.0) return 0;
    if (x >= 1.0) return 255;
    double scaled = x * 255.0 + 0.5;
    int q = static_cast<int>(scaled);
    if (q > 255) q = 255;
    return static_cast<std::uint8_t>(q);
}

}  // namespace corolla
