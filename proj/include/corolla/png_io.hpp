#pragma once

#include <string>
#include <vector>

#include "corolla/image.hpp"

namespace corolla {

// PNG writer emitting stored (uncompressed) deflate blocks, so output bytes
// depend only on the pixel data, never on the zlib version. Readers are
// standard PNG consumers.
std::vector<std::uint8_t> encode_png_rgb8(const ImageU8& img);
void write_png_rgb8(const ImageU8& img, const std::string& path);

// Reader backed by zlib inflate; accepts 8-bit gray / RGB / RGBA,
// non-interlaced, all five scanline filters. Values scaled to [0,1];
// grayscale is replicated to three channels, alpha is dropped.
ImageRGB read_png(const std::string& path);
ImageRGB decode_png(const std::vector<std::uint8_t>& bytes);

inline ImageU8 to_u8(const ImageRGB& img) {
    ImageU8 out(img.h, img.w);
    for (size_t i = 0; i < img.px.size(); ++i)
        out.px[i] = quantize8(img.px[i]);
    return out;
}

inline ImageRGB to_float(const ImageU8& img) {
    ImageRGB out(img.h, img.w);
    for (size_t i = 0; i < img.px.size(); ++i)
        out.px[i] = static_cast<float>(img.px[i] / 255.0);
    return out;
}

}  // namespace corolla
