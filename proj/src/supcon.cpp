#include "corolla/supcon.hpp"

#include <algorithm>
#include <cmath>

namespace corolla::supcon {

ImageRGB resize_image(const ImageRGB& img, int out_h, int out_w) {
    require(img.h >= 2 && img.w >= 2, ErrorCode::invalid_argument,
            "resize_image: input must be at least 2x2");
    require(out_h >= 1 && out_w >= 1, ErrorCode::invalid_argument,
            "resize_image: output dims must be >= 1");
    if (out_h == img.h && out_w == img.w) return img;
    ImageRGB out(out_h, out_w);
    double sy = out_h > 1 ? static_cast<double>(img.h - 1) / (out_h - 1) : 0.0;
    double sx = out_w > 1 ? static_cast<double>(img.w - 1) / (out_w - 1) : 0.0;
    for (int y = 0; y < out_h; ++y) {
        double fy = y * sy;
        int y0 = std::min(static_cast<int>(fy), img.h - 2);
        double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = x * sx;
            int x0 = std::min(static_cast<int>(fx), img.w - 2);
            double wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                double top = (1.0 - wx) * img.at(y0, x0, c) +
                             wx * img.at(y0, x0 + 1, c);
                double bot = (1.0 - wx) * img.at(y0 + 1, x0, c) +
                             wx * img.at(y0 + 1, x0 + 1, c);
                out.at(y, x, c) = static_cast<float>((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

ImageRGB augment(const ImageRGB& img, const AugmentationSpec& spec, Pcg32& rng) {
    spec.validate();
    ImageRGB out = img;

    if (spec.branch == Branch::fundus) {
        // Per-channel intensity scale in [1-s, 1+s].
        double scales[3];
        for (int c = 0; c < 3; ++c)
            scales[c] = rng.uniform(1.0 - spec.jitter_strength,
                                    1.0 + spec.jitter_strength);
        if (spec.jitter_strength > 0.0) {
            for (int y = 0; y < out.h; ++y)
                for (int x = 0; x < out.w; ++x)
                    for (int c = 0; c < 3; ++c)
                        out.at(y, x, c) = static_cast<float>(std::clamp(
                            out.at(y, x, c) * scales[c], 0.0, 1.0));
        }
        if (rng.next_double() < spec.grayscale_prob) {
            for (int y = 0; y < out.h; ++y)
                for (int x = 0; x < out.w; ++x) {
                    float lum = static_cast<float>(0.299 * out.at(y, x, 0) +
                                                   0.587 * out.at(y, x, 1) +
                                                   0.114 * out.at(y, x, 2));
                    out.at(y, x, 0) = lum;
                    out.at(y, x, 1) = lum;
                    out.at(y, x, 2) = lum;
                }
        }
    }

    double scale = rng.uniform(spec.crop_scale_lo, spec.crop_scale_hi);
    int ch = std::clamp(static_cast<int>(std::lround(scale * out.h)), 2, out.h);
    int cw = std::clamp(static_cast<int>(std::lround(scale * out.w)), 2, out.w);
    if (ch != out.h || cw != out.w) {
        int y0 = (out.h - ch) / 2;
        int x0 = (out.w - cw) / 2;
        ImageRGB crop(ch, cw);
        for (int y = 0; y < ch; ++y)
            for (int x = 0; x < cw; ++x)
                for (int c = 0; c < 3; ++c)
                    crop.at(y, x, c) = out.at(y0 + y, x0 + x, c);
        out = resize_image(crop, img.h, img.w);
    }

    if (rng.next_double() < spec.flip_prob) {
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w / 2; ++x)
                for (int c = 0; c < 3; ++c)
                    std::swap(out.at(y, x, c), out.at(y, out.w - 1 - x, c));
    }
    return out;
}

}  // namespace corolla::supcon
