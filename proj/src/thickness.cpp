#include "corolla/thickness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "corolla/turbo_lut.hpp"

namespace corolla {

ThicknessGrid layer_thickness(const SurfaceSet& surfaces, int i, int j,
                              bool micrometers, const VoxelScale& scale) {
    require(i >= 0 && j < surfaces.num_surfaces, ErrorCode::invalid_argument,
            "layer_thickness: surface id out of range");
    require(i < j, ErrorCode::invalid_argument,
            "layer_thickness: need i < j");
    ThicknessGrid out;
    out.surface_i = i;
    out.surface_j = j;
    out.micrometers = micrometers;
    out.values = Grid2(surfaces.slices, surfaces.cols);
    double unit = micrometers ? scale.axial_um : 1.0;
    for (int s = 0; s < surfaces.slices; ++s)
        for (int x = 0; x < surfaces.cols; ++x)
            out.values.at(s, x) =
                unit * (surfaces.at(j, s, x) - surfaces.at(i, s, x));
    return out;
}

Grid2 resize_bilinear(const Grid2& grid, int out_h, int out_w) {
    require(grid.h >= 2 && grid.w >= 2, ErrorCode::invalid_argument,
            "resize_bilinear: input must be at least 2x2");
    require(out_h >= 1 && out_w >= 1, ErrorCode::invalid_argument,
            "resize_bilinear: output dims must be >= 1");
    if (out_h == grid.h && out_w == grid.w) return grid;

    Grid2 out(out_h, out_w);
    double sy = out_h > 1 ? static_cast<double>(grid.h - 1) / (out_h - 1) : 0.0;
    double sx = out_w > 1 ? static_cast<double>(grid.w - 1) / (out_w - 1) : 0.0;
    for (int y = 0; y < out_h; ++y) {
        double fy = y * sy;
        int y0 = std::min(static_cast<int>(fy), grid.h - 2);
        double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = x * sx;
            int x0 = std::min(static_cast<int>(fx), grid.w - 2);
            double wx = fx - x0;
            double top = (1.0 - wx) * grid.at(y0, x0) + wx * grid.at(y0, x0 + 1);
            double bot =
                (1.0 - wx) * grid.at(y0 + 1, x0) + wx * grid.at(y0 + 1, x0 + 1);
            out.at(y, x) = (1.0 - wy) * top + wy * bot;
        }
    }
    return out;
}

ImageU8 turbo_map(const Grid2& grid, double t_lo, double t_hi) {
    require(t_lo < t_hi, ErrorCode::invalid_argument,
            "turbo_map: need t_lo < t_hi");
    ImageU8 out(grid.h, grid.w);
    for (int y = 0; y < grid.h; ++y)
        for (int x = 0; x < grid.w; ++x) {
            double t = std::clamp(grid.at(y, x), t_lo, t_hi);
            double u = (t - t_lo) / (t_hi - t_lo);
            double pos = u * 255.0;
            // Snap to LUT knots so exact k/255 inputs hit entry k.
            double r = std::round(pos);
            if (std::abs(pos - r) < 1e-9) pos = r;
            int idx = std::min(static_cast<int>(pos), 254);
            double frac = pos - idx;
            for (int c = 0; c < 3; ++c) {
                double v = (1.0 - frac) * kTurboLut[idx][c] +
                           frac * kTurboLut[idx + 1][c];
                out.at(y, x, c) = quantize8(v);
            }
        }
    return out;
}

Grid2 enface_projection(const OctVolume& vol, const SurfaceSet& surfaces,
                        const std::vector<int>& layer_ids) {
    require(surfaces.slices == vol.slices && surfaces.cols == vol.cols,
            ErrorCode::invalid_argument,
            "enface_projection: surfaces do not match volume dims");
    require(!layer_ids.empty(), ErrorCode::invalid_argument,
            "enface_projection: no layers named");
    for (int id : layer_ids)
        require(id >= 0 && id + 1 < surfaces.num_surfaces,
                ErrorCode::invalid_argument,
                "enface_projection: layer id out of range");

    Grid2 out(vol.slices, vol.cols);
    long empty_spans = 0;
    for (int s = 0; s < vol.slices; ++s)
        for (int x = 0; x < vol.cols; ++x) {
            double acc = 0.0;
            int count = 0;
            for (int id : layer_ids) {
                int z0 = surfaces.at(id, s, x);
                int z1 = surfaces.at(id + 1, s, x);
                for (int z = z0; z < z1; ++z) {
                    acc += vol.at(s, z, x);
                    ++count;
                }
            }
            if (count == 0) {
                ++empty_spans;
                out.at(s, x) = 0.0;
            } else {
                out.at(s, x) = acc / count;
            }
        }
    if (empty_spans > 0)
        std::fprintf(stderr,
                     "warning: enface_projection hit %ld zero-thickness spans\n",
                     empty_spans);
    return out;
}

ImageU8 overlay(const ImageU8& rgb, const Grid2& gray, double alpha) {
    require(rgb.h == gray.h && rgb.w == gray.w, ErrorCode::invalid_argument,
            "overlay: dimension mismatch");
    require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::invalid_argument,
            "overlay: alpha must lie in [0,1]");
    ImageU8 out(rgb.h, rgb.w);
    for (int y = 0; y < rgb.h; ++y)
        for (int x = 0; x < rgb.w; ++x) {
            double g = quantize8(std::clamp(gray.at(y, x), 0.0, 1.0));
            for (int c = 0; c < 3; ++c) {
                double v = (1.0 - alpha) * rgb.at(y, x, c) + alpha * g;
                int q = static_cast<int>(std::floor(v + 0.5));
                out.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(q, 0, 255));
            }
        }
    return out;
}

ThicknessMapResult generate_thickness_map(const OctVolume& vol,
                                          const ThicknessMapConfig& cfg) {
    require(cfg.out_size >= 1, ErrorCode::invalid_argument,
            "generate_thickness_map: out_size must be >= 1");
    ThicknessMapResult res;
    res.t_lo = cfg.t_lo;
    res.t_hi = cfg.t_hi;
    try {
        res.surfaces = segment_layers(vol, cfg.segmentation);
    } catch (const Error& e) {
        fail(e.code(), std::string("thickness map (segmentation stage): ") +
                           e.what());
    }
    try {
        ThicknessGrid thick =
            layer_thickness(res.surfaces, cfg.surface_i, cfg.surface_j);
        Grid2 resized = resize_bilinear(thick.values, cfg.out_size, cfg.out_size);
        ImageU8 color = turbo_map(resized, cfg.t_lo, cfg.t_hi);
        Grid2 projection = enface_projection(vol, res.surfaces,
                                             cfg.projection_layers);
        Grid2 proj_resized =
            resize_bilinear(projection, cfg.out_size, cfg.out_size);
        res.rgb = overlay(color, proj_resized, cfg.alpha);
    } catch (const Error& e) {
        fail(e.code(),
             std::string("thickness map (rendering stage): ") + e.what());
    }
    return res;
}

}  // namespace corolla
