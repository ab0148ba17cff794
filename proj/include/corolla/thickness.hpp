#pragma once

#include <vector>

#include "corolla/image.hpp"
#include "corolla/segmentation.hpp"
#include "corolla/surfaces.hpp"
#include "corolla/volume.hpp"

namespace corolla {

// Axial distance between two surfaces, per (slice, column).
struct ThicknessGrid {
    Grid2 values;  // S x W
    int surface_i = 0;
    int surface_j = 1;
    bool micrometers = false;
};

struct ThicknessMapConfig {
    int surface_i = 1;  // thickness measured between these surfaces
    int surface_j = 2;
    std::vector<int> projection_layers = {0, 1};  // layers averaged en face
    double t_lo = 0.0;    // normalization range, voxels
    double t_hi = 150.0;
    double alpha = 0.35;  // overlay blend weight
    int out_size = 512;
    SegmentationConfig segmentation;
};

struct ThicknessMapResult {
    ImageU8 rgb;
    double t_lo = 0.0;
    double t_hi = 0.0;
    SurfaceSet surfaces;
};

ThicknessGrid layer_thickness(const SurfaceSet& surfaces, int i, int j,
                              bool micrometers = false,
                              const VoxelScale& scale = {});

// Corner-aligned bilinear resampling; identity when dims are unchanged.
Grid2 resize_bilinear(const Grid2& grid, int out_h, int out_w);

// Clamp to [t_lo, t_hi], normalize, interpolate through the 256-entry turbo
// LUT, quantize round-half-up.
ImageU8 turbo_map(const Grid2& grid, double t_lo, double t_hi);

// Mean intensity between the bounding surfaces of the named layers
// (layer j spans surfaces j..j+1). Empty spans yield 0.
Grid2 enface_projection(const OctVolume& vol, const SurfaceSet& surfaces,
                        const std::vector<int>& layer_ids);

// (1-alpha)*rgb + alpha*gray (gray in [0,1], broadcast to three channels),
// quantized round-half-up.
ImageU8 overlay(const ImageU8& rgb, const Grid2& gray, double alpha);

ThicknessMapResult generate_thickness_map(const OctVolume& vol,
                                          const ThicknessMapConfig& cfg);

}  // namespace corolla
