#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "corolla/image.hpp"
#include "corolla/surfaces.hpp"

namespace corolla {

struct VoxelScale {
    double axial_um = 3.9;    // per row
    double lateral_um = 11.7; // per column
    double slice_um = 46.9;   // between slices
};

// 3-D intensity grid, values in [0,1]. Slice-major, then row-major:
// index = (s * rows + z) * cols + x.
struct OctVolume {
    int slices = 0;  // S
    int rows = 0;    // H (axial)
    int cols = 0;    // W
    VoxelScale voxel_scale;
    std::vector<float> data;

    OctVolume() = default;
    OctVolume(int s, int h, int w, VoxelScale scale = {})
        : slices(s), rows(h), cols(w), voxel_scale(scale),
          data(static_cast<size_t>(s) * h * w, 0.0f) {}

    float& at(int s, int z, int x) {
        return data[(static_cast<size_t>(s) * rows + z) * cols + x];
    }
    float at(int s, int z, int x) const {
        return data[(static_cast<size_t>(s) * rows + z) * cols + x];
    }

    void validate() const;

    // Paper-scale default: 256 slices x 992 axial rows x 512 columns.
    static constexpr int kFullScaleSlices = 256;
    static constexpr int kFullScaleRows = 992;
    static constexpr int kFullScaleCols = 512;
};

using FundusImage = ImageRGB;

enum class Grade : int { none = 0, early = 1, mid_advanced = 2 };

struct GroundTruth {
    SurfaceSet surfaces;
    Grade grade = Grade::none;
};

// Layered-phantom description. K surfaces are sums of 1-3 seeded sinusoids
// plus a Gaussian bump on top of strictly increasing base depths; the layer
// `target_layer` (between surfaces target_layer and target_layer+1) is
// thinned by thinning^grade. Intensities are per-region constants plus
// clamped Gaussian noise.
struct PhantomSpec {
    int slices = 16;
    int rows = 128;
    int cols = 64;
    VoxelScale voxel_scale;
    std::vector<double> base_depths = {30.0, 50.0, 74.0, 98.0};
    double undulation_amplitude = 1.5;  // rows, total across sinusoids
    double undulation_frequency = 1.5;  // max cycles across the width
    double bump_amplitude = 1.0;        // rows
    double bump_sigma_frac = 0.15;      // of width/slice count
    // Same-polarity boundary contrasts shrink with depth so sequential
    // top-to-bottom extraction locks onto the correct boundary.
    std::vector<double> layer_intensities = {0.05, 0.60, 0.25, 0.45, 0.15};
    double noise_sigma = 0.0;
    double thinning = 0.7;
    int target_layer = 1;
    int fundus_size = 64;
    double vessel_intensity = 1.0;  // 0 disables vessels

    int num_surfaces() const { return static_cast<int>(base_depths.size()); }
    void validate() const;
};

struct SynthCase {
    OctVolume volume;
    FundusImage fundus;
    GroundTruth truth;
};

// Analytic surface model for a given (spec, grade, seed); rounding its values
// on the grid yields the ground-truth SurfaceSet.
class PhantomSurfaces {
  public:
    PhantomSurfaces(const PhantomSpec& spec, Grade grade, std::uint64_t seed);
    double row(int surface, int slice, int col) const;
    int rounded(int surface, int slice, int col) const;

  private:
    struct Sinusoid {
        double amplitude, freq, phase, slice_drift;
    };
    struct Bump {
        double amplitude, col0, slice0, sigma_col, sigma_slice;
    };
    struct PerSurface {
        double depth;
        std::vector<Sinusoid> waves;
        Bump bump;
    };
    int slices_, cols_;
    std::vector<PerSurface> surfaces_;
};

SynthCase synth_case(const PhantomSpec& spec, Grade grade, std::uint64_t seed);

// `COROVOL1` container: magic, u32-LE-length-prefixed JSON header
// {dims:[S,H,W], voxel_scale:[a,l,s], dtype:"f32"}, then float32 LE payload.
void save_volume(const OctVolume& vol, const std::string& path);
OctVolume load_volume(const std::string& path);

}  // namespace corolla
