#pragma once

#include <vector>

#include "corolla/image.hpp"
#include "corolla/surfaces.hpp"
#include "corolla/volume.hpp"

namespace corolla {

enum class Polarity { dark_to_bright, bright_to_dark };

// Per-slice cost grid [H x W]; minima mark candidate boundary rows.
struct CostField {
    Grid2 cost;
    Polarity polarity = Polarity::dark_to_bright;
};

// Per-A-scan vertical shifts applied by flatten(); rows move by +shift.
struct FlattenRecord {
    int slices = 0;
    int cols = 0;
    int target_row = 0;
    std::vector<int> shifts;  // S * W

    int& shift(int s, int x) { return shifts[static_cast<size_t>(s) * cols + x]; }
    int shift(int s, int x) const {
        return shifts[static_cast<size_t>(s) * cols + x];
    }
};

struct SegmentationConfig {
    int num_surfaces = 4;
    std::vector<Polarity> polarities = {
        Polarity::dark_to_bright, Polarity::bright_to_dark,
        Polarity::dark_to_bright, Polarity::bright_to_dark};
    int delta = 2;  // max |row change| between adjacent columns
    int gap = 2;    // min separation between consecutive surfaces
    double boundary_sentinel = 1e6;
};

// Row of maximum vertical-gradient magnitude per (slice, column),
// median-filtered with window 5 along columns. Values lie in [1, H-2].
std::vector<int> estimate_reference_surface(const OctVolume& vol);

// Cyclically shifts every A-scan so the reference surface lands on the
// median reference row. Exactly invertible.
std::pair<OctVolume, FlattenRecord> flatten(const OctVolume& vol,
                                            const std::vector<int>& ref);
OctVolume unflatten(const OctVolume& flat, const FlattenRecord& rec);

// Signed central difference of intensity; boundary rows get the sentinel.
CostField surface_cost(const OctVolume& vol, int slice, Polarity polarity,
                       double sentinel = 1e6);

// Minimum-cost row per column subject to |row(x+1) - row(x)| <= delta and
// row(x) >= lower_bound(x). Ties resolve toward smaller rows, compared from
// the last column backward (the backtracking order).
std::vector<int> extract_surface_dp(const CostField& cost, int delta,
                                    const std::vector<int>& lower_bound);

// Exhaustive oracle with the identical tie rule; guarded to small instances.
std::vector<int> brute_force_surface(const CostField& cost, int delta,
                                     const std::vector<int>& lower_bound);

double path_cost(const CostField& cost, const std::vector<int>& rows);

// Full pipeline: flatten, extract K surfaces top-to-bottom per slice with
// min gap, unflatten. The smoothness window is shifted per column by the
// flatten-shift deltas so `delta` holds exactly in original coordinates.
SurfaceSet segment_layers(const OctVolume& vol, const SegmentationConfig& cfg);

}  // namespace corolla
