#pragma once

#include <string>
#include <vector>

#include "corolla/error.hpp"

namespace corolla {

// K non-intersecting layer boundaries: one integer row per
// (surface, slice, column). `delta` is the max row change between adjacent
// columns in the frame the surfaces were extracted in; `gap` the minimum
// separation between consecutive surfaces.
struct SurfaceSet {
    int num_surfaces = 0;  // K
    int slices = 0;        // S
    int cols = 0;          // W
    int delta = 0;
    int gap = 1;
    std::vector<int> rows;  // K * S * W, surface-major

    SurfaceSet() = default;
    SurfaceSet(int k, int s, int w, int delta_, int gap_)
        : num_surfaces(k),
          slices(s),
          cols(w),
          delta(delta_),
          gap(gap_),
          rows(static_cast<size_t>(k) * s * w, 0) {}

    int& at(int k, int s, int x) {
        return rows[(static_cast<size_t>(k) * slices + s) * cols + x];
    }
    int at(int k, int s, int x) const {
        return rows[(static_cast<size_t>(k) * slices + s) * cols + x];
    }

    // Ordering/gap and row-range checks; column smoothness is checked against
    // `delta` only when check_smoothness is set (it is defined in the
    // extraction frame and does not survive unflattening in general).
    void validate(int height, bool check_smoothness = false) const;
};

// CSV export, one file per surface with rows `slice,column,row`, plus a JSON
// sidecar describing the constraint configuration.
void save_surfaces_csv(const SurfaceSet& s, const std::string& base_path);
SurfaceSet load_surfaces_csv(const std::string& base_path);

}  // namespace corolla
