#include "corolla/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace corolla {

namespace {

int wrap_row(long z, int h) {
    long m = z % h;
    if (m < 0) m += h;
    return static_cast<int>(m);
}

// Lower median; deterministic for even window sizes at the borders.
int median_of(std::vector<int>& vals) {
    std::sort(vals.begin(), vals.end());
    return vals[(vals.size() - 1) / 2];
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// Forward DP with backtracking. `offsets` shifts the transition window
// between columns x and x+1: row(x+1) - row(x) must lie within
// [offsets[x] - delta, offsets[x] + delta].
std::vector<int> dp_with_offsets(const CostField& field, int delta,
                                 const std::vector<int>& lower_bound,
                                 const std::vector<int>* offsets) {
    const Grid2& c = field.cost;
    int h = c.h, w = c.w;
    require(delta >= 0, ErrorCode::invalid_argument, "delta must be >= 0");
    require(static_cast<int>(lower_bound.size()) == w,
            ErrorCode::invalid_argument, "lower_bound length != columns");
    for (int x = 0; x < w; ++x)
        require(lower_bound[x] >= 0 && lower_bound[x] < h,
                ErrorCode::invalid_argument,
                "lower_bound out of [0,H) at column " + std::to_string(x));

    std::vector<double> dp(static_cast<size_t>(w) * h, kInf);
    std::vector<int> parent(static_cast<size_t>(w) * h, -1);
    for (int z = lower_bound[0]; z < h; ++z) dp[z] = c.at(z, 0);

    for (int x = 1; x < w; ++x) {
        int off = offsets ? (*offsets)[x - 1] : 0;
        bool any = false;
        for (int z = lower_bound[x]; z < h; ++z) {
            // predecessors z' with z - z' in [off - delta, off + delta]
            int lo = std::max(z - off - delta, lower_bound[x - 1]);
            int hi = std::min(z - off + delta, h - 1);
            double best = kInf;
            int best_row = -1;
            for (int zp = lo; zp <= hi; ++zp) {
                double v = dp[static_cast<size_t>(x - 1) * h + zp];
                if (v < best) {
                    best = v;
                    best_row = zp;
                }
            }
            if (best_row < 0) continue;
            dp[static_cast<size_t>(x) * h + z] = best + c.at(z, x);
            parent[static_cast<size_t>(x) * h + z] = best_row;
            any = true;
        }
        if (!any)
            fail(ErrorCode::infeasible,
                 "no feasible surface path at column " + std::to_string(x));
    }

    double best = kInf;
    int best_row = -1;
    for (int z = lower_bound[w - 1]; z < h; ++z) {
        double v = dp[static_cast<size_t>(w - 1) * h + z];
        if (v < best) {
            best = v;
            best_row = z;
        }
    }
    if (best_row < 0)
        fail(ErrorCode::infeasible, "no feasible surface path");

    std::vector<int> rows(w);
    rows[w - 1] = best_row;
    for (int x = w - 1; x > 0; --x)
        rows[x - 1] = parent[static_cast<size_t>(x) * h + rows[x]];
    return rows;
}

}  // namespace

std::vector<int> estimate_reference_surface(const OctVolume& vol) {
    require(vol.rows >= 4, ErrorCode::validation,
            "estimate_reference_surface: H must be >= 4");
    int S = vol.slices, H = vol.rows, W = vol.cols;
    std::vector<int> raw(static_cast<size_t>(S) * W);
    for (int s = 0; s < S; ++s)
        for (int x = 0; x < W; ++x) {
            double best = -1.0;
            int best_row = 1;
            for (int z = 1; z <= H - 2; ++z) {
                double g = std::abs((vol.at(s, z + 1, x) - vol.at(s, z - 1, x)) / 2.0);
                if (g > best) {
                    best = g;
                    best_row = z;
                }
            }
            raw[static_cast<size_t>(s) * W + x] = best_row;
        }

    std::vector<int> ref(raw.size());
    std::vector<int> window;
    for (int s = 0; s < S; ++s)
        for (int x = 0; x < W; ++x) {
            window.clear();
            for (int dx = -2; dx <= 2; ++dx) {
                int xx = x + dx;
                if (xx >= 0 && xx < W)
                    window.push_back(raw[static_cast<size_t>(s) * W + xx]);
            }
            ref[static_cast<size_t>(s) * W + x] = median_of(window);
        }
    return ref;
}

std::pair<OctVolume, FlattenRecord> flatten(const OctVolume& vol,
                                            const std::vector<int>& ref) {
    int S = vol.slices, H = vol.rows, W = vol.cols;
    require(ref.size() == static_cast<size_t>(S) * W,
            ErrorCode::invalid_argument, "flatten: reference grid size mismatch");
    for (int r : ref)
        require(r >= 0 && r < H, ErrorCode::invalid_argument,
                "flatten: reference row out of [0,H)");

    std::vector<int> sorted(ref);
    int target = median_of(sorted);

    FlattenRecord rec;
    rec.slices = S;
    rec.cols = W;
    rec.target_row = target;
    rec.shifts.resize(ref.size());
    for (size_t i = 0; i < ref.size(); ++i)
        rec.shifts[i] = target - ref[i];

    OctVolume flat(S, H, W, vol.voxel_scale);
    for (int s = 0; s < S; ++s)
        for (int z = 0; z < H; ++z)
            for (int x = 0; x < W; ++x)
                flat.at(s, z, x) = vol.at(s, wrap_row(z - rec.shift(s, x), H), x);
    return {std::move(flat), std::move(rec)};
}

OctVolume unflatten(const OctVolume& flat, const FlattenRecord& rec) {
    int S = flat.slices, H = flat.rows, W = flat.cols;
    require(rec.slices == S && rec.cols == W, ErrorCode::invalid_argument,
            "unflatten: record does not match volume dims");
    OctVolume vol(S, H, W, flat.voxel_scale);
    for (int s = 0; s < S; ++s)
        for (int z = 0; z < H; ++z)
            for (int x = 0; x < W; ++x)
                vol.at(s, z, x) = flat.at(s, wrap_row(z + rec.shift(s, x), H), x);
    return vol;
}

CostField surface_cost(const OctVolume& vol, int slice, Polarity polarity,
                       double sentinel) {
    require(vol.rows >= 3, ErrorCode::validation, "surface_cost: H must be >= 3");
    require(slice >= 0 && slice < vol.slices, ErrorCode::invalid_argument,
            "surface_cost: slice out of range");
    int H = vol.rows, W = vol.cols;
    double sign = polarity == Polarity::dark_to_bright ? 1.0 : -1.0;
    CostField field;
    field.polarity = polarity;
    field.cost = Grid2(H, W);
    for (int x = 0; x < W; ++x) {
        field.cost.at(0, x) = sentinel;
        field.cost.at(H - 1, x) = sentinel;
    }
    for (int z = 1; z <= H - 2; ++z)
        for (int x = 0; x < W; ++x)
            field.cost.at(z, x) =
                -sign *
                (static_cast<double>(vol.at(slice, z + 1, x)) -
                 static_cast<double>(vol.at(slice, z - 1, x))) /
                2.0;
    return field;
}

std::vector<int> extract_surface_dp(const CostField& cost, int delta,
                                    const std::vector<int>& lower_bound) {
    return dp_with_offsets(cost, delta, lower_bound, nullptr);
}

double path_cost(const CostField& cost, const std::vector<int>& rows) {
    double total = 0.0;
    for (int x = 0; x < cost.cost.w; ++x) total += cost.cost.at(rows[x], x);
    return total;
}

std::vector<int> brute_force_surface(const CostField& cost, int delta,
                                     const std::vector<int>& lower_bound) {
    const Grid2& c = cost.cost;
    int h = c.h, w = c.w;
    require(delta >= 0, ErrorCode::invalid_argument, "delta must be >= 0");
    require(static_cast<int>(lower_bound.size()) == w,
            ErrorCode::invalid_argument, "lower_bound length != columns");
    for (int x = 0; x < w; ++x)
        require(lower_bound[x] >= 0 && lower_bound[x] < h,
                ErrorCode::invalid_argument,
                "lower_bound out of [0,H) at column " + std::to_string(x));
    double bound = static_cast<double>(h) *
                   std::pow(2.0 * delta + 1.0, std::max(0, w - 1));
    require(bound <= 1e7, ErrorCode::guard,
            "brute_force_surface: instance too large to enumerate");

    std::vector<int> path(w), best_path;
    double best_cost = kInf;
    bool found = false;

    // Depth-first enumeration in lexicographic order of (row_0, row_1, ...).
    // Reverse-lexicographic comparison applies on cost ties, matching the
    // DP backtracking rule.
    auto better = [&](const std::vector<int>& a, const std::vector<int>& b) {
        for (int x = w - 1; x >= 0; --x) {
            if (a[x] != b[x]) return a[x] < b[x];
        }
        return false;
    };

    std::vector<int> zstack(w, -1);
    int x = 0;
    double running = 0.0;
    std::vector<double> prefix(w + 1, 0.0);
    while (x >= 0) {
        int start;
        if (zstack[x] < 0) {
            start = x == 0 ? lower_bound[0]
                           : std::max(path[x - 1] - delta, lower_bound[x]);
        } else {
            start = zstack[x] + 1;
        }
        int stop = x == 0 ? h - 1 : std::min(path[x - 1] + delta, h - 1);
        if (start > stop) {
            zstack[x] = -1;
            --x;
            continue;
        }
        zstack[x] = start;
        path[x] = start;
        running = prefix[x] + c.at(start, x);
        if (x == w - 1) {
            if (!found || running < best_cost ||
                (running == best_cost && better(path, best_path))) {
                best_cost = running;
                best_path = path;
                found = true;
            }
            // stay on this column: advance start row next iteration
        } else {
            prefix[x + 1] = running;
            ++x;
        }
    }
    if (!found) fail(ErrorCode::infeasible, "no feasible surface path");
    return best_path;
}

SurfaceSet segment_layers(const OctVolume& vol, const SegmentationConfig& cfg) {
    require(cfg.num_surfaces >= 1, ErrorCode::invalid_argument,
            "segment_layers: K must be >= 1");
    require(static_cast<int>(cfg.polarities.size()) == cfg.num_surfaces,
            ErrorCode::invalid_argument,
            "segment_layers: polarities length must equal K");
    require(cfg.gap >= 1, ErrorCode::invalid_argument,
            "segment_layers: gap must be >= 1");

    int S = vol.slices, H = vol.rows, W = vol.cols;
    auto ref = estimate_reference_surface(vol);
    auto [flat, rec] = flatten(vol, ref);

    SurfaceSet out(cfg.num_surfaces, S, W, cfg.delta, cfg.gap);
    std::vector<int> offsets(std::max(0, W - 1));
    std::vector<int> lower(W), prev_flat(W);

    for (int s = 0; s < S; ++s) {
        // Window offsets make `delta` hold in original coordinates:
        // orig = flat - shift, so the transition gains shift(x+1)-shift(x).
        for (int x = 0; x + 1 < W; ++x)
            offsets[x] = rec.shift(s, x + 1) - rec.shift(s, x);
        for (int k = 0; k < cfg.num_surfaces; ++k) {
            CostField cost =
                surface_cost(flat, s, cfg.polarities[k], cfg.boundary_sentinel);
            for (int x = 0; x < W; ++x)
                lower[x] = k == 0 ? 0 : prev_flat[x] + cfg.gap;
            for (int x = 0; x < W; ++x)
                if (lower[x] >= H)
                    fail(ErrorCode::infeasible,
                         "segment_layers: no room left for surface " +
                             std::to_string(k) + " in slice " + std::to_string(s));
            std::vector<int> flat_rows;
            try {
                flat_rows = dp_with_offsets(cost, cfg.delta, lower, &offsets);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::infeasible) throw;
                fail(ErrorCode::infeasible,
                     "segment_layers: surface " + std::to_string(k) +
                         " infeasible in slice " + std::to_string(s) + ": " +
                         e.what());
            }
            for (int x = 0; x < W; ++x) {
                int orig = flat_rows[x] - rec.shift(s, x);
                if (orig < 0 || orig >= H)
                    fail(ErrorCode::infeasible,
                         "segment_layers: surface " + std::to_string(k) +
                             " leaves the volume after unflattening in slice " +
                             std::to_string(s));
                out.at(k, s, x) = orig;
            }
            prev_flat = flat_rows;
        }
    }
    out.validate(H, /*check_smoothness=*/true);
    return out;
}

}  // namespace corolla
