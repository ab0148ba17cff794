#include <algorithm>
#include <cmath>

#include "corolla/rng.hpp"
#include "corolla/volume.hpp"

namespace corolla {

namespace {
constexpr double kPi = 3.14159265358979323846;

double thinning_shift(const PhantomSpec& spec, Grade grade) {
    if (spec.num_surfaces() < 2) return 0.0;
    int t = spec.target_layer;
    double gap = spec.base_depths[t + 1] - spec.base_depths[t];
    double factor = std::pow(spec.thinning, static_cast<double>(grade));
    return gap * (1.0 - factor);
}
}  // namespace

void PhantomSpec::validate() const {
    require(slices >= 1 && rows >= 4 && cols >= 2, ErrorCode::validation,
            "PhantomSpec: dims must satisfy S>=1, H>=4, W>=2");
    int k = num_surfaces();
    require(k >= 1, ErrorCode::validation, "PhantomSpec: need at least one surface");
    for (int i = 1; i < k; ++i)
        require(base_depths[i] > base_depths[i - 1], ErrorCode::validation,
                "PhantomSpec: base_depths must be strictly increasing");
    require(static_cast<int>(layer_intensities.size()) == k + 1,
            ErrorCode::validation,
            "PhantomSpec: need K+1 layer intensities");
    for (double v : layer_intensities)
        require(v >= 0.0 && v <= 1.0, ErrorCode::validation,
                "PhantomSpec: layer intensities must lie in [0,1]");
    require(noise_sigma >= 0.0, ErrorCode::validation,
            "PhantomSpec: noise_sigma must be >= 0");
    require(thinning > 0.0 && thinning <= 1.0, ErrorCode::validation,
            "PhantomSpec: thinning must lie in (0,1]");
    require(undulation_amplitude >= 0.0 && bump_amplitude >= 0.0 &&
                undulation_frequency > 0.0,
            ErrorCode::validation, "PhantomSpec: undulation params invalid");
    if (k >= 2)
        require(target_layer >= 0 && target_layer <= k - 2,
                ErrorCode::validation, "PhantomSpec: target_layer out of range");
    require(fundus_size >= 8, ErrorCode::validation,
            "PhantomSpec: fundus_size too small");

    // Surfaces may deviate from their base depth by at most E; demand a
    // 2-row margin beyond worst-case excursions so rounded surfaces never
    // cross, even at the strongest thinning.
    double excursion = undulation_amplitude + bump_amplitude;
    double max_shift =
        k >= 2 ? thinning_shift(*this, Grade::mid_advanced) : 0.0;
    for (int i = 0; i + 1 < k; ++i) {
        double gap = base_depths[i + 1] - base_depths[i];
        if (i == target_layer) gap -= max_shift;
        require(gap >= 2.0 * excursion + 3.0, ErrorCode::validation,
                "PhantomSpec: surfaces may cross; shrink undulation or widen "
                "base depths");
    }
    require(base_depths.front() - excursion >= 2.0 &&
                base_depths.back() + excursion <= rows - 3.0,
            ErrorCode::validation,
            "PhantomSpec: surfaces too close to the volume boundary");
}

PhantomSurfaces::PhantomSurfaces(const PhantomSpec& spec, Grade grade,
                                 std::uint64_t seed)
    : slices_(spec.slices), cols_(spec.cols) {
    int k = spec.num_surfaces();
    double shift = thinning_shift(spec, grade);
    for (int i = 0; i < k; ++i) {
        Pcg32 rng = fork_stream(seed, "phantom.surface", static_cast<std::uint64_t>(i));
        PerSurface s;
        s.depth = spec.base_depths[i];
        if (k >= 2 && i > spec.target_layer) s.depth -= shift;
        int waves = 1 + static_cast<int>(rng.next_below(3));
        for (int m = 0; m < waves; ++m) {
            Sinusoid w;
            w.amplitude =
                spec.undulation_amplitude / waves * rng.uniform(0.5, 1.0);
            w.freq = rng.uniform(0.4, std::max(0.4, spec.undulation_frequency));
            w.phase = rng.uniform(0.0, 2.0 * kPi);
            w.slice_drift = rng.uniform(-kPi, kPi);
            s.waves.push_back(w);
        }
        s.bump.amplitude = rng.uniform(-spec.bump_amplitude, spec.bump_amplitude);
        s.bump.col0 = rng.uniform(0.2, 0.8) * spec.cols;
        s.bump.slice0 = rng.uniform(0.2, 0.8) * spec.slices;
        s.bump.sigma_col = std::max(0.5, spec.bump_sigma_frac * spec.cols);
        s.bump.sigma_slice = std::max(0.5, spec.bump_sigma_frac * spec.slices);
        surfaces_.push_back(std::move(s));
    }
}

double PhantomSurfaces::row(int surface, int slice, int col) const {
    const PerSurface& s = surfaces_[surface];
    double sn = slices_ > 1 ? static_cast<double>(slice) / (slices_ - 1) : 0.0;
    double xn = static_cast<double>(col) / cols_;
    double r = s.depth;
    for (const auto& w : s.waves)
        r += w.amplitude * std::sin(2.0 * kPi * w.freq * xn + w.phase +
                                    w.slice_drift * sn);
    double dc = (col - s.bump.col0) / s.bump.sigma_col;
    double ds = (slice - s.bump.slice0) / s.bump.sigma_slice;
    r += s.bump.amplitude * std::exp(-0.5 * (dc * dc + ds * ds));
    return r;
}

int PhantomSurfaces::rounded(int surface, int slice, int col) const {
    return static_cast<int>(std::llround(row(surface, slice, col)));
}

namespace {

void stamp_disk(FundusImage& img, double cy, double cx, double radius,
                const float color[3], double opacity) {
    int y0 = std::max(0, static_cast<int>(std::floor(cy - radius - 1)));
    int y1 = std::min(img.h - 1, static_cast<int>(std::ceil(cy + radius + 1)));
    int x0 = std::max(0, static_cast<int>(std::floor(cx - radius - 1)));
    int x1 = std::min(img.w - 1, static_cast<int>(std::ceil(cx + radius + 1)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double d = std::sqrt((y - cy) * (y - cy) + (x - cx) * (x - cx));
            double a = std::clamp(radius - d + 0.5, 0.0, 1.0) * opacity;
            if (a <= 0.0) continue;
            for (int c = 0; c < 3; ++c)
                img.at(y, x, c) = static_cast<float>(
                    (1.0 - a) * img.at(y, x, c) + a * color[c]);
        }
}

FundusImage render_fundus(const PhantomSpec& spec, Grade grade,
                          std::uint64_t seed) {
    Pcg32 rng = fork_stream(seed, "phantom.fundus");
    int n = spec.fundus_size;
    FundusImage img(n, n);

    double half = n / 2.0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double dy = (y - half) / half, dx = (x - half) / half;
            double vignette = 1.0 - 0.22 * (dy * dy + dx * dx);
            img.at(y, x, 0) = static_cast<float>(0.58 * vignette);
            img.at(y, x, 1) = static_cast<float>(0.27 * vignette);
            img.at(y, x, 2) = static_cast<float>(0.12 * vignette);
        }

    double cy = half + rng.uniform(-0.06, 0.06) * n;
    double cx = half + rng.uniform(-0.06, 0.06) * n;
    double disc_r = 0.18 * n * rng.uniform(0.85, 1.15);
    // Cup diameter grows with grade: ratio 0.3 + 0.2 * grade.
    double cup_r = disc_r * (0.3 + 0.2 * static_cast<double>(grade));

    const float disc_color[3] = {0.93f, 0.82f, 0.55f};
    const float cup_color[3] = {0.99f, 0.93f, 0.72f};
    stamp_disk(img, cy, cx, disc_r, disc_color, 1.0);
    stamp_disk(img, cy, cx, cup_r, cup_color, 1.0);

    if (spec.vessel_intensity > 0.0) {
        const float vessel_color[3] = {0.45f, 0.12f, 0.08f};
        int vessels = 4 + static_cast<int>(rng.next_below(4));
        for (int v = 0; v < vessels; ++v) {
            double theta = rng.uniform(0.0, 2.0 * kPi);
            double dev = rng.uniform(-0.5, 0.5);
            double reach = 0.55 * n * rng.uniform(0.8, 1.2);
            double perp = rng.uniform(-0.15, 0.15) * n;
            double p0y = cy + 0.3 * disc_r * std::sin(theta);
            double p0x = cx + 0.3 * disc_r * std::cos(theta);
            double p2y = cy + reach * std::sin(theta + dev);
            double p2x = cx + reach * std::cos(theta + dev);
            double my = (p0y + p2y) / 2.0, mx = (p0x + p2x) / 2.0;
            double p1y = my - perp * std::cos(theta);
            double p1x = mx + perp * std::sin(theta);
            double width0 = std::max(0.012 * n, 1.0);
            int steps = 4 * n;
            for (int i = 0; i <= steps; ++i) {
                double t = static_cast<double>(i) / steps;
                double u = 1.0 - t;
                double by = u * u * p0y + 2 * u * t * p1y + t * t * p2y;
                double bx = u * u * p0x + 2 * u * t * p1x + t * t * p2x;
                double w = width0 * (1.0 - 0.5 * t);
                stamp_disk(img, by, bx, w, vessel_color,
                           0.85 * spec.vessel_intensity);
            }
        }
    }
    return img;
}

}  // namespace

SynthCase synth_case(const PhantomSpec& spec, Grade grade, std::uint64_t seed) {
    spec.validate();
    int g = static_cast<int>(grade);
    require(g >= 0 && g <= 2, ErrorCode::invalid_argument,
            "synth_case: grade must be 0, 1 or 2");

    PhantomSurfaces model(spec, grade, seed);
    int S = spec.slices, H = spec.rows, W = spec.cols;
    int K = spec.num_surfaces();

    SynthCase out;
    out.truth.grade = grade;
    out.truth.surfaces = SurfaceSet(K, S, W, 0, 1);
    for (int k = 0; k < K; ++k)
        for (int s = 0; s < S; ++s)
            for (int x = 0; x < W; ++x)
                out.truth.surfaces.at(k, s, x) = model.rounded(k, s, x);

    // Record the observed smoothness/gap bounds so the ground truth
    // validates under the same invariants as extracted surfaces.
    int max_delta = 0, min_gap = H;
    for (int k = 0; k < K; ++k)
        for (int s = 0; s < S; ++s)
            for (int x = 0; x < W; ++x) {
                if (x > 0)
                    max_delta = std::max(
                        max_delta, std::abs(out.truth.surfaces.at(k, s, x) -
                                            out.truth.surfaces.at(k, s, x - 1)));
                if (k > 0)
                    min_gap = std::min(min_gap,
                                       out.truth.surfaces.at(k, s, x) -
                                           out.truth.surfaces.at(k - 1, s, x));
            }
    out.truth.surfaces.delta = max_delta;
    out.truth.surfaces.gap = K > 1 ? min_gap : 1;
    out.truth.surfaces.validate(H, /*check_smoothness=*/true);

    out.volume = OctVolume(S, H, W, spec.voxel_scale);
    Pcg32 noise = fork_stream(seed, "phantom.noise");
    std::vector<int> col_rows(static_cast<size_t>(K) * W);
    for (int s = 0; s < S; ++s) {
        for (int k = 0; k < K; ++k)
            for (int x = 0; x < W; ++x)
                col_rows[static_cast<size_t>(k) * W + x] =
                    out.truth.surfaces.at(k, s, x);
        for (int z = 0; z < H; ++z)
            for (int x = 0; x < W; ++x) {
                int region = 0;
                while (region < K &&
                       z >= col_rows[static_cast<size_t>(region) * W + x])
                    ++region;
                double v = spec.layer_intensities[region];
                if (spec.noise_sigma > 0.0)
                    v = std::clamp(v + spec.noise_sigma * noise.gaussian(), 0.0,
                                   1.0);
                out.volume.at(s, z, x) = static_cast<float>(v);
            }
    }

    out.fundus = render_fundus(spec, grade, seed);
    return out;
}

}  // namespace corolla
