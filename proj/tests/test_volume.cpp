#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "corolla/volume.hpp"

using namespace corolla;

namespace fs = std::filesystem;

TEST_CASE("synth_case is deterministic byte-for-byte") {
    PhantomSpec spec;
    spec.noise_sigma = 0.04;
    SynthCase a = synth_case(spec, Grade::early, 7);
    SynthCase b = synth_case(spec, Grade::early, 7);
    CHECK(a.volume.data == b.volume.data);
    CHECK(a.fundus.px == b.fundus.px);
    CHECK(a.truth.surfaces.rows == b.truth.surfaces.rows);

    SynthCase c = synth_case(spec, Grade::early, 8);
    CHECK(a.volume.data != c.volume.data);
}

TEST_CASE("zero-noise phantom intensities follow the ground-truth surfaces") {
    PhantomSpec spec;
    spec.noise_sigma = 0.0;
    SynthCase sc = synth_case(spec, Grade::none, 7);
    const auto& gt = sc.truth.surfaces;
    int K = gt.num_surfaces;
    for (int s = 0; s < spec.slices; ++s)
        for (int x = 0; x < spec.cols; ++x)
            for (int z = 0; z < spec.rows; ++z) {
                int region = 0;
                while (region < K && z >= gt.at(region, s, x)) ++region;
                CHECK(sc.volume.at(s, z, x) ==
                      static_cast<float>(spec.layer_intensities[region]));
            }
}

TEST_CASE("ground truth equals the analytic surface model on the grid") {
    PhantomSpec spec;
    PhantomSurfaces model(spec, Grade::mid_advanced, 42);
    SynthCase sc = synth_case(spec, Grade::mid_advanced, 42);
    for (int k = 0; k < spec.num_surfaces(); ++k)
        for (int s = 0; s < spec.slices; ++s)
            for (int x = 0; x < spec.cols; ++x) {
                CHECK(sc.truth.surfaces.at(k, s, x) == model.rounded(k, s, x));
                CHECK(std::abs(model.row(k, s, x) -
                               sc.truth.surfaces.at(k, s, x)) <= 0.5);
            }
}

TEST_CASE("thinning scales the target layer by thinning^grade") {
    PhantomSpec spec;  // thinning 0.7, target layer 1
    auto mean_thickness = [&](Grade g, std::uint64_t seed) {
        SynthCase sc = synth_case(spec, g, seed);
        const auto& gt = sc.truth.surfaces;
        double acc = 0;
        for (int s = 0; s < gt.slices; ++s)
            for (int x = 0; x < gt.cols; ++x)
                acc += gt.at(2, s, x) - gt.at(1, s, x);
        return acc / (gt.slices * gt.cols);
    };
    for (std::uint64_t seed : {3ull, 7ull, 11ull}) {
        double t0 = mean_thickness(Grade::none, seed);
        double t2 = mean_thickness(Grade::mid_advanced, seed);
        CHECK(std::abs(t2 - 0.49 * t0) <= 1.0);  // rounding tolerance
        double t1 = mean_thickness(Grade::early, seed);
        CHECK(t0 > t1);  // monotone decrease with grade
        CHECK(t1 > t2);
    }
}

TEST_CASE("generated surfaces never cross and stay in range") {
    PhantomSpec spec;
    spec.noise_sigma = 0.05;
    for (std::uint64_t seed = 1; seed <= 12; ++seed)
        for (int g = 0; g < 3; ++g) {
            SynthCase sc = synth_case(spec, static_cast<Grade>(g), seed);
            // validate() checks strict ordering, gap, range, smoothness
            sc.truth.surfaces.validate(spec.rows, true);
            sc.volume.validate();
        }
}

TEST_CASE("fundus cup grows with grade") {
    PhantomSpec spec;
    spec.vessel_intensity = 0.0;  // plain disc/cup
    auto bright_count = [&](Grade g) {
        SynthCase sc = synth_case(spec, g, 5);
        int n = 0;
        for (int y = 0; y < sc.fundus.h; ++y)
            for (int x = 0; x < sc.fundus.w; ++x)
                if (sc.fundus.at(y, x, 0) > 0.97f) ++n;
        return n;
    };
    int c0 = bright_count(Grade::none);
    int c1 = bright_count(Grade::early);
    int c2 = bright_count(Grade::mid_advanced);
    CHECK(c0 < c1);
    CHECK(c1 < c2);
}

TEST_CASE("invalid phantom specs are rejected") {
    PhantomSpec spec;
    spec.base_depths = {30.0, 30.0, 74.0, 98.0};
    CHECK_THROWS_AS(synth_case(spec, Grade::none, 1), Error);

    PhantomSpec crossing;
    crossing.undulation_amplitude = 40.0;  // excursions exceed layer gaps
    CHECK_THROWS_AS(synth_case(crossing, Grade::none, 1), Error);

    PhantomSpec bad_noise;
    bad_noise.noise_sigma = -0.1;
    CHECK_THROWS_AS(synth_case(bad_noise, Grade::none, 1), Error);

    PhantomSpec bad_intensities;
    bad_intensities.layer_intensities = {0.1, 0.2};
    CHECK_THROWS_AS(synth_case(bad_intensities, Grade::none, 1), Error);
}

TEST_CASE("volume container round-trips bit-exactly") {
    OctVolume vol(2, 8, 4);
    for (size_t i = 0; i < vol.data.size(); ++i)
        vol.data[i] = static_cast<float>(i) / vol.data.size();
    auto path = (fs::temp_directory_path() / "corolla_vol_test.corovol").string();
    save_volume(vol, path);
    OctVolume back = load_volume(path);
    CHECK(back.slices == 2);
    CHECK(back.rows == 8);
    CHECK(back.cols == 4);
    CHECK(back.data == vol.data);
    fs::remove(path);
}

TEST_CASE("volume loader distinguishes failure modes") {
    auto tmp = fs::temp_directory_path();

    try {
        load_volume((tmp / "corolla_absent.corovol").string());
        FAIL("expected missing_file");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::missing_file);
    }

    // Header says 2x8x4 but payload holds 63 floats.
    OctVolume vol(2, 8, 4);
    auto path = (tmp / "corolla_short.corovol").string();
    save_volume(vol, path);
    fs::resize_file(path, fs::file_size(path) - sizeof(float));
    try {
        load_volume(path);
        FAIL("expected payload_mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::payload_mismatch);
    }
    fs::remove(path);

    // Extra payload is also a mismatch.
    save_volume(vol, path);
    {
        std::ofstream f(path, std::ios::binary | std::ios::app);
        float extra = 0.0f;
        f.write(reinterpret_cast<const char*>(&extra), sizeof(extra));
    }
    try {
        load_volume(path);
        FAIL("expected payload_mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::payload_mismatch);
    }
    fs::remove(path);

    // Non-finite payload values get their own code.
    save_volume(vol, path);
    {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(-static_cast<std::streamoff>(sizeof(float)), std::ios::end);
        float nan = std::nanf("");
        f.write(reinterpret_cast<const char*>(&nan), sizeof(nan));
    }
    try {
        load_volume(path);
        FAIL("expected non_finite");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::non_finite);
    }
    fs::remove(path);

    // Wrong magic.
    {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << "NOTAVOL1XXXXXXXXXXXX";
    }
    try {
        load_volume(path);
        FAIL("expected bad_magic");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::bad_magic);
    }
    fs::remove(path);
}

TEST_CASE("paper-scale default dimensions") {
    CHECK(OctVolume::kFullScaleSlices == 256);
    CHECK(OctVolume::kFullScaleRows == 992);
    CHECK(OctVolume::kFullScaleCols == 512);
    OctVolume full(OctVolume::kFullScaleSlices, OctVolume::kFullScaleRows,
                   OctVolume::kFullScaleCols);
    CHECK(full.data.size() == 256u * 992u * 512u);
}

TEST_CASE("volume validation rejects bad dims and out-of-range values") {
    OctVolume tiny(1, 3, 4);
    CHECK_THROWS_AS(tiny.validate(), Error);
    OctVolume vol(1, 4, 4);
    vol.data[0] = 1.5f;
    CHECK_THROWS_AS(vol.validate(), Error);
}
