#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lstsr/sr_core.hpp"
#include "lstsr/synth.hpp"
#include "test_util.hpp"

using namespace lstsr;

TEST_CASE("generation is bit-deterministic in the seed") {
    SynthParams p;
    p.seed = 99;
    p.n_rows = 100;
    p.n_cols = 100;
    p.cloud_fraction = 0.2;
    const SynthScene a = generate(p, 5);
    const SynthScene b = generate(p, 5);
    CHECK(testutil::bits_equal(a.truth.values, b.truth.values));
    CHECK(a.truth.valid == b.truth.valid);
    CHECK(testutil::bits_equal(a.source.values, b.source.values));
    CHECK(testutil::bits_equal(a.guide.elevation.values, b.guide.elevation.values));
    CHECK(a.guide.landcover.codes == b.guide.landcover.codes);

    p.seed = 100;
    const SynthScene c = generate(p, 5);
    CHECK_FALSE(testutil::bits_equal(a.truth.values, c.truth.values));
}

TEST_CASE("the emitted source is the coarsening of the truth") {
    SynthParams p;
    p.seed = 7;
    p.n_rows = 150;
    p.n_cols = 100;
    p.cloud_fraction = 0.25;
    const SynthScene s = generate(p, 5);
    const Grid2D re = coarsen_nan_aware(s.truth, 5);
    REQUIRE(re.size() == s.source.size());
    for (std::size_t i = 0; i < re.size(); ++i) {
        CHECK(re.valid[i] == s.source.valid[i]);
        if (s.source.valid[i]) CHECK(re.values[i] == s.source.values[i]);
    }
}

TEST_CASE("a flat noiseless single-class scene is constant and solvable exactly") {
    SynthParams p;
    p.seed = 1;
    p.n_rows = 50;
    p.n_cols = 50;
    p.n_classes = 1;
    p.noise_sigma = 0.0;
    p.terrain_roughness = 0.0;
    p.class_offset_range = 0.0;
    const SynthScene s = generate(p, 5);
    const double t0 = s.truth.values[0];
    for (double v : s.truth.values) CHECK(v == doctest::Approx(t0).epsilon(1e-12));

    const CoefficientField coeffs = edge_coefficients(normalize_guide(s.guide), GuideParams{});
    SolverParams sp;
    sp.n_iterations = 20;
    const SolveResult res = solve(s.source, coeffs, sp);
    for (std::size_t i = 0; i < res.grid.size(); ++i) {
        CHECK(res.grid.values[i] == doctest::Approx(t0).epsilon(1e-9));
    }
}

TEST_CASE("class boundaries coincide with temperature discontinuities") {
    SynthParams p;
    p.seed = 5;
    p.n_rows = 200;
    p.n_cols = 200;
    p.noise_sigma = 0.1;
    const SynthScene s = generate(p, 5);

    double boundary_sum = 0.0, interior_sum = 0.0;
    std::size_t boundary_n = 0, interior_n = 0;
    for (int r = 0; r < p.n_rows; ++r) {
        for (int c = 0; c + 1 < p.n_cols; ++c) {
            const double grad = std::abs(s.truth.value(r, c + 1) - s.truth.value(r, c));
            if (s.guide.landcover.code(r, c) != s.guide.landcover.code(r, c + 1)) {
                boundary_sum += grad;
                ++boundary_n;
            } else {
                interior_sum += grad;
                ++interior_n;
            }
        }
    }
    REQUIRE(boundary_n > 0);
    REQUIRE(interior_n > 0);
    CHECK(boundary_sum / boundary_n > interior_sum / interior_n);
}

TEST_CASE("cloud fraction lands near the requested level") {
    SynthParams p;
    p.seed = 3;
    p.n_rows = 500;
    p.n_cols = 500;
    p.cloud_fraction = 0.3;
    const SynthScene s = generate(p, 5);
    const double masked =
        1.0 - static_cast<double>(s.source.valid_count()) / static_cast<double>(s.source.size());
    CHECK(masked > 0.2);
    CHECK(masked < 0.4);
    // truth holes mirror source holes block-wise
    const Grid2D blocks = replicate_nearest(s.source, 5);
    CHECK(s.truth.valid == blocks.valid);
}

TEST_CASE("parameters are validated") {
    SynthParams p;
    p.n_rows = 101; // not a multiple of 5
    CHECK_THROWS_AS(generate(p, 5), InvalidParams);
    p = SynthParams{};
    p.n_classes = 0;
    CHECK_THROWS_AS(generate(p, 5), InvalidParams);
    p = SynthParams{};
    p.cloud_fraction = 1.0;
    CHECK_THROWS_AS(generate(p, 5), InvalidParams);
}
