#pragma once

#include <cstdint>

#include "lstsr/grid.hpp"
#include "lstsr/guide.hpp"

namespace lstsr {

/// Recipe for a guide-correlated synthetic scene with known ground truth.
/// Dimensions are the high-resolution shape and must be divisible by the
/// SR factor. cloud_fraction punches per-block cloud holes into the source
/// and the matching truth blocks.
struct SynthParams {
    std::uint64_t seed = 0;
    int n_rows = 600;
    int n_cols = 600;
    int n_classes = 6;
    double lapse_rate = 6.5;        // K per km of elevation
    double class_offset_range = 6.0; // K spread between land cover classes
    double noise_sigma = 0.3;        // K, iid per HR cell
    double terrain_roughness = 1.0;  // scales elevation relief (3 km at 1.0)
    double cloud_fraction = 0.0;     // expected fraction of clouded blocks

    void validate(int factor) const;
};

struct SynthScene {
    Grid2D truth;      // HR kelvin field
    GuideStack guide;  // HR land cover / elevation / canopy
    Grid2D source;     // truth coarsened by the factor, clouds punched
};

/// Deterministic in the seed: Voronoi land cover, smooth random terrain,
/// per-class canopy, truth = base - lapse * elevation + class offset +
/// noise, source = NaN-aware coarsening of truth.
SynthScene generate(const SynthParams& p, int factor);

struct SceneFiles {
    std::filesystem::path scene;
    std::filesystem::path guide;
    std::filesystem::path truth;
};

/// Materialize a scene for the downscale pipeline: the coarse source as an
/// LST_GAC record (with constant satzen / scanline_time quality layers)
/// under <dir>/scenes/, plus guide.npg and truth.npg next to it. Outputs
/// are byte-deterministic for fixed inputs.
SceneFiles write_scene_files(const std::filesystem::path& out_dir, const SynthScene& scene,
                             const UtcTime& timestamp, const std::string& satellite = "SYNTH",
                             Node node = Node::DAY, const std::string& version = "v1.0");

} // namespace lstsr
