#include "lstsr/synth.hpp"

#include <cmath>
#include <random>

namespace lstsr {

namespace {

// Hand-rolled draws on top of mt19937_64 keep scenes bit-reproducible
// across standard libraries (std distributions are not pinned down).
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

double normal(std::mt19937_64& rng, double sigma) {
    // Box-Muller; one draw per call is plenty here
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

struct Bump {
    double r, c, sigma, amp;
};

} // namespace

void SynthParams::validate(int factor) const {
    if (factor < 1) throw InvalidParams("SynthParams: factor must be positive");
    if (n_rows < factor || n_cols < factor || n_rows % factor != 0 || n_cols % factor != 0) {
        throw InvalidParams("SynthParams: shape must be a positive multiple of the factor");
    }
    if (n_classes < 1) throw InvalidParams("SynthParams: n_classes must be at least 1");
    if (lapse_rate < 0.0 || class_offset_range < 0.0 || noise_sigma < 0.0 ||
        terrain_roughness < 0.0) {
        throw InvalidParams("SynthParams: magnitudes must be non-negative");
    }
    if (cloud_fraction < 0.0 || cloud_fraction >= 1.0) {
        throw InvalidParams("SynthParams: cloud_fraction must lie in [0, 1)");
    }
}

SynthScene generate(const SynthParams& p, int factor) {
    p.validate(factor);
    std::mt19937_64 rng(p.seed);

    GeoTransform geo;
    geo.lon_min = 60.0;
    geo.lat_max = 75.0;
    geo.cell_size = 0.01;
    geo.n_rows = p.n_rows;
    geo.n_cols = p.n_cols;

    const int rows = p.n_rows;
    const int cols = p.n_cols;

    // land cover: Voronoi cells around random sites, codes 10, 20, ...
    std::vector<double> site_r(p.n_classes), site_c(p.n_classes);
    for (int k = 0; k < p.n_classes; ++k) {
        site_r[k] = uniform(rng, 0.0, rows);
        site_c[k] = uniform(rng, 0.0, cols);
    }
    ClassGrid landcover(geo);
    std::vector<int> cls(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int k = 0; k < p.n_classes; ++k) {
                const double dr = r + 0.5 - site_r[k];
                const double dc = c + 0.5 - site_c[k];
                const double d = dr * dr + dc * dc;
                if (d < best_d) {
                    best_d = d;
                    best = k;
                }
            }
            const std::size_t i = landcover.index(r, c);
            cls[i] = best;
            landcover.codes[i] = 10 * (best + 1);
            landcover.valid[i] = 1;
        }
    }

    // terrain: a sum of smooth bumps, normalized and scaled to relief
    const int n_bumps = p.n_classes + 5;
    std::vector<Bump> bumps(n_bumps);
    const double min_dim = std::min(rows, cols);
    for (auto& b : bumps) {
        b.r = uniform(rng, 0.0, rows);
        b.c = uniform(rng, 0.0, cols);
        b.sigma = uniform(rng, min_dim / 10.0, min_dim / 3.0);
        b.amp = uniform(rng, -1.0, 1.0);
    }
    Grid2D elevation(geo, "m");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            double z = 0.0;
            for (const auto& b : bumps) {
                const double dr = (r + 0.5 - b.r) / b.sigma;
                const double dc = (c + 0.5 - b.c) / b.sigma;
                z += b.amp * std::exp(-0.5 * (dr * dr + dc * dc));
            }
            elevation.set(r, c, z);
            lo = std::min(lo, z);
            hi = std::max(hi, z);
        }
    }
    const double relief = 3000.0 * p.terrain_roughness;
    const double span = hi > lo ? hi - lo : 1.0;
    for (auto& v : elevation.values) v = (v - lo) / span * relief;

    // canopy: class-dependent base height plus mild noise
    std::vector<double> canopy_base(p.n_classes);
    for (auto& b : canopy_base) b = uniform(rng, 0.0, 30.0);
    Grid2D canopy(geo, "m");
    for (std::size_t i = 0; i < canopy.size(); ++i) {
        const double h = canopy_base[cls[i]] + normal(rng, 0.5);
        canopy.values[i] = std::clamp(h, 0.0, 60.0);
        canopy.valid[i] = 1;
    }

    // truth: base level, lapse-rate cooling with elevation, class offsets,
    // observation noise
    std::vector<double> class_offset(p.n_classes);
    for (auto& o : class_offset) {
        o = uniform(rng, -p.class_offset_range / 2.0, p.class_offset_range / 2.0);
    }
    const double base_temp = 280.0;
    Grid2D truth(geo, "K");
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double t = base_temp - p.lapse_rate * elevation.values[i] / 1000.0 +
                         class_offset[cls[i]] + normal(rng, p.noise_sigma);
        truth.values[i] = t;
        truth.valid[i] = 1;
    }

    SynthScene scene;
    scene.guide = build_guide(landcover, elevation, canopy);
    scene.source = coarsen_nan_aware(truth, factor);

    // cloud holes at source-block granularity, mirrored into the truth mask
    if (p.cloud_fraction > 0.0) {
        for (int R = 0; R < scene.source.n_rows(); ++R) {
            for (int C = 0; C < scene.source.n_cols(); ++C) {
                if (uniform01(rng) >= p.cloud_fraction) continue;
                scene.source.set_invalid(R, C);
                for (int dr = 0; dr < factor; ++dr) {
                    for (int dc = 0; dc < factor; ++dc) {
                        truth.set_invalid(R * factor + dr, C * factor + dc);
                    }
                }
            }
        }
    }
    scene.truth = std::move(truth);
    return scene;
}

SceneFiles write_scene_files(const std::filesystem::path& out_dir, const SynthScene& scene,
                             const UtcTime& timestamp, const std::string& satellite, Node node,
                             const std::string& version) {
    namespace fs = std::filesystem;
    SceneFiles files;
    fs::create_directories(out_dir / "scenes");

    auto stamp = [&](PackedHeader h, const GeoTransform& geo) {
        h.geo = geo;
        h.timestamp = timestamp;
        h.satellite = satellite;
        h.version = version;
        h.node = node;
        return h;
    };

    const PackedHeader gac = stamp(profiles::lst_gac(), scene.source.geo);
    std::vector<PackedGrid> scene_blocks;
    scene_blocks.push_back(pack(scene.source, gac));
    scene_blocks.push_back(pack(Grid2D::constant(scene.source.geo, 45.0, "degrees"),
                                stamp(profiles::satzen(), scene.source.geo)));
    scene_blocks.push_back(pack(Grid2D::constant(scene.source.geo, 10.5, "h"),
                                stamp(profiles::scanline_time(), scene.source.geo)));
    files.scene = out_dir / "scenes" / format_filename(gac);
    write_npg(files.scene, scene_blocks);

    Grid2D lc_grid(scene.guide.geo, "class");
    for (std::size_t i = 0; i < lc_grid.size(); ++i) {
        if (scene.guide.landcover.valid[i]) {
            lc_grid.values[i] = scene.guide.landcover.codes[i];
            lc_grid.valid[i] = 1;
        }
    }
    files.guide = out_dir / "guide.npg";
    write_npg(files.guide, {pack(lc_grid, stamp(profiles::landcover(), scene.guide.geo)),
                            pack(scene.guide.elevation, stamp(profiles::elevation(), scene.guide.geo)),
                            pack(scene.guide.canopy, stamp(profiles::canopy(), scene.guide.geo))});

    files.truth = out_dir / "truth.npg";
    write_npg(files.truth, {pack(scene.truth, stamp(profiles::lst(), scene.truth.geo))});
    return files;
}

} // namespace lstsr
