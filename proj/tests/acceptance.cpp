// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code = number of failed
// criteria.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "lstsr/codec.hpp"
#include "lstsr/metrics.hpp"
#include "lstsr/pipeline.hpp"
#include "lstsr/sr_core.hpp"
#include "lstsr/synth.hpp"
#include "lstsr/tiler.hpp"

using namespace lstsr;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion << ": " << name
              << " - " << detail << std::endl;
    if (!pass) ++failures;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("lstsr_accept_" + tag + "_" +
                                            std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

double mae_vs(const Grid2D& estimate, const Grid2D& truth) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!truth.valid[i] || !estimate.valid[i]) continue;
        sum += std::abs(estimate.values[i] - truth.values[i]);
        ++n;
    }
    return n ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------- criterion 1
void criterion_consistency() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1001);
    double worst = 0.0;
    for (int scene_i = 0; scene_i < 100; ++scene_i) {
        SynthParams p;
        p.seed = 5000 + scene_i;
        p.n_rows = 5 * (20 + static_cast<int>(rng() % 101)); // 100..600
        p.n_cols = 5 * (20 + static_cast<int>(rng() % 101));
        p.cloud_fraction = uniform(rng, 0.0, 0.3);
        const SynthScene scene = generate(p, 5);
        const CoefficientField coeffs =
            edge_coefficients(normalize_guide(scene.guide), GuideParams{});
        SolverParams sp;
        sp.n_iterations = 40;
        const SolveResult res = solve(scene.source, coeffs, sp);
        worst = std::max(worst, res.report.consistency_residual);
    }
    const double elapsed = seconds_since(t0);
    std::ostringstream detail;
    detail << "max block residual " << worst << " (tol 1e-9) over 100 scenes in " << elapsed
           << " s (budget 300 s)";
    report(1, "downsample consistency", worst <= 1e-9 && elapsed < 300.0, detail.str());
}

// ---------------------------------------------------------------- criterion 2
void criterion_quality_ordering() {
    const auto t0 = Clock::now();
    int wins = 0;
    for (int scene_i = 0; scene_i < 20; ++scene_i) {
        SynthParams p;
        p.seed = 9000 + scene_i;
        const SynthScene scene = generate(p, 5); // 600x600 defaults
        const CoefficientField coeffs =
            edge_coefficients(normalize_guide(scene.guide), GuideParams{});
        const SolveResult res = solve(scene.source, coeffs, SolverParams{});
        const double m_solve = mae_vs(res.grid, scene.truth);
        const double m_bicubic = mae_vs(upsample_bicubic(scene.source, 5), scene.truth);
        const double m_source = mae_vs(replicate_nearest(scene.source, 5), scene.truth);
        if (m_solve < m_bicubic && m_bicubic < m_source) ++wins;
    }
    std::ostringstream detail;
    detail << "MAE(solver) < MAE(bicubic) < MAE(replicated source) in " << wins
           << "/20 scenes (need >= 18) in " << seconds_since(t0) << " s";
    report(2, "quality ordering", wins >= 18, detail.str());
}

// ---------------------------------------------------------------- criterion 3
void criterion_codec() {
    std::mt19937_64 rng(3001);
    PackedHeader h = profiles::lst();
    h.geo = GeoTransform{0.0, 50.0, 0.01, 1000, 1000};
    h.timestamp = UtcTime{2020, 8, 20, 10, 30};
    h.satellite = "METOPA";

    Grid2D g(h.geo, "K");
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.values[i] = uniform(rng, 200.0, 360.0);
        g.valid[i] = 1;
    }
    const Grid2D back = unpack(pack(g, h));
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        worst = std::max(worst, std::abs(back.values[i] - g.values[i]));
    }
    const bool quant_ok = worst <= 0.005 + 1e-12;

    // idempotence on packed grids with fill and special codes
    bool idem_ok = true;
    PackedHeader hg = profiles::lst_gac();
    hg.geo = GeoTransform{0.0, 50.0, 0.05, 40, 40};
    for (int trial = 0; trial < 20 && idem_ok; ++trial) {
        PackedGrid p;
        p.header = hg;
        p.data.resize(hg.geo.cell_count());
        const std::int32_t lo = hg.packed_min(), hi = hg.packed_max();
        for (auto& v : p.data) {
            const int pick = static_cast<int>(rng() % 12);
            if (pick == 0) v = hg.fill_code;
            else if (pick == 1) v = -11000;
            else v = static_cast<std::int16_t>(lo + static_cast<std::int32_t>(rng() % (hi - lo + 1)));
        }
        idem_ok = encode_block(pack(unpack(p), p.header)) == encode_block(p);
    }

    // golden-file stability
    const fs::path golden = fs::path(LSTSR_GOLDEN_DIR) / "lst_sample.npg";
    const auto golden_bytes = read_bytes(golden);
    bool golden_ok = !golden_bytes.empty();
    if (golden_ok) {
        std::size_t consumed = 0;
        const PackedGrid decoded =
            decode_block(golden_bytes.data(), golden_bytes.size(), consumed);
        golden_ok = consumed == golden_bytes.size() &&
                    encode_block(decoded) == golden_bytes;
    }

    std::ostringstream detail;
    detail << "max quantization error " << worst << " (tol 0.005) on 1e6 values; "
           << "pack(unpack(p)) byte-identical: " << (idem_ok ? "yes" : "no")
           << "; golden file stable: " << (golden_ok ? "yes" : "no");
    report(3, "codec bit-exactness", quant_ok && idem_ok && golden_ok, detail.str());
}

// ---------------------------------------------------------------- criterion 4
void criterion_tiling() {
    const bool sixteen = plan(960, 960, 240, 240, 240, 240).windows.size() == 16;

    // coverage oracle: exhaustive per axis up to 64 (windows are the cross
    // product of the axis positions), plus brute-force 2-D verification
    bool axis_ok = true;
    for (int extent = 1; extent <= 64 && axis_ok; ++extent) {
        for (int patch = 1; patch <= extent && axis_ok; ++patch) {
            for (int stride = 1; stride <= patch && axis_ok; ++stride) {
                std::vector<char> covered(extent, 0);
                for (int p0 : axis_positions(extent, patch, stride)) {
                    if (p0 < 0 || p0 + patch > extent) {
                        axis_ok = false;
                        break;
                    }
                    std::fill(covered.begin() + p0, covered.begin() + p0 + patch, char{1});
                }
                axis_ok = axis_ok && std::all_of(covered.begin(), covered.end(),
                                                 [](char c) { return c != 0; });
            }
        }
    }

    bool grid_ok = true;
    for (int n = 1; n <= 24 && grid_ok; ++n) {
        for (int patch = 1; patch <= n && grid_ok; ++patch) {
            for (int stride = 1; stride <= patch && grid_ok; ++stride) {
                const TilePlan p = plan(n, n, patch, patch, stride, stride);
                std::vector<int> counts(static_cast<std::size_t>(n) * n, 0);
                for (const auto& w : p.windows) {
                    for (int r = w.row0; r < w.row0 + w.height; ++r) {
                        for (int c = w.col0; c < w.col0 + w.width; ++c) {
                            ++counts[static_cast<std::size_t>(r) * n + c];
                        }
                    }
                }
                grid_ok = std::all_of(counts.begin(), counts.end(), [](int c) { return c >= 1; });
            }
        }
    }
    std::mt19937_64 rng(4001);
    for (int trial = 0; trial < 500 && grid_ok; ++trial) {
        const int rows = 1 + static_cast<int>(rng() % 64);
        const int cols = 1 + static_cast<int>(rng() % 64);
        const int ph = 1 + static_cast<int>(rng() % rows);
        const int pw = 1 + static_cast<int>(rng() % cols);
        const int sv = 1 + static_cast<int>(rng() % ph);
        const int sh = 1 + static_cast<int>(rng() % pw);
        const TilePlan p = plan(rows, cols, ph, pw, sv, sh);
        std::vector<char> covered(static_cast<std::size_t>(rows) * cols, 0);
        for (const auto& w : p.windows) {
            for (int r = w.row0; r < w.row0 + w.height; ++r) {
                std::memset(covered.data() + static_cast<std::size_t>(r) * cols + w.col0, 1,
                            static_cast<std::size_t>(w.width));
            }
        }
        grid_ok = std::all_of(covered.begin(), covered.end(), [](char c) { return c != 0; });
    }

    // extract-then-stitch identity within 1 ulp
    bool stitch_ok = true;
    for (int trial = 0; trial < 20 && stitch_ok; ++trial) {
        const int rows = 30 + static_cast<int>(rng() % 40);
        const int cols = 30 + static_cast<int>(rng() % 40);
        GeoTransform geo{0.0, 60.0, 0.01, rows, cols};
        Grid2D g(geo, "K");
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (uniform(rng, 0.0, 1.0) < 0.1) continue;
            g.values[i] = uniform(rng, 200.0, 320.0);
            g.valid[i] = 1;
        }
        const int patch = 10 + static_cast<int>(rng() % 10);
        const TilePlan p = plan(rows, cols, std::min(patch, rows), std::min(patch, cols),
                                std::max(1, patch / 2), std::max(1, patch / 2));
        std::vector<Grid2D> patches;
        patches.reserve(p.windows.size());
        for (const auto& w : p.windows) patches.push_back(extract(g, w));
        const Grid2D back = stitch_average(p, patches, geo);
        if (back.valid != g.valid) {
            stitch_ok = false;
            break;
        }
        for (std::size_t i = 0; i < g.size() && stitch_ok; ++i) {
            if (!g.valid[i]) continue;
            const double lo = std::nextafter(g.values[i], -1e308);
            const double hi = std::nextafter(g.values[i], 1e308);
            stitch_ok = back.values[i] >= lo && back.values[i] <= hi;
        }
    }

    std::ostringstream detail;
    detail << "plan(960,960,240,240,240,240) -> 16 windows: " << (sixteen ? "yes" : "no")
           << "; axis coverage exhaustive to 64: " << (axis_ok ? "ok" : "broken")
           << "; 2-D coverage: " << (grid_ok ? "ok" : "broken")
           << "; extract->stitch within 1 ulp: " << (stitch_ok ? "ok" : "broken");
    report(4, "tiling", sixteen && axis_ok && grid_ok && stitch_ok, detail.str());
}

// ---------------------------------------------------------------- criterion 5
void criterion_metrics() {
    std::mt19937_64 rng(5001);
    auto median_sorted = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
    };

    bool agree = true;
    for (int trial = 0; trial < 1000 && agree; ++trial) {
        const std::size_t n = 1 + rng() % 1000;
        PairedSample s;
        s.reference.resize(n);
        s.estimate.resize(n);
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) {
            s.reference[i] = uniform(rng, 240.0, 320.0);
            s.estimate[i] = s.reference[i] + uniform(rng, -6.0, 6.0);
            d[i] = s.estimate[i] - s.reference[i];
        }
        const ValidationReport r = compute_report(s, 0.5);
        double sum = 0.0, sum_abs = 0.0, sum_sq = 0.0;
        for (double x : d) {
            sum += x;
            sum_abs += std::abs(x);
            sum_sq += x * x;
        }
        const double mae = sum_abs / n;
        const double rmse = std::sqrt(sum_sq / n);
        const double md = median_sorted(d);
        std::vector<double> dev(n);
        for (std::size_t i = 0; i < n; ++i) dev[i] = std::abs(d[i] - md);
        const double rsd = 1.4826 * median_sorted(dev);
        auto close = [](double a, double b) {
            return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
        };
        agree = close(r.mae, mae) && close(r.rmse, rmse) && close(r.md, md) && close(r.rsd, rsd) &&
                close(r.bias_mean, sum / n);
    }

    PairedSample h1;
    h1.reference = {0.0, 0.0, 0.0};
    h1.estimate = {-1.0, 0.0, 1.0};
    const ValidationReport r1 = compute_report(h1, 0.5);
    PairedSample h2;
    h2.reference = {0.0, 0.0};
    h2.estimate = {3.0, 4.0};
    const ValidationReport r2 = compute_report(h2, 0.5);
    const bool hand_ok = std::abs(r1.rsd - 1.4826) <= 1e-12 &&
                         std::abs(r2.rmse - std::sqrt(12.5)) <= 1e-12;

    std::ostringstream detail;
    detail << "brute-force agreement on 1000 random samples: " << (agree ? "ok" : "broken")
           << "; RSD({-1,0,1}) = " << r1.rsd << ", RMSE({3,4}) = " << r2.rmse;
    report(5, "validation statistics", agree && hand_ok, detail.str());
}

// ---------------------------------------------------------------- criterion 6
void criterion_solver_physics() {
    std::mt19937_64 rng(6001);

    // constant-field fixed point
    const GeoTransform cgeo{0.0, 60.0, 0.05, 20, 20};
    const Grid2D const_source = Grid2D::constant(cgeo, 281.0, "K");
    CoefficientField rnd_coeffs(cgeo.refined(5));
    for (auto& c : rnd_coeffs.horizontal) c = uniform(rng, 0.0, 1.0);
    for (auto& c : rnd_coeffs.vertical) c = uniform(rng, 0.0, 1.0);
    SolverParams sp;
    sp.n_iterations = 30;
    const SolveResult const_res = solve(const_source, rnd_coeffs, sp);
    const bool const_ok = const_res.report.consistency_residual == 0.0;

    // extremum principle on 1e5 random single steps
    bool extremum_ok = true;
    std::size_t steps = 0;
    while (steps < 100000 && extremum_ok) {
        const int rows = 2 + static_cast<int>(rng() % 5);
        const int cols = 2 + static_cast<int>(rng() % 5);
        GeoTransform geo{0.0, 60.0, 0.01, rows, cols};
        Grid2D g(geo);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (uniform(rng, 0.0, 1.0) < 0.2) continue;
            g.values[i] = uniform(rng, -100.0, 100.0);
            g.valid[i] = 1;
        }
        CoefficientField f(geo);
        for (auto& c : f.horizontal) c = uniform(rng, 0.0, 1.0);
        for (auto& c : f.vertical) c = uniform(rng, 0.0, 1.0);
        const Grid2D out = diffuse_step(g, f, uniform(rng, 1e-3, 0.25));
        ++steps;
        for (int r = 0; r < rows && extremum_ok; ++r) {
            for (int c = 0; c < cols && extremum_ok; ++c) {
                if (!g.is_valid(r, c)) continue;
                double lo = g.value(r, c), hi = lo;
                auto visit = [&](int rr, int cc) {
                    if (rr < 0 || cc < 0 || rr >= rows || cc >= cols) return;
                    if (!g.is_valid(rr, cc)) return;
                    lo = std::min(lo, g.value(rr, cc));
                    hi = std::max(hi, g.value(rr, cc));
                };
                visit(r - 1, c);
                visit(r + 1, c);
                visit(r, c - 1);
                visit(r, c + 1);
                extremum_ok = out.value(r, c) >= lo - 1e-12 && out.value(r, c) <= hi + 1e-12;
            }
        }
    }

    // sum conservation on fully valid interiors
    bool mass_ok = true;
    double worst_mass = 0.0;
    for (int trial = 0; trial < 50 && mass_ok; ++trial) {
        GeoTransform geo{0.0, 60.0, 0.01, 30, 30};
        Grid2D g(geo);
        for (std::size_t i = 0; i < g.size(); ++i) {
            g.values[i] = uniform(rng, 100.0, 400.0);
            g.valid[i] = 1;
        }
        CoefficientField f(geo);
        for (auto& c : f.horizontal) c = uniform(rng, 0.0, 1.0);
        for (auto& c : f.vertical) c = uniform(rng, 0.0, 1.0);
        const Grid2D out = diffuse_step(g, f, 0.25);
        double before = 0.0, after = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            before += g.values[i];
            after += out.values[i];
        }
        worst_mass = std::max(worst_mass, std::abs(after - before) / std::abs(before));
        mass_ok = worst_mass <= 1e-9;
    }

    // zero-conductance solve equals adjusted nearest-replication
    bool zero_ok = true;
    {
        GeoTransform geo{0.0, 60.0, 0.05, 12, 14};
        Grid2D source(geo, "K");
        for (std::size_t i = 0; i < source.size(); ++i) {
            if (uniform(rng, 0.0, 1.0) < 0.15) continue;
            source.values[i] = uniform(rng, 220.0, 320.0);
            source.valid[i] = 1;
        }
        SolverParams zp;
        zp.n_iterations = 25;
        zp.init = InitScheme::REPLICATE;
        const SolveResult res = solve(source, CoefficientField::uniform(geo.refined(5), 0.0), zp);
        const Grid2D expected = replicate_nearest(source, 5);
        zero_ok = res.grid.valid == expected.valid;
        for (std::size_t i = 0; i < expected.size() && zero_ok; ++i) {
            if (!expected.valid[i]) continue;
            zero_ok = std::abs(res.grid.values[i] - expected.values[i]) <= 1e-9;
        }
    }

    std::ostringstream detail;
    detail << "constant fixed point residual " << const_res.report.consistency_residual
           << "; extremum holds on " << steps << " steps: " << (extremum_ok ? "ok" : "broken")
           << "; worst sum drift " << worst_mass << " (tol 1e-9)"
           << "; zero-conductance == adjusted replication: " << (zero_ok ? "ok" : "broken");
    report(6, "solver physics", const_ok && extremum_ok && mass_ok && zero_ok, detail.str());
}

// ---------------------------------------------------------------- criterion 7
void criterion_determinism() {
    TempDir tmp("determinism");
    std::vector<fs::path> scene_files;
    fs::path guide_path;
    for (int i = 0; i < 3; ++i) {
        SynthParams p;
        p.seed = 7000 + i;
        p.n_rows = 150;
        p.n_cols = 150;
        p.cloud_fraction = 0.15;
        UtcTime ts{2020, 8, 20 + i, 10, 30};
        const SceneFiles files = write_scene_files(tmp.path, generate(p, 5), ts);
        scene_files.push_back(files.scene);
        guide_path = files.guide; // same geometry for every seed
    }

    std::vector<std::vector<std::uint8_t>> runs;
    bool ok = true;
    for (int workers : {1, 4, 8}) {
        RunConfig cfg;
        cfg.input_dir = tmp.path / "scenes";
        cfg.guide_path = guide_path;
        cfg.output_dir = tmp.path / ("out_w" + std::to_string(workers));
        cfg.workers = workers;
        cfg.solver.n_iterations = 60;
        cfg.tile.patch_h = 80;
        cfg.tile.patch_w = 80;
        cfg.tile.stride_v = 60;
        cfg.tile.stride_h = 60;
        std::ostringstream log;
        ok = ok && cmd_downscale(cfg, log) == 0;

        std::vector<std::uint8_t> all;
        std::vector<fs::path> outputs;
        for (const auto& entry : fs::directory_iterator(cfg.output_dir)) {
            if (entry.path().extension() == ".npg") outputs.push_back(entry.path());
        }
        std::sort(outputs.begin(), outputs.end());
        ok = ok && outputs.size() == scene_files.size();
        for (const auto& f : outputs) {
            const auto bytes = read_bytes(f);
            all.insert(all.end(), bytes.begin(), bytes.end());
        }
        runs.push_back(std::move(all));
    }
    ok = ok && runs.size() == 3 && runs[0] == runs[1] && runs[0] == runs[2];
    std::ostringstream detail;
    detail << "products for workers {1,4,8} byte-identical over 3 scenes: "
           << (ok ? "yes" : "no");
    report(7, "end-to-end determinism", ok, detail.str());
}

// ---------------------------------------------------------------- criterion 8
void criterion_performance() {
    // one 2000x2000 tile, exactly 500 iterations, single worker
    SynthParams p;
    p.seed = 8001;
    p.n_rows = 2000;
    p.n_cols = 2000;
    const SynthScene tile_scene = generate(p, 5);
    const CoefficientField tile_coeffs =
        edge_coefficients(normalize_guide(tile_scene.guide), GuideParams{});
    SolverParams sp;
    sp.n_iterations = 500;
    sp.tolerance = 0.0; // run the full 500
    const auto t0 = Clock::now();
    const SolveResult res = solve(tile_scene.source, tile_coeffs, sp);
    const double tile_s = seconds_since(t0);
    const bool tile_ok = tile_s < 60.0 && res.report.iterations_run == 500;

    // 4000x4000 scene with the default tiling, 4 workers
    TempDir tmp("perf");
    SynthParams ps;
    ps.seed = 8002;
    ps.n_rows = 4000;
    ps.n_cols = 4000;
    ps.cloud_fraction = 0.1;
    const SceneFiles files =
        write_scene_files(tmp.path, generate(ps, 5), UtcTime{2020, 8, 20, 10, 30});
    RunConfig cfg;
    cfg.input_dir = tmp.path / "scenes";
    cfg.guide_path = files.guide;
    cfg.output_dir = tmp.path / "out";
    cfg.workers = 4;
    cfg.solver.n_iterations = 500;
    std::ostringstream log;
    const auto t1 = Clock::now();
    const int status = cmd_downscale(cfg, log);
    const double scene_s = seconds_since(t1);
    const bool scene_ok = status == 0 && scene_s < 300.0;

    std::ostringstream detail;
    detail << "2000x2000 tile, 500 iterations: " << tile_s << " s (budget 60 s); "
           << "4000x4000 scene, default tiling, 4 workers: " << scene_s << " s (budget 300 s)";
    report(8, "performance sanity", tile_ok && scene_ok, detail.str());
}

} // namespace

int main() {
    std::cout << "lstsr acceptance suite\n";
    const auto t0 = Clock::now();
    criterion_consistency();
    criterion_quality_ordering();
    criterion_codec();
    criterion_tiling();
    criterion_metrics();
    criterion_solver_physics();
    criterion_determinism();
    criterion_performance();
    std::cout << (failures == 0 ? "all criteria passed" : "criteria failed") << " ("
              << seconds_since(t0) << " s total)" << std::endl;
    return failures;
}
