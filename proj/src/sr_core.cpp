#include "lstsr/sr_core.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace lstsr {

void SolverParams::validate() const {
    if (factor < 1) throw InvalidParams("SolverParams: factor must be positive");
    if (!(lambda > 0.0) || lambda > 0.25) {
        throw InvalidParams("SolverParams: lambda must lie in (0, 0.25]");
    }
    if (n_iterations < 1) throw InvalidParams("SolverParams: n_iterations must be positive");
    if (adjust_every < 1) throw InvalidParams("SolverParams: adjust_every must be positive");
    if (tolerance < 0.0) throw InvalidParams("SolverParams: tolerance must be non-negative");
}

namespace {

// Dense working image: values are 0 at invalid cells, the mask is 0/1 as
// doubles so neighbor terms can be masked by multiplication.
struct Lattice {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;
    std::vector<double> m;
};

Lattice to_lattice(const Grid2D& g) {
    Lattice lat;
    lat.rows = g.n_rows();
    lat.cols = g.n_cols();
    lat.v.resize(g.size());
    lat.m.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        lat.m[i] = g.valid[i] ? 1.0 : 0.0;
        lat.v[i] = g.valid[i] ? g.values[i] : 0.0;
    }
    return lat;
}

void diffuse_kernel(const Lattice& in, const CoefficientField& cf, double lambda,
                    std::vector<double>& out) {
    const int rows = in.rows;
    const int cols = in.cols;
    const double* v = in.v.data();
    const double* m = in.m.data();
    const double* ch = cf.horizontal.data();
    const double* cv = cf.vertical.data();

    for (int r = 0; r < rows; ++r) {
        const std::size_t base = static_cast<std::size_t>(r) * cols;
        const double* vr = v + base;
        const double* mr = m + base;
        const double* chr = ch + static_cast<std::size_t>(r) * (cols - 1);
        const double* vu = r > 0 ? v + base - cols : nullptr;
        const double* mu = r > 0 ? m + base - cols : nullptr;
        const double* cu = r > 0 ? cv + static_cast<std::size_t>(r - 1) * cols : nullptr;
        const double* vd = r + 1 < rows ? v + base + cols : nullptr;
        const double* md = r + 1 < rows ? m + base + cols : nullptr;
        const double* cd = r + 1 < rows ? cv + static_cast<std::size_t>(r) * cols : nullptr;
        double* o = out.data() + base;

        auto cell = [&](int c, bool left, bool right) {
            const double uc = vr[c];
            double acc = 0.0;
            if (left) acc += chr[c - 1] * mr[c - 1] * (vr[c - 1] - uc);
            if (right) acc += chr[c] * mr[c + 1] * (vr[c + 1] - uc);
            if (vu) acc += cu[c] * mu[c] * (vu[c] - uc);
            if (vd) acc += cd[c] * md[c] * (vd[c] - uc);
            o[c] = (uc + lambda * acc) * mr[c];
        };

        if (cols == 1) {
            cell(0, false, false);
            continue;
        }
        cell(0, false, true);
        for (int c = 1; c + 1 < cols; ++c) {
            const double uc = vr[c];
            double acc = chr[c - 1] * mr[c - 1] * (vr[c - 1] - uc) +
                         chr[c] * mr[c + 1] * (vr[c + 1] - uc);
            if (vu) acc += cu[c] * mu[c] * (vu[c] - uc);
            if (vd) acc += cd[c] * md[c] * (vd[c] - uc);
            o[c] = (uc + lambda * acc) * mr[c];
        }
        cell(cols - 1, true, false);
    }
}

// Uniform per-block shift pinning block means to the source; returns the
// number of source-valid blocks with no valid HR cell. Block sums accumulate
// in the same order as coarsen_nan_aware so that an already-consistent grid
// yields shifts of exactly 0.0 (bit-exact fixed point).
std::size_t adjust_kernel(Lattice& lat, const Lattice& src, int factor) {
    const int ccols = src.cols;
    const int crows = src.rows;
    std::vector<double> shift(ccols);
    std::size_t empty = 0;

    for (int R = 0; R < crows; ++R) {
        const std::size_t cbase = static_cast<std::size_t>(R) * ccols;
        for (int C = 0; C < ccols; ++C) {
            shift[C] = 0.0;
            if (src.m[cbase + C] == 0.0) continue;
            double sum = 0.0;
            double cnt = 0.0;
            for (int dr = 0; dr < factor; ++dr) {
                const std::size_t base = (static_cast<std::size_t>(R) * factor + dr) * lat.cols +
                                         static_cast<std::size_t>(C) * factor;
                for (int dc = 0; dc < factor; ++dc) {
                    sum += lat.v[base + dc] * lat.m[base + dc];
                    cnt += lat.m[base + dc];
                }
            }
            if (cnt == 0.0) {
                ++empty;
                continue;
            }
            shift[C] = src.v[cbase + C] - sum / cnt;
        }
        for (int dr = 0; dr < factor; ++dr) {
            const std::size_t base = (static_cast<std::size_t>(R) * factor + dr) * lat.cols;
            double* vr = lat.v.data() + base;
            const double* mr = lat.m.data() + base;
            for (int C = 0; C < ccols; ++C) {
                const double sh = shift[C];
                if (sh == 0.0) continue;
                const int c0 = C * factor;
                for (int dc = 0; dc < factor; ++dc) {
                    vr[c0 + dc] += sh * mr[c0 + dc];
                }
            }
        }
    }
    return empty;
}

// NaN-propagating max of |a - b| (std::max would swallow NaN)
double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = std::abs(a[i] - b[i]);
        d = std::max(d, diff);
        acc += diff;
    }
    return std::isfinite(acc) ? d : acc;
}

Grid2D from_lattice(const Lattice& lat, const GeoTransform& geo, const std::string& units) {
    Grid2D out(geo, units);
    for (std::size_t i = 0; i < lat.v.size(); ++i) {
        if (lat.m[i] != 0.0) {
            out.values[i] = lat.v[i];
            out.valid[i] = 1;
        }
    }
    return out;
}

void check_lattice_geo(const Grid2D& u, const CoefficientField& coeffs, const char* where) {
    if (u.geo.n_rows != coeffs.geo.n_rows || u.geo.n_cols != coeffs.geo.n_cols ||
        !u.geo.approx_equal(coeffs.geo)) {
        throw GeoMismatch(std::string(where) + ": coefficient lattice does not match the grid");
    }
}

} // namespace

Grid2D diffuse_step(const Grid2D& u, const CoefficientField& coeffs, double lambda) {
    if (!(lambda > 0.0) || lambda > 0.25) {
        throw InvalidParams("diffuse_step: lambda must lie in (0, 0.25]");
    }
    check_lattice_geo(u, coeffs, "diffuse_step");
    Lattice lat = to_lattice(u);
    std::vector<double> out(lat.v.size());
    diffuse_kernel(lat, coeffs, lambda, out);
    lat.v = std::move(out);
    return from_lattice(lat, u.geo, u.units);
}

Grid2D adjust_step(const Grid2D& u, const Grid2D& source, int factor, std::size_t* empty_blocks) {
    if (factor < 1) throw InvalidParams("adjust_step: factor must be positive");
    if (u.n_rows() != source.n_rows() * factor || u.n_cols() != source.n_cols() * factor ||
        !u.geo.coarsened(factor).approx_equal(source.geo)) {
        throw GeoMismatch("adjust_step: coarsened grid geometry does not match the source");
    }
    Lattice lat = to_lattice(u);
    const Lattice src = to_lattice(source);
    const std::size_t empty = adjust_kernel(lat, src, factor);
    if (empty_blocks) *empty_blocks = empty;
    return from_lattice(lat, u.geo, u.units);
}

SolveResult solve(const Grid2D& source, const CoefficientField& coeffs, const SolverParams& p) {
    p.validate();
    const GeoTransform hr_geo = source.geo.refined(p.factor);
    if (coeffs.geo.n_rows != hr_geo.n_rows || coeffs.geo.n_cols != hr_geo.n_cols ||
        !coeffs.geo.approx_equal(hr_geo)) {
        throw GeoMismatch("solve: coefficient lattice must be the source geometry scaled by " +
                          std::to_string(p.factor));
    }
    const auto t0 = std::chrono::steady_clock::now();

    SolveResult result;
    result.grid = Grid2D(hr_geo, source.units);
    if (source.valid_count() == 0) {
        // nothing to constrain; an all-invalid scene stays all-invalid
        result.report.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return result;
    }

    const auto [lo, hi] = source.valid_min_max();
    const ScaleParams sp{lo, hi};
    const Grid2D scaled = minmax_scale(source, sp);
    const Grid2D init = p.init == InitScheme::BICUBIC ? upsample_bicubic(scaled, p.factor)
                                                      : replicate_nearest(scaled, p.factor);

    Lattice lat = to_lattice(init);
    const Lattice src = to_lattice(scaled);
    // the output only covers source-valid blocks; drop anything the
    // initializer produced elsewhere so diffusion cannot transport it
    {
        const Grid2D block_mask = replicate_nearest(scaled, p.factor);
        for (std::size_t i = 0; i < lat.m.size(); ++i) {
            if (!block_mask.valid[i]) {
                lat.m[i] = 0.0;
                lat.v[i] = 0.0;
            }
        }
    }

    std::vector<double> scratch(lat.v.size());
    std::vector<double> prev = lat.v;
    double delta = std::numeric_limits<double>::quiet_NaN();
    bool measured = false;
    std::size_t empty_blocks = 0;
    int iterations = 0;

    for (int it = 1; it <= p.n_iterations; ++it) {
        diffuse_kernel(lat, coeffs, p.lambda, scratch);
        lat.v.swap(scratch);
        iterations = it;
        if (it % p.adjust_every == 0) {
            adjust_kernel(lat, src, p.factor);
            delta = max_abs_diff(lat.v, prev);
            if (!std::isfinite(delta)) {
                throw NonFinite("solve: non-finite value at iteration " + std::to_string(it));
            }
            measured = true;
            prev = lat.v;
            if (delta < p.tolerance) break;
        }
    }

    empty_blocks = adjust_kernel(lat, src, p.factor);
    if (!measured) {
        delta = max_abs_diff(lat.v, prev);
        if (!std::isfinite(delta)) throw NonFinite("solve: non-finite value after final adjustment");
    }

    // back to physical units
    Grid2D out_scaled = from_lattice(lat, hr_geo, source.units);
    result.grid = minmax_unscale(out_scaled, sp);
    result.grid.units = source.units;

    result.report.iterations_run = iterations;
    result.report.final_max_delta = delta;
    result.report.empty_blocks = empty_blocks;

    // residual of the hard constraint, in physical units
    const Grid2D back = coarsen_nan_aware(result.grid, p.factor);
    double residual = 0.0;
    for (std::size_t i = 0; i < back.values.size(); ++i) {
        if (source.valid[i] && back.valid[i]) {
            residual = std::max(residual, std::abs(back.values[i] - source.values[i]));
        }
    }
    result.report.consistency_residual = residual;
    result.report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

} // namespace lstsr
