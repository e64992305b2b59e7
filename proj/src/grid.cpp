#include "lstsr/grid.hpp"

#include <algorithm>
#include <cmath>

namespace lstsr {

namespace {

bool near(double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

} // namespace

void GeoTransform::validate() const {
    if (!(cell_size > 0.0)) {
        throw InvalidParams("GeoTransform: cell_size must be positive");
    }
    if (n_rows < 1 || n_cols < 1) {
        throw InvalidParams("GeoTransform: n_rows and n_cols must be at least 1");
    }
}

GeoTransform GeoTransform::coarsened(int factor) const {
    GeoTransform out = *this;
    out.cell_size = cell_size * factor;
    out.n_rows = n_rows / factor;
    out.n_cols = n_cols / factor;
    return out;
}

GeoTransform GeoTransform::refined(int factor) const {
    GeoTransform out = *this;
    out.cell_size = cell_size / factor;
    out.n_rows = n_rows * factor;
    out.n_cols = n_cols * factor;
    return out;
}

GeoTransform GeoTransform::shifted(int row0, int col0, int height, int width) const {
    GeoTransform out = *this;
    out.lon_min = lon_min + col0 * cell_size;
    out.lat_max = lat_max - row0 * cell_size;
    out.n_rows = height;
    out.n_cols = width;
    return out;
}

bool GeoTransform::approx_equal(const GeoTransform& other) const {
    return n_rows == other.n_rows && n_cols == other.n_cols &&
           near(lon_min, other.lon_min) && near(lat_max, other.lat_max) &&
           near(cell_size, other.cell_size);
}

GeoTransform GeoTransform::pan_arctic() {
    return GeoTransform{-180.0, 90.0, 0.01, 4000, 36000};
}

Grid2D::Grid2D(const GeoTransform& g, std::string units_)
    : geo(g),
      units(std::move(units_)),
      values(g.cell_count(), std::numeric_limits<double>::quiet_NaN()),
      valid(g.cell_count(), 0) {
    geo.validate();
}

Grid2D Grid2D::constant(const GeoTransform& g, double value, std::string units) {
    Grid2D out(g, std::move(units));
    std::fill(out.values.begin(), out.values.end(), value);
    std::fill(out.valid.begin(), out.valid.end(), std::uint8_t{1});
    return out;
}

std::size_t Grid2D::valid_count() const {
    std::size_t n = 0;
    for (auto v : valid) n += v != 0;
    return n;
}

std::pair<double, double> Grid2D::valid_min_max() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!valid[i]) continue;
        lo = std::min(lo, values[i]);
        hi = std::max(hi, values[i]);
        any = true;
    }
    if (!any) throw EmptySample("valid_min_max: grid has no valid cell");
    return {lo, hi};
}

void ScaleParams::validate() const {
    if (!(hi >= lo)) throw InvalidParams("ScaleParams: hi must be >= lo");
}

Grid2D coarsen_nan_aware(const Grid2D& g, int factor) {
    if (factor < 1) throw InvalidParams("coarsen_nan_aware: factor must be positive");
    if (g.n_rows() % factor != 0 || g.n_cols() % factor != 0) {
        throw DimensionNotDivisible("coarsen_nan_aware: shape " + std::to_string(g.n_rows()) +
                                    "x" + std::to_string(g.n_cols()) +
                                    " not divisible by factor " + std::to_string(factor));
    }
    Grid2D out(g.geo.coarsened(factor), g.units);
    const int cols = g.n_cols();
    for (int R = 0; R < out.n_rows(); ++R) {
        for (int C = 0; C < out.n_cols(); ++C) {
            double sum = 0.0;
            int count = 0;
            for (int dr = 0; dr < factor; ++dr) {
                const int r = R * factor + dr;
                const std::size_t base = static_cast<std::size_t>(r) * cols + C * factor;
                for (int dc = 0; dc < factor; ++dc) {
                    if (g.valid[base + dc]) {
                        sum += g.values[base + dc];
                        ++count;
                    }
                }
            }
            if (count > 0) out.set(R, C, sum / count);
        }
    }
    return out;
}

namespace {

// Catmull-Rom weights (cubic convolution, a = -0.5) at fractional offset t.
inline void cubic_weights(double t, double w[4]) {
    w[0] = ((-0.5 * t + 1.0) * t - 0.5) * t;
    w[1] = (1.5 * t - 2.5) * t * t + 1.0;
    w[2] = ((-1.5 * t + 2.0) * t + 0.5) * t;
    w[3] = (0.5 * t - 0.5) * t * t;
}

inline int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

} // namespace

Grid2D upsample_bicubic(const Grid2D& g, int factor) {
    if (factor < 1) throw InvalidParams("upsample_bicubic: factor must be positive");
    if (factor == 1) return g; // no resampling: identity including the mask
    Grid2D out(g.geo.refined(factor), g.units);
    const int rows = g.n_rows();
    const int cols = g.n_cols();
    const double inv = 1.0 / factor;

    std::vector<int> col_base(out.n_cols());
    std::vector<double> col_w(static_cast<std::size_t>(out.n_cols()) * 4);
    std::vector<double> col_t(out.n_cols());
    for (int C = 0; C < out.n_cols(); ++C) {
        const double x = (C + 0.5) * inv - 0.5;
        const double fx = std::floor(x);
        col_base[C] = static_cast<int>(fx);
        col_t[C] = x - fx;
        cubic_weights(col_t[C], &col_w[static_cast<std::size_t>(C) * 4]);
    }

    double wr[4];
    for (int R = 0; R < out.n_rows(); ++R) {
        const double y = (R + 0.5) * inv - 0.5;
        const double fy = std::floor(y);
        const int rbase = static_cast<int>(fy);
        const double ty = y - fy;
        cubic_weights(ty, wr);
        for (int C = 0; C < out.n_cols(); ++C) {
            const int cbase = col_base[C];
            const double* wc = &col_w[static_cast<std::size_t>(C) * 4];

            // 4x4 support with clamped borders.
            double acc = 0.0;
            bool all_valid = true;
            for (int i = 0; i < 4 && all_valid; ++i) {
                const int r = clamp_index(rbase - 1 + i, rows);
                for (int j = 0; j < 4; ++j) {
                    const int c = clamp_index(cbase - 1 + j, cols);
                    if (!g.is_valid(r, c)) {
                        all_valid = false;
                        break;
                    }
                    acc += wr[i] * wc[j] * g.value(r, c);
                }
            }
            if (all_valid) {
                out.set(R, C, acc);
                continue;
            }

            // Valid-neighborhood bilinear fallback.
            const double tx = col_t[C];
            const int r0 = clamp_index(rbase, rows);
            const int r1 = clamp_index(rbase + 1, rows);
            const int c0 = clamp_index(cbase, cols);
            const int c1 = clamp_index(cbase + 1, cols);
            const double wy[2] = {1.0 - ty, ty};
            const double wx[2] = {1.0 - tx, tx};
            const int rr[2] = {r0, r1};
            const int cc[2] = {c0, c1};
            double num = 0.0, den = 0.0;
            double mean_sum = 0.0;
            int mean_n = 0;
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    if (i == 1 && rr[1] == rr[0]) continue;
                    if (j == 1 && cc[1] == cc[0]) continue;
                    if (!g.is_valid(rr[i], cc[j])) continue;
                    const double w = wy[i] * wx[j];
                    num += w * g.value(rr[i], cc[j]);
                    den += w;
                    mean_sum += g.value(rr[i], cc[j]);
                    ++mean_n;
                }
            }
            if (den > 0.0) {
                out.set(R, C, num / den);
            } else if (mean_n > 0) {
                // the cell sits exactly on an invalid sample; average the
                // valid neighbors rather than propagating the gap
                out.set(R, C, mean_sum / mean_n);
            }
        }
    }
    return out;
}

Grid2D minmax_scale(const Grid2D& g, const ScaleParams& p) {
    p.validate();
    Grid2D out = g;
    if (p.hi > p.lo) {
        const double inv = 1.0 / (p.hi - p.lo);
        for (auto& v : out.values) v = (v - p.lo) * inv;
    } else {
        for (auto& v : out.values) v = 0.5;
    }
    // keep invalid cells at NaN
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (!out.valid[i]) out.values[i] = std::numeric_limits<double>::quiet_NaN();
    }
    out.units = "1";
    return out;
}

Grid2D minmax_unscale(const Grid2D& g, const ScaleParams& p) {
    p.validate();
    Grid2D out = g;
    if (p.hi > p.lo) {
        const double range = p.hi - p.lo;
        for (auto& v : out.values) v = v * range + p.lo;
    } else {
        for (auto& v : out.values) v = p.lo;
    }
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (!out.valid[i]) out.values[i] = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

Grid2D apply_mask(const Grid2D& g, const std::vector<std::uint8_t>& mask) {
    if (mask.size() != g.size()) {
        throw ShapeMismatch("apply_mask: mask size " + std::to_string(mask.size()) +
                            " does not match grid size " + std::to_string(g.size()));
    }
    Grid2D out = g;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) {
            out.valid[i] = 0;
            out.values[i] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return out;
}

Grid2D replicate_nearest(const Grid2D& g, int factor) {
    if (factor < 1) throw InvalidParams("replicate_nearest: factor must be positive");
    Grid2D out(g.geo.refined(factor), g.units);
    for (int r = 0; r < g.n_rows(); ++r) {
        for (int c = 0; c < g.n_cols(); ++c) {
            const double v = g.value(r, c);
            const bool ok = g.is_valid(r, c);
            for (int dr = 0; dr < factor; ++dr) {
                const std::size_t base = out.index(r * factor + dr, c * factor);
                for (int dc = 0; dc < factor; ++dc) {
                    out.values[base + dc] = v;
                    out.valid[base + dc] = ok ? 1 : 0;
                }
            }
        }
    }
    return out;
}

} // namespace lstsr
