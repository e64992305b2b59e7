#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lstsr/errors.hpp"

namespace lstsr {

/// Placement of a raster on the plain lat-lon grid (square cells, WGS84
/// axes, north-up). Pixel (r, c) has its center at
///   lon = lon_min + (c + 0.5) * cell_size
///   lat = lat_max - (r + 0.5) * cell_size
struct GeoTransform {
    double lon_min = 0.0;
    double lat_max = 0.0;
    double cell_size = 1.0;
    int n_rows = 0;
    int n_cols = 0;

    void validate() const;

    std::size_t cell_count() const {
        return static_cast<std::size_t>(n_rows) * static_cast<std::size_t>(n_cols);
    }

    double lon_center(int c) const { return lon_min + (c + 0.5) * cell_size; }
    double lat_center(int r) const { return lat_max - (r + 0.5) * cell_size; }

    /// Geometry of the same extent at a coarser or finer cell size.
    GeoTransform coarsened(int factor) const;
    GeoTransform refined(int factor) const;

    /// Geometry of a sub-window starting at (row0, col0).
    GeoTransform shifted(int row0, int col0, int height, int width) const;

    /// Tolerant comparison (1e-9 absolute on the real-valued fields);
    /// derived cell sizes such as 0.05 / 5 are not bit-equal to 0.01.
    bool approx_equal(const GeoTransform& other) const;

    bool operator==(const GeoTransform& other) const = default;

    /// The product grid: lon in [-180, 180], lat in [50, 90] at 0.01 degrees.
    static GeoTransform pan_arctic();
};

/// A georeferenced 2-D field of physical values with an explicit validity
/// mask. A cell with valid == false carries no observation; every reduction
/// skips it. Stored values at invalid cells are preserved verbatim so that
/// codec special codes survive a round trip, but they have no physical
/// meaning.
struct Grid2D {
    GeoTransform geo;
    std::string units;
    std::vector<double> values;
    std::vector<std::uint8_t> valid;

    Grid2D() = default;
    Grid2D(const GeoTransform& g, std::string units_ = "");

    static Grid2D constant(const GeoTransform& g, double value, std::string units = "");

    int n_rows() const { return geo.n_rows; }
    int n_cols() const { return geo.n_cols; }
    std::size_t size() const { return values.size(); }

    std::size_t index(int r, int c) const {
        return static_cast<std::size_t>(r) * geo.n_cols + c;
    }
    double value(int r, int c) const { return values[index(r, c)]; }
    bool is_valid(int r, int c) const { return valid[index(r, c)] != 0; }

    void set(int r, int c, double v) {
        values[index(r, c)] = v;
        valid[index(r, c)] = 1;
    }
    void set_invalid(int r, int c) {
        values[index(r, c)] = std::numeric_limits<double>::quiet_NaN();
        valid[index(r, c)] = 0;
    }

    std::size_t valid_count() const;

    /// min/max over valid cells; throws EmptySample when no cell is valid.
    std::pair<double, double> valid_min_max() const;
};

/// Bounds for the min-max scaler.
struct ScaleParams {
    double lo = 0.0;
    double hi = 1.0;

    void validate() const;
};

/// Block-mean reduction that ignores invalid cells. An output cell is
/// invalid only when its factor x factor block holds no valid input cell.
/// Shapes that are not multiples of `factor` are refused; callers crop.
Grid2D coarsen_nan_aware(const Grid2D& g, int factor);

/// Cubic-convolution upsampling (Catmull-Rom kernel, a = -0.5). Output cells
/// whose 4x4 support touches an invalid cell fall back to bilinear over the
/// valid cells of the 2x2 neighborhood, and are invalid when that
/// neighborhood has no valid cell with positive weight. Constant fields map
/// to constant fields; factor 1 is the identity.
Grid2D upsample_bicubic(const Grid2D& g, int factor);

/// x -> (x - lo) / (hi - lo); the degenerate hi == lo range maps every value
/// to 0.5. The validity mask is unchanged.
Grid2D minmax_scale(const Grid2D& g, const ScaleParams& p);

/// Exact inverse of minmax_scale on the nondegenerate branch; the degenerate
/// branch maps back to the constant lo.
Grid2D minmax_unscale(const Grid2D& g, const ScaleParams& p);

/// Invalidate wherever `mask` is true. Never converts invalid to valid.
Grid2D apply_mask(const Grid2D& g, const std::vector<std::uint8_t>& mask);

/// Copy each cell's value and validity to its factor x factor block.
Grid2D replicate_nearest(const Grid2D& g, int factor);

} // namespace lstsr
