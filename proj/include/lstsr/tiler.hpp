#pragma once

#include <vector>

#include "lstsr/grid.hpp"

namespace lstsr {

struct Window {
    int row0 = 0;
    int col0 = 0;
    int height = 0;
    int width = 0;

    bool operator==(const Window&) const = default;
};

/// Deterministic row-major list of patch windows covering a raster.
struct TilePlan {
    std::vector<Window> windows;
    int patch_h = 0;
    int patch_w = 0;
    int stride_v = 0;
    int stride_h = 0;
};

/// Start positions 0, s, 2s, ... while start + patch < extent, plus a final
/// clamped position extent - patch when the last regular window stops short
/// of the edge. The stride may not exceed the patch (coverage would break).
std::vector<int> axis_positions(int extent, int patch, int stride);

TilePlan plan(int n_rows, int n_cols, int patch_h, int patch_w, int stride_v, int stride_h);

/// Copy a window out of a grid, shifting the GeoTransform accordingly.
Grid2D extract(const Grid2D& g, const Window& w);

/// Per-cell mean of valid patch contributions, accumulated in plan order
/// via (sum, count) pairs; a cell with no valid contribution stays invalid.
/// The result is a pure function of (plan, patches) so the order in which
/// patches were *computed* cannot affect it.
Grid2D stitch_average(const TilePlan& plan, const std::vector<Grid2D>& patches,
                      const GeoTransform& target_geo);

} // namespace lstsr
