#include "lstsr/tiler.hpp"

#include <string>

namespace lstsr {

std::vector<int> axis_positions(int extent, int patch, int stride) {
    if (patch < 1 || extent < 1) throw InvalidParams("axis_positions: extent and patch must be positive");
    if (patch > extent) {
        throw PatchTooLarge("patch " + std::to_string(patch) + " exceeds extent " +
                            std::to_string(extent));
    }
    if (stride < 1 || stride > patch) {
        throw InvalidParams("stride " + std::to_string(stride) + " must lie in [1, patch]");
    }
    std::vector<int> pos;
    for (int start = 0; start + patch < extent; start += stride) pos.push_back(start);
    const int last = extent - patch;
    if (pos.empty() || pos.back() != last) pos.push_back(last);
    return pos;
}

TilePlan plan(int n_rows, int n_cols, int patch_h, int patch_w, int stride_v, int stride_h) {
    TilePlan out;
    out.patch_h = patch_h;
    out.patch_w = patch_w;
    out.stride_v = stride_v;
    out.stride_h = stride_h;
    const std::vector<int> rows = axis_positions(n_rows, patch_h, stride_v);
    const std::vector<int> cols = axis_positions(n_cols, patch_w, stride_h);
    out.windows.reserve(rows.size() * cols.size());
    for (int r : rows) {
        for (int c : cols) {
            out.windows.push_back(Window{r, c, patch_h, patch_w});
        }
    }
    return out;
}

Grid2D extract(const Grid2D& g, const Window& w) {
    if (w.height < 1 || w.width < 1 || w.row0 < 0 || w.col0 < 0 ||
        w.row0 + w.height > g.n_rows() || w.col0 + w.width > g.n_cols()) {
        throw OutOfBounds("extract: window [" + std::to_string(w.row0) + ", " +
                          std::to_string(w.col0) + ", " + std::to_string(w.height) + ", " +
                          std::to_string(w.width) + "] outside raster " +
                          std::to_string(g.n_rows()) + "x" + std::to_string(g.n_cols()));
    }
    Grid2D out(g.geo.shifted(w.row0, w.col0, w.height, w.width), g.units);
    for (int r = 0; r < w.height; ++r) {
        const std::size_t src = g.index(w.row0 + r, w.col0);
        const std::size_t dst = out.index(r, 0);
        std::copy_n(g.values.begin() + src, w.width, out.values.begin() + dst);
        std::copy_n(g.valid.begin() + src, w.width, out.valid.begin() + dst);
    }
    return out;
}

Grid2D stitch_average(const TilePlan& plan, const std::vector<Grid2D>& patches,
                      const GeoTransform& target_geo) {
    target_geo.validate();
    if (patches.size() != plan.windows.size()) {
        throw PlanMismatch("stitch_average: " + std::to_string(patches.size()) +
                           " patches for " + std::to_string(plan.windows.size()) + " windows");
    }
    // extended-precision accumulators keep the mean of k identical
    // contributions exact, so reconstruction is bit-faithful
    std::vector<long double> sum(target_geo.cell_count(), 0.0L);
    std::vector<std::uint32_t> count(target_geo.cell_count(), 0);

    for (std::size_t i = 0; i < patches.size(); ++i) {
        const Window& w = plan.windows[i];
        const Grid2D& patch = patches[i];
        if (patch.n_rows() != w.height || patch.n_cols() != w.width) {
            throw PlanMismatch("stitch_average: patch " + std::to_string(i) +
                               " shape does not match its window");
        }
        if (w.row0 + w.height > target_geo.n_rows || w.col0 + w.width > target_geo.n_cols) {
            throw PlanMismatch("stitch_average: window " + std::to_string(i) +
                               " outside target raster");
        }
        for (int r = 0; r < w.height; ++r) {
            const std::size_t src = patch.index(r, 0);
            const std::size_t dst =
                static_cast<std::size_t>(w.row0 + r) * target_geo.n_cols + w.col0;
            for (int c = 0; c < w.width; ++c) {
                if (!patch.valid[src + c]) continue;
                sum[dst + c] += patch.values[src + c];
                count[dst + c] += 1;
            }
        }
    }

    Grid2D out(target_geo, patches.empty() ? std::string{} : patches.front().units);
    for (std::size_t i = 0; i < sum.size(); ++i) {
        if (count[i] > 0) {
            out.values[i] = static_cast<double>(sum[i] / count[i]);
            out.valid[i] = 1;
        }
    }
    return out;
}

} // namespace lstsr
