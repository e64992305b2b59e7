#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lstsr/codec.hpp"
#include "lstsr/grid.hpp"

namespace lstsr {

/// Categorical raster (LCCS land cover codes). Codes are nominal labels;
/// arithmetic on them is meaningless.
struct ClassGrid {
    GeoTransform geo;
    std::vector<std::int32_t> codes;
    std::vector<std::uint8_t> valid;

    ClassGrid() = default;
    explicit ClassGrid(const GeoTransform& g)
        : geo(g), codes(g.cell_count(), 0), valid(g.cell_count(), 0) {}

    std::size_t index(int r, int c) const {
        return static_cast<std::size_t>(r) * geo.n_cols + c;
    }
    std::int32_t code(int r, int c) const { return codes[index(r, c)]; }
    bool is_valid(int r, int c) const { return valid[index(r, c)] != 0; }
};

/// The three aligned high-resolution guide channels and their joint mask
/// (intersection of per-channel validity). Channels are stored unmodified.
struct GuideStack {
    GeoTransform geo;
    ClassGrid landcover;
    Grid2D elevation;
    Grid2D canopy;
    std::vector<std::uint8_t> valid;

    std::size_t joint_valid_count() const;
};

enum class EdgeStoppingForm { EXPONENTIAL, RATIONAL };

/// Free parameters of the closed-form conductance map. Channel weights are
/// normalized to sum 1 before use.
struct GuideParams {
    double kappa = 0.1;
    double w_landcover = 1.0 / 3.0;
    double w_elevation = 1.0 / 3.0;
    double w_canopy = 1.0 / 3.0;
    EdgeStoppingForm g_form = EdgeStoppingForm::EXPONENTIAL;

    void validate() const;
};

/// Per-edge diffusion conductances on the high-resolution lattice.
/// horizontal(r, c) couples (r, c) with (r, c+1); vertical(r, c) couples
/// (r, c) with (r+1, c). Every entry lies in [0, 1]; edges touching an
/// invalid guide cell carry 0.
struct CoefficientField {
    GeoTransform geo;
    std::vector<double> horizontal; // n_rows * (n_cols - 1)
    std::vector<double> vertical;   // (n_rows - 1) * n_cols

    CoefficientField() = default;
    explicit CoefficientField(const GeoTransform& g);
    static CoefficientField uniform(const GeoTransform& g, double c);

    double h(int r, int c) const {
        return horizontal[static_cast<std::size_t>(r) * (geo.n_cols - 1) + c];
    }
    double v(int r, int c) const {
        return vertical[static_cast<std::size_t>(r) * geo.n_cols + c];
    }
    double& h(int r, int c) {
        return horizontal[static_cast<std::size_t>(r) * (geo.n_cols - 1) + c];
    }
    double& v(int r, int c) {
        return vertical[static_cast<std::size_t>(r) * geo.n_cols + c];
    }

    /// Edges interior to the window; cross-window edges are dropped.
    CoefficientField crop(int row0, int col0, int height, int width) const;
};

/// Most frequent class per factor x factor block, ignoring invalid cells;
/// ties break to the smallest class code; all-invalid blocks stay invalid.
ClassGrid mode_downsample_landcover(const ClassGrid& lc, int factor);

/// Intersect the three channels into a stack. Channels must share the
/// GeoTransform exactly; an empty joint mask is allowed (normalize_guide
/// rejects it later).
GuideStack build_guide(const ClassGrid& landcover, const Grid2D& elevation, const Grid2D& canopy);

/// Min-max scale elevation and canopy to [0, 1] over jointly valid cells;
/// land cover stays categorical. Throws EmptyGuide on an empty joint mask.
GuideStack normalize_guide(const GuideStack& stack);

/// Edge dissimilarity d = w_lc * [class differs] + w_el * |d elevation| +
/// w_ca * |d canopy| (weights normalized to sum 1), mapped through the
/// edge-stopping function: EXPONENTIAL exp(-(d/kappa)^2) or RATIONAL
/// 1 / (1 + (d/kappa)^2). Expects a normalized stack.
CoefficientField edge_coefficients(const GuideStack& stack, const GuideParams& p);

/// Write as two NPG blocks named c_horizontal / c_vertical.
void export_coefficients(const std::filesystem::path& path, const CoefficientField& field);

struct CoefficientImport {
    CoefficientField field;
    std::size_t clamped = 0; // values outside [0, 1] clamped on import
};

/// Read a coefficient file and validate it against the target
/// high-resolution geometry. Values are clamped to [0, 1] (counted).
CoefficientImport import_coefficients(const std::filesystem::path& path,
                                      const GeoTransform& target_geo);

} // namespace lstsr
