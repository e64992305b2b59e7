#include "lstsr/guide.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace lstsr {

std::size_t GuideStack::joint_valid_count() const {
    std::size_t n = 0;
    for (auto v : valid) n += v != 0;
    return n;
}

void GuideParams::validate() const {
    if (!(kappa > 0.0)) throw InvalidParams("GuideParams: kappa must be positive");
    if (w_landcover < 0.0 || w_elevation < 0.0 || w_canopy < 0.0) {
        throw InvalidParams("GuideParams: channel weights must be non-negative");
    }
    if (!(w_landcover + w_elevation + w_canopy > 0.0)) {
        throw InvalidParams("GuideParams: channel weights must not all be zero");
    }
}

CoefficientField::CoefficientField(const GeoTransform& g)
    : geo(g),
      horizontal(static_cast<std::size_t>(g.n_rows) * (g.n_cols - 1), 0.0),
      vertical(static_cast<std::size_t>(g.n_rows - 1) * g.n_cols, 0.0) {
    g.validate();
}

CoefficientField CoefficientField::uniform(const GeoTransform& g, double c) {
    CoefficientField out(g);
    std::fill(out.horizontal.begin(), out.horizontal.end(), c);
    std::fill(out.vertical.begin(), out.vertical.end(), c);
    return out;
}

CoefficientField CoefficientField::crop(int row0, int col0, int height, int width) const {
    if (row0 < 0 || col0 < 0 || height < 1 || width < 1 || row0 + height > geo.n_rows ||
        col0 + width > geo.n_cols) {
        throw OutOfBounds("CoefficientField::crop: window outside lattice");
    }
    CoefficientField out(geo.shifted(row0, col0, height, width));
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c + 1 < width; ++c) {
            out.h(r, c) = h(row0 + r, col0 + c);
        }
    }
    for (int r = 0; r + 1 < height; ++r) {
        for (int c = 0; c < width; ++c) {
            out.v(r, c) = v(row0 + r, col0 + c);
        }
    }
    return out;
}

ClassGrid mode_downsample_landcover(const ClassGrid& lc, int factor) {
    if (factor < 1) throw InvalidParams("mode_downsample_landcover: factor must be positive");
    if (lc.geo.n_rows % factor != 0 || lc.geo.n_cols % factor != 0) {
        throw DimensionNotDivisible("mode_downsample_landcover: shape not divisible by factor " +
                                    std::to_string(factor));
    }
    ClassGrid out(lc.geo.coarsened(factor));
    std::map<std::int32_t, int> counts;
    for (int R = 0; R < out.geo.n_rows; ++R) {
        for (int C = 0; C < out.geo.n_cols; ++C) {
            counts.clear();
            for (int dr = 0; dr < factor; ++dr) {
                for (int dc = 0; dc < factor; ++dc) {
                    const int r = R * factor + dr;
                    const int c = C * factor + dc;
                    if (lc.is_valid(r, c)) ++counts[lc.code(r, c)];
                }
            }
            if (counts.empty()) continue;
            // map iteration is code-ascending, so ties resolve to the
            // smallest code by taking strict improvements only
            std::int32_t best_code = 0;
            int best_count = 0;
            for (const auto& [code, count] : counts) {
                if (count > best_count) {
                    best_count = count;
                    best_code = code;
                }
            }
            out.codes[out.index(R, C)] = best_code;
            out.valid[out.index(R, C)] = 1;
        }
    }
    return out;
}

GuideStack build_guide(const ClassGrid& landcover, const Grid2D& elevation, const Grid2D& canopy) {
    if (!(landcover.geo == elevation.geo)) {
        throw GeoMismatch("build_guide: elevation geometry differs from land cover");
    }
    if (!(landcover.geo == canopy.geo)) {
        throw GeoMismatch("build_guide: canopy geometry differs from land cover");
    }
    GuideStack stack;
    stack.geo = landcover.geo;
    stack.landcover = landcover;
    stack.elevation = elevation;
    stack.canopy = canopy;
    stack.valid.resize(stack.geo.cell_count());
    for (std::size_t i = 0; i < stack.valid.size(); ++i) {
        stack.valid[i] = (landcover.valid[i] && elevation.valid[i] && canopy.valid[i]) ? 1 : 0;
    }
    return stack;
}

namespace {

ScaleParams joint_min_max(const Grid2D& g, const std::vector<std::uint8_t>& joint) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        if (!joint[i]) continue;
        lo = std::min(lo, g.values[i]);
        hi = std::max(hi, g.values[i]);
    }
    return {lo, hi};
}

} // namespace

GuideStack normalize_guide(const GuideStack& stack) {
    if (stack.joint_valid_count() == 0) {
        throw EmptyGuide("normalize_guide: joint validity mask is empty");
    }
    GuideStack out = stack;
    out.elevation = minmax_scale(stack.elevation, joint_min_max(stack.elevation, stack.valid));
    out.canopy = minmax_scale(stack.canopy, joint_min_max(stack.canopy, stack.valid));
    return out;
}

CoefficientField edge_coefficients(const GuideStack& stack, const GuideParams& p) {
    p.validate();
    const double wsum = p.w_landcover + p.w_elevation + p.w_canopy;
    const double w_lc = p.w_landcover / wsum;
    const double w_el = p.w_elevation / wsum;
    const double w_ca = p.w_canopy / wsum;
    const double inv_kappa = 1.0 / p.kappa;

    auto g_of = [&](double d) {
        const double x = d * inv_kappa;
        if (p.g_form == EdgeStoppingForm::EXPONENTIAL) return std::exp(-x * x);
        return 1.0 / (1.0 + x * x);
    };

    auto conductance = [&](std::size_t a, std::size_t b) {
        if (!stack.valid[a] || !stack.valid[b]) return 0.0;
        double d = 0.0;
        if (stack.landcover.codes[a] != stack.landcover.codes[b]) d += w_lc;
        d += w_el * std::abs(stack.elevation.values[a] - stack.elevation.values[b]);
        d += w_ca * std::abs(stack.canopy.values[a] - stack.canopy.values[b]);
        return g_of(d);
    };

    CoefficientField out(stack.geo);
    const int rows = stack.geo.n_rows;
    const int cols = stack.geo.n_cols;
    for (int r = 0; r < rows; ++r) {
        const std::size_t base = static_cast<std::size_t>(r) * cols;
        for (int c = 0; c + 1 < cols; ++c) {
            out.h(r, c) = conductance(base + c, base + c + 1);
        }
    }
    for (int r = 0; r + 1 < rows; ++r) {
        const std::size_t base = static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) {
            out.v(r, c) = conductance(base + c, base + c + cols);
        }
    }
    return out;
}

namespace {

PackedGrid pack_coefficients(const std::string& name, const GeoTransform& geo,
                             const std::vector<double>& data) {
    PackedHeader h = profiles::coefficient(name);
    h.geo = geo;
    Grid2D g(geo, "1");
    g.values = data;
    std::fill(g.valid.begin(), g.valid.end(), std::uint8_t{1});
    return pack(g, h);
}

} // namespace

void export_coefficients(const std::filesystem::path& path, const CoefficientField& field) {
    const GeoTransform hgeo =
        field.geo.shifted(0, 0, field.geo.n_rows, field.geo.n_cols - 1);
    const GeoTransform vgeo =
        field.geo.shifted(0, 0, field.geo.n_rows - 1, field.geo.n_cols);
    write_npg(path, {pack_coefficients("c_horizontal", hgeo, field.horizontal),
                     pack_coefficients("c_vertical", vgeo, field.vertical)});
}

CoefficientImport import_coefficients(const std::filesystem::path& path,
                                      const GeoTransform& target_geo) {
    target_geo.validate();
    const auto blocks = read_npg(path);
    const auto hi = find_variable(blocks, "c_horizontal");
    const auto vi = find_variable(blocks, "c_vertical");
    if (!hi || !vi) {
        throw CorruptData("coefficient file must contain variables c_horizontal and c_vertical");
    }
    for (const auto idx : {*hi, *vi}) {
        const auto& h = blocks[idx].header;
        if (h.valid_min_physical > 0.0 || h.valid_max_physical < 1.0) {
            throw CorruptData("coefficient variable '" + h.variable_name +
                              "' cannot represent the range [0, 1]");
        }
    }
    const auto& hh = blocks[*hi].header.geo;
    const auto& vv = blocks[*vi].header.geo;
    if (hh.n_rows != target_geo.n_rows || hh.n_cols != target_geo.n_cols - 1 ||
        !hh.approx_equal(target_geo.shifted(0, 0, target_geo.n_rows, target_geo.n_cols - 1))) {
        throw GeoMismatch("c_horizontal geometry " + std::to_string(hh.n_rows) + "x" +
                          std::to_string(hh.n_cols) + " does not match target lattice");
    }
    if (vv.n_rows != target_geo.n_rows - 1 || vv.n_cols != target_geo.n_cols ||
        !vv.approx_equal(target_geo.shifted(0, 0, target_geo.n_rows - 1, target_geo.n_cols))) {
        throw GeoMismatch("c_vertical geometry " + std::to_string(vv.n_rows) + "x" +
                          std::to_string(vv.n_cols) + " does not match target lattice");
    }

    CoefficientImport out;
    out.field = CoefficientField(target_geo);
    auto load = [&out](const PackedGrid& block, std::vector<double>& dst) {
        const Grid2D g = unpack(block);
        for (std::size_t i = 0; i < dst.size(); ++i) {
            double v = g.valid[i] ? g.values[i] : 0.0; // missing edges do not conduct
            if (v < -1e-12 || v > 1.0 + 1e-12) ++out.clamped;
            dst[i] = std::clamp(v, 0.0, 1.0);
        }
    };
    load(blocks[*hi], out.field.horizontal);
    load(blocks[*vi], out.field.vertical);
    return out;
}

} // namespace lstsr
