#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <sstream>

#include "lstsr/codec.hpp"
#include "lstsr/grid.hpp"
#include "lstsr/guide.hpp"
#include "lstsr/metrics.hpp"
#include "lstsr/pipeline.hpp"
#include "lstsr/sr_core.hpp"
#include "lstsr/synth.hpp"
#include "lstsr/tiler.hpp"

namespace py = pybind11;
using namespace lstsr;

namespace {

py::array_t<double> to_numpy(const std::vector<double>& data, int rows, int cols) {
    py::array_t<double> arr({rows, cols});
    std::memcpy(arr.mutable_data(), data.data(), data.size() * sizeof(double));
    return arr;
}

py::array_t<bool> mask_to_numpy(const std::vector<std::uint8_t>& mask, int rows, int cols) {
    py::array_t<bool> arr({rows, cols});
    auto* out = arr.mutable_data();
    for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] != 0;
    return arr;
}

Grid2D grid_from_numpy(const GeoTransform& geo, py::array_t<double, py::array::c_style | py::array::forcecast> values,
                       py::object valid, const std::string& units) {
    if (values.ndim() != 2 || values.shape(0) != geo.n_rows || values.shape(1) != geo.n_cols) {
        throw ShapeMismatch("values array must be (n_rows, n_cols)");
    }
    Grid2D g(geo, units);
    std::memcpy(g.values.data(), values.data(), g.size() * sizeof(double));
    if (valid.is_none()) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            g.valid[i] = std::isfinite(g.values[i]) ? 1 : 0;
        }
    } else {
        auto v = py::cast<py::array_t<bool, py::array::c_style | py::array::forcecast>>(valid);
        if (v.ndim() != 2 || v.shape(0) != geo.n_rows || v.shape(1) != geo.n_cols) {
            throw ShapeMismatch("valid array must be (n_rows, n_cols)");
        }
        const bool* data = v.data();
        for (std::size_t i = 0; i < g.size(); ++i) g.valid[i] = data[i] ? 1 : 0;
    }
    return g;
}

std::vector<std::uint8_t> mask_from_numpy(py::array_t<bool, py::array::c_style | py::array::forcecast> m) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(m.size()));
    const bool* data = m.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = data[i] ? 1 : 0;
    return out;
}

} // namespace

PYBIND11_MODULE(_lstsr, m) {
    m.doc() = "Guide-driven anisotropic-diffusion super-resolution of gridded LST";

    py::register_exception<Error>(m, "LstsrError", PyExc_RuntimeError);

    py::class_<GeoTransform>(m, "GeoTransform")
        .def(py::init([](double lon_min, double lat_max, double cell_size, int n_rows, int n_cols) {
                 GeoTransform g{lon_min, lat_max, cell_size, n_rows, n_cols};
                 g.validate();
                 return g;
             }),
             py::arg("lon_min"), py::arg("lat_max"), py::arg("cell_size"), py::arg("n_rows"),
             py::arg("n_cols"))
        .def_readonly("lon_min", &GeoTransform::lon_min)
        .def_readonly("lat_max", &GeoTransform::lat_max)
        .def_readonly("cell_size", &GeoTransform::cell_size)
        .def_readonly("n_rows", &GeoTransform::n_rows)
        .def_readonly("n_cols", &GeoTransform::n_cols)
        .def("coarsened", &GeoTransform::coarsened)
        .def("refined", &GeoTransform::refined)
        .def("approx_equal", &GeoTransform::approx_equal)
        .def_static("pan_arctic", &GeoTransform::pan_arctic)
        .def("__repr__", [](const GeoTransform& g) {
            std::ostringstream os;
            os << "GeoTransform(lon_min=" << g.lon_min << ", lat_max=" << g.lat_max
               << ", cell_size=" << g.cell_size << ", n_rows=" << g.n_rows
               << ", n_cols=" << g.n_cols << ")";
            return os.str();
        });

    py::class_<Grid2D>(m, "Grid2D")
        .def(py::init(&grid_from_numpy), py::arg("geo"), py::arg("values"),
             py::arg("valid") = py::none(), py::arg("units") = "")
        .def_readonly("geo", &Grid2D::geo)
        .def_readwrite("units", &Grid2D::units)
        .def_property_readonly(
            "values", [](const Grid2D& g) { return to_numpy(g.values, g.n_rows(), g.n_cols()); })
        .def_property_readonly(
            "valid", [](const Grid2D& g) { return mask_to_numpy(g.valid, g.n_rows(), g.n_cols()); })
        .def("valid_count", &Grid2D::valid_count)
        .def_static("constant", &Grid2D::constant, py::arg("geo"), py::arg("value"),
                    py::arg("units") = "");

    py::class_<ScaleParams>(m, "ScaleParams")
        .def(py::init<double, double>(), py::arg("lo"), py::arg("hi"))
        .def_readonly("lo", &ScaleParams::lo)
        .def_readonly("hi", &ScaleParams::hi);

    m.def("coarsen_nan_aware", &coarsen_nan_aware, py::arg("grid"), py::arg("factor"));
    m.def("upsample_bicubic", &upsample_bicubic, py::arg("grid"), py::arg("factor"));
    m.def("minmax_scale", &minmax_scale, py::arg("grid"), py::arg("params"));
    m.def("minmax_unscale", &minmax_unscale, py::arg("grid"), py::arg("params"));
    m.def(
        "apply_mask",
        [](const Grid2D& g, py::array_t<bool, py::array::c_style | py::array::forcecast> mask) {
            return apply_mask(g, mask_from_numpy(mask));
        },
        py::arg("grid"), py::arg("mask"));
    m.def("replicate_nearest", &replicate_nearest, py::arg("grid"), py::arg("factor"));

    // codec ------------------------------------------------------------------
    py::enum_<Node>(m, "Node").value("DAY", Node::DAY).value("NIGHT", Node::NIGHT);

    py::class_<UtcTime>(m, "UtcTime")
        .def(py::init([](int year, int month, int day, int hour, int minute) {
                 return UtcTime{year, month, day, hour, minute};
             }),
             py::arg("year"), py::arg("month"), py::arg("day"), py::arg("hour") = 0,
             py::arg("minute") = 0)
        .def_readonly("year", &UtcTime::year)
        .def_readonly("month", &UtcTime::month)
        .def_readonly("day", &UtcTime::day)
        .def_readonly("hour", &UtcTime::hour)
        .def_readonly("minute", &UtcTime::minute)
        .def("compact", &UtcTime::compact)
        .def_static("from_compact", &UtcTime::from_compact);

    py::class_<PackedHeader>(m, "PackedHeader")
        .def_readwrite("variable_name", &PackedHeader::variable_name)
        .def_readwrite("long_name", &PackedHeader::long_name)
        .def_readwrite("units", &PackedHeader::units)
        .def_readwrite("scale", &PackedHeader::scale)
        .def_readwrite("offset", &PackedHeader::offset)
        .def_readwrite("valid_min_physical", &PackedHeader::valid_min_physical)
        .def_readwrite("valid_max_physical", &PackedHeader::valid_max_physical)
        .def_readwrite("fill_code", &PackedHeader::fill_code)
        .def_readwrite("geo", &PackedHeader::geo)
        .def_readwrite("timestamp", &PackedHeader::timestamp)
        .def_readwrite("satellite", &PackedHeader::satellite)
        .def_readwrite("version", &PackedHeader::version)
        .def_readwrite("node", &PackedHeader::node);

    py::class_<PackedGrid>(m, "PackedGrid")
        .def_readonly("header", &PackedGrid::header)
        .def_property_readonly("data", [](const PackedGrid& p) {
            py::array_t<std::int16_t> arr({p.header.geo.n_rows, p.header.geo.n_cols});
            std::memcpy(arr.mutable_data(), p.data.data(), p.data.size() * sizeof(std::int16_t));
            return arr;
        });

    m.def("profile", [](const std::string& name) {
        const auto p = profiles::by_name(name);
        if (!p) throw InvalidParams("unknown profile: " + name);
        return *p;
    });
    m.def("pack", &pack, py::arg("grid"), py::arg("header"));
    m.def(
        "unpack",
        [](const PackedGrid& p, bool strict) {
            return unpack(p, strict ? CodecMode::Strict : CodecMode::Lenient);
        },
        py::arg("packed"), py::arg("strict") = true);
    m.def("write_npg",
          py::overload_cast<const std::filesystem::path&, const std::vector<PackedGrid>&>(
              &write_npg),
          py::arg("path"), py::arg("blocks"));
    m.def("read_npg", &read_npg, py::arg("path"));
    m.def("normalize_satellite", &normalize_satellite);
    m.def("format_filename", &format_filename);
    m.def("parse_filename", [](const std::string& name) {
        const FilenameFields f = parse_filename(name);
        return py::make_tuple(f.satellite, f.timestamp, f.node, f.version);
    });

    // guide ------------------------------------------------------------------
    py::class_<ClassGrid>(m, "ClassGrid")
        .def(py::init([](const GeoTransform& geo,
                         py::array_t<std::int32_t, py::array::c_style | py::array::forcecast> codes,
                         py::object valid) {
                 if (codes.ndim() != 2 || codes.shape(0) != geo.n_rows ||
                     codes.shape(1) != geo.n_cols) {
                     throw ShapeMismatch("codes array must be (n_rows, n_cols)");
                 }
                 ClassGrid g(geo);
                 std::memcpy(g.codes.data(), codes.data(), g.codes.size() * sizeof(std::int32_t));
                 if (valid.is_none()) {
                     std::fill(g.valid.begin(), g.valid.end(), std::uint8_t{1});
                 } else {
                     auto v = py::cast<py::array_t<bool, py::array::c_style | py::array::forcecast>>(valid);
                     const bool* data = v.data();
                     for (std::size_t i = 0; i < g.valid.size(); ++i) g.valid[i] = data[i] ? 1 : 0;
                 }
                 return g;
             }),
             py::arg("geo"), py::arg("codes"), py::arg("valid") = py::none())
        .def_readonly("geo", &ClassGrid::geo)
        .def_property_readonly("codes",
                               [](const ClassGrid& g) {
                                   py::array_t<std::int32_t> arr({g.geo.n_rows, g.geo.n_cols});
                                   std::memcpy(arr.mutable_data(), g.codes.data(),
                                               g.codes.size() * sizeof(std::int32_t));
                                   return arr;
                               })
        .def_property_readonly("valid", [](const ClassGrid& g) {
            return mask_to_numpy(g.valid, g.geo.n_rows, g.geo.n_cols);
        });

    py::enum_<EdgeStoppingForm>(m, "EdgeStoppingForm")
        .value("EXPONENTIAL", EdgeStoppingForm::EXPONENTIAL)
        .value("RATIONAL", EdgeStoppingForm::RATIONAL);

    py::class_<GuideParams>(m, "GuideParams")
        .def(py::init<>())
        .def_readwrite("kappa", &GuideParams::kappa)
        .def_readwrite("w_landcover", &GuideParams::w_landcover)
        .def_readwrite("w_elevation", &GuideParams::w_elevation)
        .def_readwrite("w_canopy", &GuideParams::w_canopy)
        .def_readwrite("g_form", &GuideParams::g_form);

    py::class_<GuideStack>(m, "GuideStack")
        .def_readonly("geo", &GuideStack::geo)
        .def_readonly("landcover", &GuideStack::landcover)
        .def_readonly("elevation", &GuideStack::elevation)
        .def_readonly("canopy", &GuideStack::canopy)
        .def_property_readonly("valid",
                               [](const GuideStack& s) {
                                   return mask_to_numpy(s.valid, s.geo.n_rows, s.geo.n_cols);
                               })
        .def("joint_valid_count", &GuideStack::joint_valid_count);

    py::class_<CoefficientField>(m, "CoefficientField")
        .def_readonly("geo", &CoefficientField::geo)
        .def_property_readonly("horizontal",
                               [](const CoefficientField& f) {
                                   return to_numpy(f.horizontal, f.geo.n_rows, f.geo.n_cols - 1);
                               })
        .def_property_readonly("vertical",
                               [](const CoefficientField& f) {
                                   return to_numpy(f.vertical, f.geo.n_rows - 1, f.geo.n_cols);
                               })
        .def_static("uniform", &CoefficientField::uniform, py::arg("geo"), py::arg("c"));

    m.def("mode_downsample_landcover", &mode_downsample_landcover, py::arg("landcover"),
          py::arg("factor"));
    m.def("build_guide", &build_guide, py::arg("landcover"), py::arg("elevation"),
          py::arg("canopy"));
    m.def("normalize_guide", &normalize_guide, py::arg("stack"));
    m.def("edge_coefficients", &edge_coefficients, py::arg("stack"), py::arg("params"));
    m.def("export_coefficients", &export_coefficients, py::arg("path"), py::arg("field"));
    m.def(
        "import_coefficients",
        [](const std::filesystem::path& path, const GeoTransform& target) {
            const CoefficientImport imp = import_coefficients(path, target);
            return py::make_tuple(imp.field, imp.clamped);
        },
        py::arg("path"), py::arg("target_geo"));

    // solver -----------------------------------------------------------------
    py::enum_<InitScheme>(m, "InitScheme")
        .value("BICUBIC", InitScheme::BICUBIC)
        .value("REPLICATE", InitScheme::REPLICATE);

    py::class_<SolverParams>(m, "SolverParams")
        .def(py::init<>())
        .def_readwrite("factor", &SolverParams::factor)
        .def_readwrite("lambda_", &SolverParams::lambda)
        .def_readwrite("n_iterations", &SolverParams::n_iterations)
        .def_readwrite("adjust_every", &SolverParams::adjust_every)
        .def_readwrite("tolerance", &SolverParams::tolerance)
        .def_readwrite("init", &SolverParams::init);

    py::class_<SolveReport>(m, "SolveReport")
        .def_readonly("iterations_run", &SolveReport::iterations_run)
        .def_readonly("final_max_delta", &SolveReport::final_max_delta)
        .def_readonly("consistency_residual", &SolveReport::consistency_residual)
        .def_readonly("wall_time_s", &SolveReport::wall_time_s)
        .def_readonly("empty_blocks", &SolveReport::empty_blocks);

    m.def("diffuse_step", &diffuse_step, py::arg("grid"), py::arg("coefficients"),
          py::arg("lambda_"));
    m.def(
        "adjust_step",
        [](const Grid2D& u, const Grid2D& source, int factor) {
            std::size_t empty = 0;
            Grid2D out = adjust_step(u, source, factor, &empty);
            return py::make_tuple(out, empty);
        },
        py::arg("grid"), py::arg("source"), py::arg("factor"));
    m.def(
        "solve",
        [](const Grid2D& source, const CoefficientField& coeffs, const SolverParams& p) {
            SolveResult res = solve(source, coeffs, p);
            return std::pair<Grid2D, SolveReport>(std::move(res.grid), res.report);
        },
        py::arg("source"), py::arg("coefficients"), py::arg("params"),
        py::call_guard<py::gil_scoped_release>());

    // tiler ------------------------------------------------------------------
    py::class_<Window>(m, "Window")
        .def(py::init([](int row0, int col0, int height, int width) {
                 return Window{row0, col0, height, width};
             }),
             py::arg("row0"), py::arg("col0"), py::arg("height"), py::arg("width"))
        .def_readonly("row0", &Window::row0)
        .def_readonly("col0", &Window::col0)
        .def_readonly("height", &Window::height)
        .def_readonly("width", &Window::width);

    py::class_<TilePlan>(m, "TilePlan")
        .def_readonly("windows", &TilePlan::windows)
        .def_readonly("patch_h", &TilePlan::patch_h)
        .def_readonly("patch_w", &TilePlan::patch_w)
        .def_readonly("stride_v", &TilePlan::stride_v)
        .def_readonly("stride_h", &TilePlan::stride_h);

    m.def("plan", &plan, py::arg("n_rows"), py::arg("n_cols"), py::arg("patch_h"),
          py::arg("patch_w"), py::arg("stride_v"), py::arg("stride_h"));
    m.def("extract", &extract, py::arg("grid"), py::arg("window"));
    m.def("stitch_average", &stitch_average, py::arg("plan"), py::arg("patches"),
          py::arg("target_geo"));

    // metrics ----------------------------------------------------------------
    py::class_<ValidationReport>(m, "ValidationReport")
        .def_readonly("n", &ValidationReport::n)
        .def_readonly("mae", &ValidationReport::mae)
        .def_readonly("rmse", &ValidationReport::rmse)
        .def_readonly("md", &ValidationReport::md)
        .def_readonly("rsd", &ValidationReport::rsd)
        .def_readonly("bias_mean", &ValidationReport::bias_mean)
        .def_readonly("bin_edges", &ValidationReport::bin_edges)
        .def_readonly("counts", &ValidationReport::counts)
        .def("summary_line", &ValidationReport::summary_line);

    py::class_<Station>(m, "Station")
        .def(py::init([](const std::string& id, double lat, double lon) {
                 Station s;
                 s.id = id;
                 s.lat = lat;
                 s.lon = lon;
                 return s;
             }),
             py::arg("id"), py::arg("lat"), py::arg("lon"))
        .def_readwrite("id", &Station::id)
        .def_readwrite("name", &Station::name)
        .def_readwrite("network", &Station::network)
        .def_readwrite("lat", &Station::lat)
        .def_readwrite("lon", &Station::lon)
        .def_readwrite("elevation", &Station::elevation)
        .def_readwrite("lccs", &Station::lccs);

    m.def(
        "compute_report",
        [](const std::vector<double>& reference, const std::vector<double>& estimate,
           double bin_width) {
            PairedSample s;
            s.reference = reference;
            s.estimate = estimate;
            return compute_report(s, bin_width);
        },
        py::arg("reference"), py::arg("estimate"), py::arg("bin_width") = 0.5);
    m.def(
        "matchup",
        [](const Grid2D& g, const Station& s) -> py::object {
            const auto v = matchup(g, s);
            if (!v) return py::none();
            return py::float_(*v);
        },
        py::arg("grid"), py::arg("station"));
    m.def("grid_difference_report", &grid_difference_report, py::arg("a"), py::arg("b"),
          py::arg("bin_width") = 0.5);
    m.def("load_station_table", &load_station_table, py::arg("path"));

    // synth ------------------------------------------------------------------
    py::class_<SynthParams>(m, "SynthParams")
        .def(py::init<>())
        .def_readwrite("seed", &SynthParams::seed)
        .def_readwrite("n_rows", &SynthParams::n_rows)
        .def_readwrite("n_cols", &SynthParams::n_cols)
        .def_readwrite("n_classes", &SynthParams::n_classes)
        .def_readwrite("lapse_rate", &SynthParams::lapse_rate)
        .def_readwrite("class_offset_range", &SynthParams::class_offset_range)
        .def_readwrite("noise_sigma", &SynthParams::noise_sigma)
        .def_readwrite("terrain_roughness", &SynthParams::terrain_roughness)
        .def_readwrite("cloud_fraction", &SynthParams::cloud_fraction);

    m.def(
        "generate",
        [](const SynthParams& p, int factor) {
            SynthScene s = generate(p, factor);
            return py::make_tuple(s.truth, s.guide, s.source);
        },
        py::arg("params"), py::arg("factor") = 5);
    m.def(
        "write_scene_files",
        [](const std::filesystem::path& dir, const SynthParams& p, int factor) {
            const SynthScene s = generate(p, factor);
            const SceneFiles f = write_scene_files(dir, s, UtcTime{2020, 8, 20, 10, 30});
            return py::make_tuple(f.scene, f.guide, f.truth);
        },
        py::arg("out_dir"), py::arg("params"), py::arg("factor") = 5);

    // pipeline ---------------------------------------------------------------
    py::class_<TileGeometry>(m, "TileGeometry")
        .def(py::init<>())
        .def_readwrite("patch_h", &TileGeometry::patch_h)
        .def_readwrite("patch_w", &TileGeometry::patch_w)
        .def_readwrite("stride_v", &TileGeometry::stride_v)
        .def_readwrite("stride_h", &TileGeometry::stride_h);

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("input_dir", &RunConfig::input_dir)
        .def_readwrite("guide_path", &RunConfig::guide_path)
        .def_readwrite("output_dir", &RunConfig::output_dir)
        .def_readwrite("factor", &RunConfig::factor)
        .def_readwrite("solver", &RunConfig::solver)
        .def_readwrite("guide_params", &RunConfig::guide_params)
        .def_readwrite("tile", &RunConfig::tile)
        .def_readwrite("workers", &RunConfig::workers)
        .def_readwrite("coefficient_file", &RunConfig::coefficient_file)
        .def_readwrite("strict_codec", &RunConfig::strict_codec)
        .def_readwrite("max_gap_fraction", &RunConfig::max_gap_fraction)
        .def_readwrite("parallel_scenes", &RunConfig::parallel_scenes);

    m.def(
        "downscale",
        [](const RunConfig& cfg) {
            std::ostringstream log;
            const int status = cmd_downscale(cfg, log);
            return std::pair<int, std::string>(status, log.str());
        },
        py::arg("config"), py::call_guard<py::gil_scoped_release>());
}
