// lstsr: guided super-resolution of coarse gridded temperature fields.
//
// Subcommands: downscale, validate, synth, coarsen, pack, unpack, tileplan.
// Exit codes: 0 success, 1 partial scene failures, 2 configuration or fatal
// errors.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "lstsr/codec.hpp"
#include "lstsr/metrics.hpp"
#include "lstsr/pipeline.hpp"
#include "lstsr/synth.hpp"
#include "lstsr/tiler.hpp"

namespace fs = std::filesystem;
using namespace lstsr;

namespace {

Grid2D read_text_grid(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open text grid: " + path.string());
    std::string header;
    std::size_t line_no = 0;
    while (std::getline(in, header)) {
        ++line_no;
        if (!header.empty() && header[0] != '#') break;
    }
    std::istringstream hs(header);
    GeoTransform geo;
    if (!(hs >> geo.n_rows >> geo.n_cols >> geo.lon_min >> geo.lat_max >> geo.cell_size)) {
        throw ParseError("text grid header must be 'rows cols lon_min lat_max cell_size'",
                         line_no);
    }
    geo.validate();
    Grid2D g(geo);
    for (int r = 0; r < geo.n_rows; ++r) {
        std::string row;
        if (!std::getline(in, row)) {
            throw ParseError("text grid: missing row " + std::to_string(r), line_no + 1 + r);
        }
        std::istringstream rs(row);
        for (int c = 0; c < geo.n_cols; ++c) {
            std::string tok;
            if (!(rs >> tok)) {
                throw ParseError("text grid: row " + std::to_string(r) + " has fewer than " +
                                     std::to_string(geo.n_cols) + " values",
                                 line_no + 1 + r);
            }
            if (tok == "nan" || tok == "NaN" || tok == "NAN") continue;
            try {
                g.set(r, c, std::stod(tok));
            } catch (const std::exception&) {
                throw ParseError("text grid: bad value '" + tok + "'", line_no + 1 + r);
            }
        }
    }
    return g;
}

void write_text_grid(const fs::path& path, const Grid2D& g) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write text grid: " + path.string());
    out.precision(17);
    out << g.n_rows() << " " << g.n_cols() << " " << g.geo.lon_min << " " << g.geo.lat_max << " "
        << g.geo.cell_size << "\n";
    for (int r = 0; r < g.n_rows(); ++r) {
        for (int c = 0; c < g.n_cols(); ++c) {
            if (c) out << " ";
            if (g.is_valid(r, c)) out << g.value(r, c);
            else out << "nan";
        }
        out << "\n";
    }
}

void print_header(std::ostream& out, const PackedHeader& h) {
    out << "variable_name = " << h.variable_name << "\n"
        << "long_name = " << h.long_name << "\n"
        << "units = " << h.units << "\n"
        << "scale = " << h.scale << "\n"
        << "offset = " << h.offset << "\n"
        << "valid_range = [" << h.valid_min_physical << ", " << h.valid_max_physical << "] "
        << h.units << "\n"
        << "fill_code = " << h.fill_code << "\n"
        << "shape = " << h.geo.n_rows << " x " << h.geo.n_cols << "\n"
        << "cell_size = " << h.geo.cell_size << "\n"
        << "origin = (" << h.geo.lon_min << ", " << h.geo.lat_max << ")\n"
        << "timestamp = " << h.timestamp.compact() << "\n"
        << "satellite = " << h.satellite << "\n"
        << "version = " << h.version << "\n"
        << "node = " << to_string(h.node) << "\n";
    for (const auto& sc : h.special_codes) {
        out << "special_code = " << sc.code << " (" << sc.meaning << ")\n";
    }
}

struct HeaderFlags {
    std::string satellite = "SYNTH";
    std::string timestamp = "202001010000";
    std::string node = "DAY";
    std::string version = "v1.0";

    void add_to(CLI::App* cmd) {
        cmd->add_option("--satellite", satellite, "Satellite token for the header");
        cmd->add_option("--timestamp", timestamp, "UTC timestamp YYYYMMDDhhmm");
        cmd->add_option("--node", node, "DAY or NIGHT")->check(CLI::IsMember({"DAY", "NIGHT"}));
        cmd->add_option("--version", version, "Processing version token");
    }

    void apply(PackedHeader& h) const {
        h.satellite = satellite;
        h.timestamp = UtcTime::from_compact(timestamp);
        h.node = node_from_string(node);
        h.version = version;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Guided super-resolution of coarse gridded LST scenes"};
    app.require_subcommand(1);

    // downscale -------------------------------------------------------------
    auto* dn = app.add_subcommand("downscale", "Super-resolve every scene in a directory");
    std::string cfg_path;
    RunConfig flags; // receives CLI values; merged over the config file below
    std::string init_name = "bicubic", gform_name = "exponential";
    std::string input_dir, guide_path, output_dir, coefficient_file;
    dn->add_option("--config", cfg_path, "Configuration file (key = value with sections)");
    dn->add_option("--input-dir", input_dir, "Directory of .npg scenes");
    dn->add_option("--guide", guide_path, "Guide file (landcover, elevation, canopy)");
    dn->add_option("--output-dir", output_dir, "Directory for products and run.log");
    dn->add_option("--factor", flags.factor, "Super-resolution factor");
    dn->add_option("--workers", flags.workers, "Tile worker threads");
    dn->add_option("--coefficient-file", coefficient_file,
                   "Precomputed conductances (c_horizontal / c_vertical)");
    dn->add_flag("--lenient-codec", "Invalidate undeclared codes instead of failing");
    dn->add_option("--max-gap-fraction", flags.max_gap_fraction,
                   "Skip scenes whose invalid fraction exceeds this");
    dn->add_flag("--parallel-scenes", "Parallelize over scenes instead of tiles");
    dn->add_option("--lambda", flags.solver.lambda, "Diffusion step size (0, 0.25]");
    dn->add_option("--iterations", flags.solver.n_iterations, "Max diffusion iterations");
    dn->add_option("--adjust-every", flags.solver.adjust_every, "Adjustment cadence");
    dn->add_option("--tolerance", flags.solver.tolerance, "Early-stop threshold (scaled units)");
    dn->add_option("--init", init_name, "bicubic or replicate")
        ->check(CLI::IsMember({"bicubic", "replicate"}));
    dn->add_option("--kappa", flags.guide_params.kappa, "Edge-stopping scale");
    dn->add_option("--w-landcover", flags.guide_params.w_landcover, "Land cover weight");
    dn->add_option("--w-elevation", flags.guide_params.w_elevation, "Elevation weight");
    dn->add_option("--w-canopy", flags.guide_params.w_canopy, "Canopy weight");
    dn->add_option("--g-form", gform_name, "exponential or rational")
        ->check(CLI::IsMember({"exponential", "rational"}));
    dn->add_option("--patch-h", flags.tile.patch_h, "Tile height (HR cells)");
    dn->add_option("--patch-w", flags.tile.patch_w, "Tile width (HR cells)");
    dn->add_option("--stride-v", flags.tile.stride_v, "Vertical stride (HR cells)");
    dn->add_option("--stride-h", flags.tile.stride_h, "Horizontal stride (HR cells)");

    // validate --------------------------------------------------------------
    auto* va = app.add_subcommand("validate", "Station match-up validation of products");
    ValidateOptions vopt;
    std::string v_products, v_stations, v_matchups, v_out;
    va->add_option("--product-dir", v_products, "Directory of product .npg files")->required();
    va->add_option("--stations", v_stations, "Station table (TSV)")->required();
    va->add_option("--matchups", v_matchups, "Match-up rows: station file reference_K")
        ->required();
    va->add_option("--out-dir", v_out, "Report output directory")->required();
    va->add_option("--bin-width", vopt.bin_width, "Histogram bin width (K)");

    // synth -----------------------------------------------------------------
    auto* sy = app.add_subcommand("synth", "Generate a synthetic scene with ground truth");
    SynthParams sp;
    int sy_factor = 5;
    std::string sy_out = ".";
    HeaderFlags sy_hdr;
    sy->add_option("--seed", sp.seed, "RNG seed");
    sy->add_option("--rows", sp.n_rows, "HR rows");
    sy->add_option("--cols", sp.n_cols, "HR cols");
    sy->add_option("--factor", sy_factor, "SR factor");
    sy->add_option("--classes", sp.n_classes, "Land cover classes");
    sy->add_option("--lapse-rate", sp.lapse_rate, "K per km");
    sy->add_option("--class-offset-range", sp.class_offset_range, "K spread across classes");
    sy->add_option("--noise-sigma", sp.noise_sigma, "Observation noise (K)");
    sy->add_option("--roughness", sp.terrain_roughness, "Terrain relief scale");
    sy->add_option("--cloud-fraction", sp.cloud_fraction, "Expected clouded block fraction");
    sy->add_option("--out-dir", sy_out, "Output directory");
    sy_hdr.add_to(sy);

    // coarsen ---------------------------------------------------------------
    auto* co = app.add_subcommand("coarsen", "NaN-aware block-mean a packed grid");
    std::string co_in, co_out, co_var;
    int co_factor = 5;
    co->add_option("input", co_in, "Input .npg")->required();
    co->add_option("output", co_out, "Output .npg")->required();
    co->add_option("--factor", co_factor, "Coarsening factor");
    co->add_option("--variable", co_var, "Variable to coarsen (default: first block)");

    // pack ------------------------------------------------------------------
    auto* pa = app.add_subcommand("pack", "Quantize a text grid into a .npg file");
    std::string pa_in, pa_out, pa_profile = "lst";
    HeaderFlags pa_hdr;
    pa->add_option("input", pa_in, "Text grid (rows cols lon_min lat_max cell_size; nan = invalid)")
        ->required();
    pa->add_option("output", pa_out, "Output .npg")->required();
    pa->add_option("--profile", pa_profile,
                   "Variable profile: lst, lst_gac, scanline_time, satzen, sunzen, test_mae, "
                   "r2, landcover, elevation, canopy");
    pa_hdr.add_to(pa);

    // unpack ----------------------------------------------------------------
    auto* un = app.add_subcommand("unpack", "Decode a .npg file");
    std::string un_in, un_out, un_var;
    bool un_lenient = false;
    un->add_option("input", un_in, "Input .npg")->required();
    un->add_option("--output", un_out, "Write the decoded grid as text");
    un->add_option("--variable", un_var, "Variable to decode (default: first block)");
    un->add_flag("--lenient", un_lenient, "Invalidate undeclared codes instead of failing");

    // tileplan ----------------------------------------------------------------
    auto* tp = app.add_subcommand("tileplan", "Print the deterministic patch plan");
    int tp_rows = 0, tp_cols = 0, tp_ph = 0, tp_pw = 0, tp_sv = 0, tp_sh = 0;
    tp->add_option("rows", tp_rows)->required();
    tp->add_option("cols", tp_cols)->required();
    tp->add_option("patch_h", tp_ph)->required();
    tp->add_option("patch_w", tp_pw)->required();
    tp->add_option("stride_v", tp_sv)->required();
    tp->add_option("stride_h", tp_sh)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (dn->parsed()) {
            RunConfig cfg;
            if (!cfg_path.empty()) cfg = load_config(cfg_path);
            auto set = [&](const char* name) { return dn->count(name) > 0; };
            if (set("--input-dir")) cfg.input_dir = input_dir;
            if (set("--guide")) cfg.guide_path = guide_path;
            if (set("--output-dir")) cfg.output_dir = output_dir;
            if (set("--factor")) cfg.factor = flags.factor;
            if (set("--workers")) cfg.workers = flags.workers;
            if (set("--coefficient-file")) cfg.coefficient_file = coefficient_file;
            if (set("--lenient-codec")) cfg.strict_codec = false;
            if (set("--max-gap-fraction")) cfg.max_gap_fraction = flags.max_gap_fraction;
            if (set("--parallel-scenes")) cfg.parallel_scenes = true;
            if (set("--lambda")) cfg.solver.lambda = flags.solver.lambda;
            if (set("--iterations")) cfg.solver.n_iterations = flags.solver.n_iterations;
            if (set("--adjust-every")) cfg.solver.adjust_every = flags.solver.adjust_every;
            if (set("--tolerance")) cfg.solver.tolerance = flags.solver.tolerance;
            if (set("--init")) {
                cfg.solver.init =
                    init_name == "bicubic" ? InitScheme::BICUBIC : InitScheme::REPLICATE;
            }
            if (set("--kappa")) cfg.guide_params.kappa = flags.guide_params.kappa;
            if (set("--w-landcover")) cfg.guide_params.w_landcover = flags.guide_params.w_landcover;
            if (set("--w-elevation")) cfg.guide_params.w_elevation = flags.guide_params.w_elevation;
            if (set("--w-canopy")) cfg.guide_params.w_canopy = flags.guide_params.w_canopy;
            if (set("--g-form")) {
                cfg.guide_params.g_form = gform_name == "exponential"
                                              ? EdgeStoppingForm::EXPONENTIAL
                                              : EdgeStoppingForm::RATIONAL;
            }
            if (set("--patch-h")) cfg.tile.patch_h = flags.tile.patch_h;
            if (set("--patch-w")) cfg.tile.patch_w = flags.tile.patch_w;
            if (set("--stride-v")) cfg.tile.stride_v = flags.tile.stride_v;
            if (set("--stride-h")) cfg.tile.stride_h = flags.tile.stride_h;
            cfg.solver.factor = cfg.factor;
            return cmd_downscale(cfg, std::cout);
        }

        if (va->parsed()) {
            vopt.product_dir = v_products;
            vopt.station_table = v_stations;
            vopt.matchup_file = v_matchups;
            vopt.out_dir = v_out;
            return cmd_validate(vopt, std::cout);
        }

        if (sy->parsed()) {
            const SynthScene scene = generate(sp, sy_factor);
            PackedHeader stamp; // reuse the flag parsing
            sy_hdr.apply(stamp);
            const SceneFiles files = write_scene_files(sy_out, scene, stamp.timestamp,
                                                       stamp.satellite, stamp.node, stamp.version);
            std::cout << "scene = " << files.scene.string() << "\n"
                      << "guide = " << files.guide.string() << "\n"
                      << "truth = " << files.truth.string() << "\n";
            return 0;
        }

        if (co->parsed()) {
            const auto blocks = read_npg(co_in);
            std::size_t idx = 0;
            if (!co_var.empty()) {
                const auto found = find_variable(blocks, co_var);
                if (!found) throw CorruptData("no variable '" + co_var + "' in " + co_in);
                idx = *found;
            }
            const Grid2D coarse = coarsen_nan_aware(unpack(blocks[idx]), co_factor);
            PackedHeader h = blocks[idx].header;
            h.geo = coarse.geo;
            write_npg(co_out, pack(coarse, h));
            std::cout << "wrote " << co_out << " (" << coarse.n_rows() << " x " << coarse.n_cols()
                      << ")\n";
            return 0;
        }

        if (pa->parsed()) {
            const auto profile = profiles::by_name(pa_profile);
            if (!profile) throw InvalidParams("unknown profile: " + pa_profile);
            const Grid2D g = read_text_grid(pa_in);
            PackedHeader h = *profile;
            h.geo = g.geo;
            pa_hdr.apply(h);
            write_npg(pa_out, pack(g, h));
            std::cout << "wrote " << pa_out << "\n";
            return 0;
        }

        if (un->parsed()) {
            const auto blocks = read_npg(un_in);
            std::size_t idx = 0;
            if (!un_var.empty()) {
                const auto found = find_variable(blocks, un_var);
                if (!found) throw CorruptData("no variable '" + un_var + "' in " + un_in);
                idx = *found;
            }
            std::size_t undeclared = 0;
            const Grid2D g = unpack(blocks[idx],
                                    un_lenient ? CodecMode::Lenient : CodecMode::Strict,
                                    &undeclared);
            print_header(std::cout, blocks[idx].header);
            std::cout << "valid_cells = " << g.valid_count() << " / " << g.size() << "\n";
            if (undeclared > 0) std::cout << "undeclared_codes = " << undeclared << "\n";
            if (g.valid_count() > 0) {
                const auto [lo, hi] = g.valid_min_max();
                std::cout << "value_range = [" << lo << ", " << hi << "]\n";
            }
            if (!un_out.empty()) {
                write_text_grid(un_out, g);
                std::cout << "wrote " << un_out << "\n";
            }
            return 0;
        }

        if (tp->parsed()) {
            const TilePlan p = plan(tp_rows, tp_cols, tp_ph, tp_pw, tp_sv, tp_sh);
            for (const auto& w : p.windows) {
                std::cout << "window row0=" << w.row0 << " col0=" << w.col0
                          << " height=" << w.height << " width=" << w.width << "\n";
            }
            std::cout << p.windows.size() << " windows\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
