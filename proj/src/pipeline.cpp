#include "lstsr/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include "lstsr/metrics.hpp"
#include "lstsr/tiler.hpp"

namespace fs = std::filesystem;

namespace lstsr {

void RunConfig::validate() const {
    if (factor < 1) throw InvalidParams("config: factor must be positive");
    solver.validate();
    guide_params.validate();
    if (solver.factor != factor) {
        throw InvalidParams("config: solver factor must equal the run factor");
    }
    if (tile.patch_h < 1 || tile.patch_w < 1 || tile.stride_v < 1 || tile.stride_h < 1) {
        throw InvalidParams("config: tile dimensions must be positive");
    }
    if (tile.patch_h % factor || tile.patch_w % factor) {
        throw InvalidParams("config: patch dimensions must be divisible by the factor so "
                            "block boundaries align across tiles");
    }
    if (tile.stride_v > tile.patch_h || tile.stride_h > tile.patch_w) {
        throw InvalidParams("config: strides must not exceed the patch size");
    }
    if (workers < 1) throw InvalidParams("config: workers must be at least 1");
    if (max_gap_fraction < 0.0 || max_gap_fraction > 1.0) {
        throw InvalidParams("config: max_gap_fraction must lie in [0, 1]");
    }
}

namespace {

bool parse_bool(const std::string& v, const std::string& key, std::size_t line) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParseError("config: key '" + key + "' expects a boolean, got '" + v + "'", line);
}

int parse_int(const std::string& v, const std::string& key, std::size_t line) {
    int out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw ParseError("config: key '" + key + "' expects an integer, got '" + v + "'", line);
    }
    return out;
}

double parse_real(const std::string& v, const std::string& key, std::size_t line) {
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ParseError("config: key '" + key + "' expects a number, got '" + v + "'", line);
    }
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

RunConfig parse_config(std::istream& in, RunConfig base) {
    RunConfig cfg = std::move(base);
    std::string section = "run";
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = t.substr(1, t.size() - 2);
            if (section != "run" && section != "solver" && section != "guide" &&
                section != "tile") {
                throw ParseError("config: unknown section [" + section + "]", line_no);
            }
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config: expected 'key = value', got '" + t + "'", line_no);
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        const std::string full = section + "." + key;

        if (full == "run.input_dir") cfg.input_dir = value;
        else if (full == "run.guide_path") cfg.guide_path = value;
        else if (full == "run.output_dir") cfg.output_dir = value;
        else if (full == "run.factor") { cfg.factor = parse_int(value, full, line_no); cfg.solver.factor = cfg.factor; }
        else if (full == "run.workers") cfg.workers = parse_int(value, full, line_no);
        else if (full == "run.coefficient_file") cfg.coefficient_file = value;
        else if (full == "run.strict_codec") cfg.strict_codec = parse_bool(value, full, line_no);
        else if (full == "run.max_gap_fraction") cfg.max_gap_fraction = parse_real(value, full, line_no);
        else if (full == "run.parallel_scenes") cfg.parallel_scenes = parse_bool(value, full, line_no);
        else if (full == "solver.lambda") cfg.solver.lambda = parse_real(value, full, line_no);
        else if (full == "solver.n_iterations") cfg.solver.n_iterations = parse_int(value, full, line_no);
        else if (full == "solver.adjust_every") cfg.solver.adjust_every = parse_int(value, full, line_no);
        else if (full == "solver.tolerance") cfg.solver.tolerance = parse_real(value, full, line_no);
        else if (full == "solver.init") {
            if (value == "bicubic") cfg.solver.init = InitScheme::BICUBIC;
            else if (value == "replicate") cfg.solver.init = InitScheme::REPLICATE;
            else throw ParseError("config: solver.init must be bicubic or replicate", line_no);
        }
        else if (full == "guide.kappa") cfg.guide_params.kappa = parse_real(value, full, line_no);
        else if (full == "guide.w_landcover") cfg.guide_params.w_landcover = parse_real(value, full, line_no);
        else if (full == "guide.w_elevation") cfg.guide_params.w_elevation = parse_real(value, full, line_no);
        else if (full == "guide.w_canopy") cfg.guide_params.w_canopy = parse_real(value, full, line_no);
        else if (full == "guide.g_form") {
            if (value == "exponential") cfg.guide_params.g_form = EdgeStoppingForm::EXPONENTIAL;
            else if (value == "rational") cfg.guide_params.g_form = EdgeStoppingForm::RATIONAL;
            else throw ParseError("config: guide.g_form must be exponential or rational", line_no);
        }
        else if (full == "tile.patch_h") cfg.tile.patch_h = parse_int(value, full, line_no);
        else if (full == "tile.patch_w") cfg.tile.patch_w = parse_int(value, full, line_no);
        else if (full == "tile.stride_v") cfg.tile.stride_v = parse_int(value, full, line_no);
        else if (full == "tile.stride_h") cfg.tile.stride_h = parse_int(value, full, line_no);
        else throw ParseError("config: unknown key '" + full + "'", line_no);
    }
    return cfg;
}

RunConfig load_config(const fs::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    return parse_config(in, std::move(base));
}

void echo_config(std::ostream& out, const RunConfig& cfg) {
    out << "[run]\n"
        << "input_dir = " << cfg.input_dir.string() << "\n"
        << "guide_path = " << cfg.guide_path.string() << "\n"
        << "output_dir = " << cfg.output_dir.string() << "\n"
        << "factor = " << cfg.factor << "\n"
        << "workers = " << cfg.workers << "\n"
        << "coefficient_file = " << cfg.coefficient_file.string() << "\n"
        << "strict_codec = " << (cfg.strict_codec ? "true" : "false") << "\n"
        << "max_gap_fraction = " << cfg.max_gap_fraction << "\n"
        << "parallel_scenes = " << (cfg.parallel_scenes ? "true" : "false") << "\n"
        << "[solver]\n"
        << "lambda = " << cfg.solver.lambda << "\n"
        << "n_iterations = " << cfg.solver.n_iterations << "\n"
        << "adjust_every = " << cfg.solver.adjust_every << "\n"
        << "tolerance = " << cfg.solver.tolerance << "\n"
        << "init = " << (cfg.solver.init == InitScheme::BICUBIC ? "bicubic" : "replicate") << "\n"
        << "[guide]\n"
        << "kappa = " << cfg.guide_params.kappa << "\n"
        << "w_landcover = " << cfg.guide_params.w_landcover << "\n"
        << "w_elevation = " << cfg.guide_params.w_elevation << "\n"
        << "w_canopy = " << cfg.guide_params.w_canopy << "\n"
        << "g_form = "
        << (cfg.guide_params.g_form == EdgeStoppingForm::EXPONENTIAL ? "exponential" : "rational")
        << "\n"
        << "[tile]\n"
        << "patch_h = " << cfg.tile.patch_h << "\n"
        << "patch_w = " << cfg.tile.patch_w << "\n"
        << "stride_v = " << cfg.tile.stride_v << "\n"
        << "stride_h = " << cfg.tile.stride_h << "\n";
}

namespace {

struct SceneOutcome {
    bool ok = true;
    bool wrote_output = false;
    std::string log_line;
};

// quality layers carried from the coarse scene to the product, replicated
// to the high-resolution grid
const char* kQualityVariables[] = {"scanline_time", "satzen", "sunzen", "test_mae", "r2"};

SceneOutcome process_scene(const fs::path& scene_path, const RunConfig& cfg,
                           const GeoTransform& hr_geo, const CoefficientField& coeffs) {
    const auto t0 = std::chrono::steady_clock::now();
    SceneOutcome outcome;
    std::ostringstream line;
    line << "scene " << scene_path.filename().string();

    const auto blocks = read_npg(scene_path);
    const auto gac_idx = find_variable(blocks, "LST_GAC");
    if (!gac_idx) {
        outcome.ok = false;
        line << " status=failed error=\"no LST_GAC variable\"";
        outcome.log_line = line.str();
        return outcome;
    }

    std::size_t undeclared = 0;
    const Grid2D coarse = unpack(blocks[*gac_idx],
                                 cfg.strict_codec ? CodecMode::Strict : CodecMode::Lenient,
                                 &undeclared);

    const GeoTransform scene_hr = coarse.geo.refined(cfg.factor);
    if (!scene_hr.approx_equal(hr_geo)) {
        throw GeoMismatch("scene " + scene_path.filename().string() +
                          " does not match the guide extent at factor " +
                          std::to_string(cfg.factor));
    }

    const double gap =
        1.0 - static_cast<double>(coarse.valid_count()) / static_cast<double>(coarse.size());
    if (gap > cfg.max_gap_fraction) {
        std::ostringstream g;
        g.precision(3);
        g << gap;
        line << " status=skipped gap_fraction=" << g.str();
        outcome.log_line = line.str();
        return outcome;
    }

    // clamp the tile geometry to small scenes; extents stay factor-aligned
    const int patch_h = std::min(cfg.tile.patch_h, hr_geo.n_rows);
    const int patch_w = std::min(cfg.tile.patch_w, hr_geo.n_cols);
    const int stride_v = std::min(cfg.tile.stride_v, patch_h);
    const int stride_h = std::min(cfg.tile.stride_h, patch_w);
    const TilePlan tiles = plan(hr_geo.n_rows, hr_geo.n_cols, patch_h, patch_w, stride_v, stride_h);

    Grid2D hr(hr_geo, coarse.units);
    SolveReport total;
    if (coarse.valid_count() == 0) {
        line << " warning=\"scene fully masked\"";
    } else {
        std::vector<Grid2D> patches(tiles.windows.size());
        std::vector<SolveReport> reports(tiles.windows.size());
        std::atomic<std::size_t> next{0};
        std::mutex err_mutex;
        std::exception_ptr first_error;

        auto work = [&]() {
            try {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= tiles.windows.size()) break;
                    const Window& w = tiles.windows[i];
                    const Window cw{w.row0 / cfg.factor, w.col0 / cfg.factor,
                                    w.height / cfg.factor, w.width / cfg.factor};
                    const Grid2D src_patch = extract(coarse, cw);
                    const CoefficientField cf = coeffs.crop(w.row0, w.col0, w.height, w.width);
                    SolveResult res = solve(src_patch, cf, cfg.solver);
                    patches[i] = std::move(res.grid);
                    reports[i] = res.report;
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        };

        const int n_threads = cfg.parallel_scenes
                                  ? 1
                                  : static_cast<int>(std::min<std::size_t>(
                                        cfg.workers, tiles.windows.size()));
        if (n_threads <= 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(n_threads);
            for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
            for (auto& t : pool) t.join();
        }
        if (first_error) std::rethrow_exception(first_error);

        hr = stitch_average(tiles, patches, hr_geo);
        for (const auto& r : reports) {
            total.iterations_run = std::max(total.iterations_run, r.iterations_run);
            total.final_max_delta = std::max(total.final_max_delta, r.final_max_delta);
            total.empty_blocks += r.empty_blocks;
        }
    }

    // the product carries the same cloud mask as the coarse scene
    {
        const Grid2D block_mask = replicate_nearest(coarse, cfg.factor);
        std::vector<std::uint8_t> cloud(hr.size());
        for (std::size_t i = 0; i < cloud.size(); ++i) cloud[i] = block_mask.valid[i] ? 0 : 1;
        hr = apply_mask(hr, cloud);
    }

    // post-stitch residual of the hard constraint
    double residual = 0.0;
    {
        const Grid2D back = coarsen_nan_aware(hr, cfg.factor);
        for (std::size_t i = 0; i < back.size(); ++i) {
            if (coarse.valid[i] && back.valid[i]) {
                residual = std::max(residual, std::abs(back.values[i] - coarse.values[i]));
            }
        }
    }
    total.consistency_residual = residual;

    // product values live inside the profile's physical range
    PackedHeader lst_header = profiles::lst();
    std::size_t clamped = 0;
    for (std::size_t i = 0; i < hr.size(); ++i) {
        if (!hr.valid[i]) continue;
        const double v = hr.values[i];
        if (v < lst_header.valid_min_physical || v > lst_header.valid_max_physical) {
            hr.values[i] = std::clamp(v, lst_header.valid_min_physical,
                                      lst_header.valid_max_physical);
            ++clamped;
        }
    }

    const PackedHeader& gac_header = blocks[*gac_idx].header;
    lst_header.geo = hr_geo;
    lst_header.timestamp = gac_header.timestamp;
    lst_header.satellite = gac_header.satellite;
    lst_header.version = gac_header.version;
    lst_header.node = gac_header.node;

    std::vector<PackedGrid> out_blocks;
    out_blocks.push_back(pack(hr, lst_header));
    out_blocks.push_back(blocks[*gac_idx]); // the coarse record rides along untouched
    for (const char* var : kQualityVariables) {
        const auto qi = find_variable(blocks, var);
        if (!qi) continue;
        const Grid2D q = unpack(blocks[*qi], CodecMode::Lenient);
        PackedHeader qh = blocks[*qi].header;
        qh.geo = q.geo.refined(cfg.factor);
        out_blocks.push_back(pack(replicate_nearest(q, cfg.factor), qh));
    }

    const fs::path out_path = cfg.output_dir / format_filename(lst_header);
    write_npg(out_path, out_blocks);
    outcome.wrote_output = true;

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    line << " status=ok tiles=" << tiles.windows.size() << " iterations=" << total.iterations_run
         << " final_max_delta=" << total.final_max_delta
         << " consistency_residual=" << total.consistency_residual
         << " empty_blocks=" << total.empty_blocks << " clamped=" << clamped;
    if (undeclared > 0) line << " undeclared_codes=" << undeclared;
    line << " wall_time_s=" << wall << " output=" << out_path.filename().string();
    outcome.log_line = line.str();
    return outcome;
}

} // namespace

int cmd_downscale(const RunConfig& user_cfg, std::ostream& log) {
    user_cfg.validate();
    if (user_cfg.input_dir.empty() || user_cfg.guide_path.empty() || user_cfg.output_dir.empty()) {
        throw InvalidParams("downscale needs input_dir, guide_path and output_dir");
    }
    fs::create_directories(user_cfg.output_dir);
    std::ofstream run_log(user_cfg.output_dir / "run.log", std::ios::trunc);
    if (!run_log) throw IoError("cannot open run log in " + user_cfg.output_dir.string());
    auto both = [&](const std::string& s) {
        log << s << "\n";
        run_log << s << "\n";
    };

    // strides must land on block boundaries; snap down when they do not
    // (the stock horizontal stride 1792 is not a multiple of factor 5)
    RunConfig cfg = user_cfg;
    cfg.tile.stride_v = std::max(cfg.factor, cfg.tile.stride_v - cfg.tile.stride_v % cfg.factor);
    cfg.tile.stride_h = std::max(cfg.factor, cfg.tile.stride_h - cfg.tile.stride_h % cfg.factor);
    if (cfg.tile.stride_v != user_cfg.tile.stride_v ||
        cfg.tile.stride_h != user_cfg.tile.stride_h) {
        both("note: strides snapped to block alignment: " +
             std::to_string(user_cfg.tile.stride_v) + "/" + std::to_string(user_cfg.tile.stride_h) +
             " -> " + std::to_string(cfg.tile.stride_v) + "/" + std::to_string(cfg.tile.stride_h));
    }

    {
        std::ostringstream cfg_echo;
        echo_config(cfg_echo, cfg);
        run_log << "# downscale run configuration\n" << cfg_echo.str() << "#\n";
    }

    // the static guide is shared by every scene
    const auto guide_blocks = read_npg(cfg.guide_path);
    const auto lc_idx = find_variable(guide_blocks, "landcover");
    const auto el_idx = find_variable(guide_blocks, "elevation");
    const auto ca_idx = find_variable(guide_blocks, "canopy");
    if (!lc_idx || !el_idx || !ca_idx) {
        throw CorruptData("guide file must contain landcover, elevation and canopy variables");
    }
    const Grid2D lc_grid = unpack(guide_blocks[*lc_idx]);
    ClassGrid landcover(lc_grid.geo);
    for (std::size_t i = 0; i < lc_grid.size(); ++i) {
        landcover.codes[i] = lc_grid.valid[i]
                                 ? static_cast<std::int32_t>(std::llround(lc_grid.values[i]))
                                 : 0;
        landcover.valid[i] = lc_grid.valid[i];
    }
    const GuideStack stack = build_guide(landcover, unpack(guide_blocks[*el_idx]),
                                         unpack(guide_blocks[*ca_idx]));
    if (stack.joint_valid_count() == 0) {
        both("warning: guide joint validity mask is empty");
    }

    CoefficientField coeffs;
    if (!cfg.coefficient_file.empty()) {
        const CoefficientImport imported = import_coefficients(cfg.coefficient_file, stack.geo);
        coeffs = imported.field;
        if (imported.clamped > 0) {
            both("warning: clamped " + std::to_string(imported.clamped) +
                 " imported coefficients into [0, 1]");
        }
    } else {
        coeffs = edge_coefficients(normalize_guide(stack), cfg.guide_params);
    }

    std::vector<fs::path> scenes;
    if (fs::exists(cfg.input_dir)) {
        for (const auto& entry : fs::directory_iterator(cfg.input_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".npg") {
                scenes.push_back(entry.path());
            }
        }
    }
    std::sort(scenes.begin(), scenes.end());
    both("discovered " + std::to_string(scenes.size()) + " scenes");

    std::size_t failed = 0;
    auto run_one = [&](const fs::path& scene) -> SceneOutcome {
        try {
            return process_scene(scene, cfg, stack.geo, coeffs);
        } catch (const GeoMismatch&) {
            throw; // fatal: the guide cannot serve this batch
        } catch (const std::exception& e) {
            SceneOutcome bad;
            bad.ok = false;
            bad.log_line = "scene " + scene.filename().string() + " status=failed error=\"" +
                           e.what() + "\"";
            return bad;
        }
    };

    if (cfg.parallel_scenes && cfg.workers > 1 && scenes.size() > 1) {
        std::vector<SceneOutcome> outcomes(scenes.size());
        std::atomic<std::size_t> next{0};
        std::mutex err_mutex;
        std::exception_ptr first_error;
        auto work = [&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= scenes.size()) break;
                try {
                    outcomes[i] = run_one(scenes[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        const int n_threads =
            static_cast<int>(std::min<std::size_t>(cfg.workers, scenes.size()));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
        for (const auto& o : outcomes) {
            both(o.log_line);
            if (!o.ok) ++failed;
        }
    } else {
        for (const auto& scene : scenes) {
            const SceneOutcome o = run_one(scene);
            both(o.log_line);
            if (!o.ok) ++failed;
        }
    }

    both("run scenes=" + std::to_string(scenes.size()) + " failed=" + std::to_string(failed));
    return failed == 0 ? 0 : 1;
}

int cmd_validate(const ValidateOptions& opt, std::ostream& log) {
    const std::vector<Station> stations = load_station_table(opt.station_table);
    std::map<std::string, const Station*> by_id;
    for (const auto& s : stations) by_id[s.id] = &s;

    std::ifstream in(opt.matchup_file);
    if (!in) throw IoError("cannot open matchup file: " + opt.matchup_file.string());

    std::map<std::string, Grid2D> grid_cache;
    auto product_grid = [&](const std::string& filename) -> const Grid2D& {
        auto it = grid_cache.find(filename);
        if (it != grid_cache.end()) return it->second;
        const auto blocks = read_npg(opt.product_dir / filename);
        const auto idx = find_variable(blocks, "LST");
        if (!idx) throw CorruptData("product file " + filename + " has no LST variable");
        return grid_cache.emplace(filename, unpack(blocks[*idx])).first->second;
    };

    // (station, node) -> paired sample
    std::map<std::pair<std::string, std::string>, PairedSample> samples;
    std::string line;
    std::size_t line_no = 0;
    std::size_t rows = 0, matched = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string station_id, filename, ref_text;
        if (!(ls >> station_id >> filename >> ref_text)) {
            throw ParseError("matchup file: expected 'station file reference_K' on line " +
                                 std::to_string(line_no),
                             line_no);
        }
        double reference = 0.0;
        try {
            reference = std::stod(ref_text);
        } catch (const std::exception&) {
            throw ParseError("matchup file: bad reference value on line " +
                                 std::to_string(line_no),
                             line_no);
        }
        const auto st = by_id.find(station_id);
        if (st == by_id.end()) {
            throw ParseError("matchup file: unknown station '" + station_id + "' on line " +
                                 std::to_string(line_no),
                             line_no);
        }
        ++rows;
        const FilenameFields fields = parse_filename(filename);
        const std::string node = to_string(fields.node);
        auto& sample = samples[{station_id, node}];
        const auto est = matchup(product_grid(filename), *st->second);
        if (!est) continue;
        sample.reference.push_back(reference);
        sample.estimate.push_back(*est);
        sample.tags.push_back(node);
        ++matched;
    }

    fs::create_directories(opt.out_dir);
    std::ofstream summary(opt.out_dir / "summary.txt", std::ios::trunc);
    std::ofstream kv(opt.out_dir / "report.kv", std::ios::trunc);
    if (!summary || !kv) throw IoError("cannot write reports into " + opt.out_dir.string());

    for (const auto& station : stations) {
        for (const std::string node : {"DAY", "NIGHT"}) {
            const auto it = samples.find({station.id, node});
            const std::size_t n = it == samples.end() ? 0 : it->second.size();
            if (n == 0) {
                summary << "station=" << station.id << " node=" << node << " n=0\n";
                kv << station.id << "." << node << ".n = 0\n";
                continue;
            }
            const ValidationReport report = compute_report(it->second, opt.bin_width);
            summary << "station=" << station.id << " node=" << node << " "
                    << report.summary_line() << "\n";
            write_report_kv(kv, station.id + "." + node, report);
            std::ofstream hist(opt.out_dir / ("hist_" + station.id + "_" + node + ".txt"),
                               std::ios::trunc);
            write_histogram(hist, report);
        }
    }

    log << "validate rows=" << rows << " matched=" << matched << " stations=" << stations.size()
        << " reports=" << opt.out_dir.string() << "\n";
    return 0;
}

} // namespace lstsr
