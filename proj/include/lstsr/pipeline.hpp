#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "lstsr/guide.hpp"
#include "lstsr/sr_core.hpp"

namespace lstsr {

struct TileGeometry {
    int patch_h = 1920;
    int patch_w = 1920;
    int stride_v = 1480;
    int stride_h = 1792;
};

/// Batch configuration: a key = value document with one section per module,
/// every field reachable from the CLI as a flag override.
struct RunConfig {
    std::filesystem::path input_dir;
    std::filesystem::path guide_path;
    std::filesystem::path output_dir;
    int factor = 5;
    SolverParams solver;
    GuideParams guide_params;
    TileGeometry tile;
    int workers = 1;
    std::filesystem::path coefficient_file; // empty: derive from the guide
    bool strict_codec = true;
    double max_gap_fraction = 1.0; // scenes with a larger invalid fraction are skipped
    bool parallel_scenes = false;  // scenes sequential by default

    void validate() const;
};

RunConfig parse_config(std::istream& in, RunConfig base = RunConfig{});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = RunConfig{});
void echo_config(std::ostream& out, const RunConfig& cfg);

/// Exit status: 0 all scenes processed, 1 some scenes failed, 2 fatal.
/// Progress goes to `log`; the same lines land in output_dir/run.log.
int cmd_downscale(const RunConfig& cfg, std::ostream& log);

struct ValidateOptions {
    std::filesystem::path product_dir;
    std::filesystem::path station_table;
    std::filesystem::path matchup_file;
    std::filesystem::path out_dir;
    double bin_width = 0.5; // K
};

/// Station match-up validation split by DAY / NIGHT. Writes summary.txt,
/// report.kv and per-station histograms into out_dir.
int cmd_validate(const ValidateOptions& opt, std::ostream& log);

} // namespace lstsr
