#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lstsr/grid.hpp"

namespace lstsr {

/// Paired reference/estimate values (kelvin) with optional per-sample tags
/// such as DAY / NIGHT.
struct PairedSample {
    std::vector<double> reference;
    std::vector<double> estimate;
    std::vector<std::string> tags; // empty or same length as the values

    std::size_t size() const { return reference.size(); }
    void validate() const;
};

/// Validation statistics over differences d = estimate - reference.
/// rsd is the scaled median absolute deviation about the median deviation
/// (1.4826 * MAD), the robust sigma of the validation protocol.
struct ValidationReport {
    std::size_t n = 0;
    double mae = 0.0;
    double rmse = 0.0;
    double md = 0.0;
    double rsd = 0.0;
    double bias_mean = 0.0;
    std::vector<double> bin_edges;
    std::vector<std::size_t> counts;

    /// One human-readable line: n, md, rmse, rsd, mae, bias.
    std::string summary_line() const;
};

struct Station {
    std::string id;
    std::string name;
    std::string network;
    double lat = 0.0;
    double lon = 0.0;
    double elevation = 0.0;
    std::string lccs;

    void validate() const;
};

/// Statistics plus a histogram of d over [min d, max d] with the given bin
/// width. Throws EmptySample when the sample is empty.
ValidationReport compute_report(const PairedSample& s, double bin_width);

/// Value of the valid cell containing the station coordinate
/// (containing-cell lookup, no interpolation); nullopt outside the grid or
/// over an invalid cell.
std::optional<double> matchup(const Grid2D& g, const Station& station);

/// compute_report over cells valid in both grids, difference = a - b.
/// Disjoint validity yields a report with n = 0 rather than an error.
ValidationReport grid_difference_report(const Grid2D& a, const Grid2D& b, double bin_width);

/// Tab-separated station table: id, name, network, lat, lon, elevation,
/// LCCS. '#' lines are comments. ParseError carries the line number.
std::vector<Station> parse_station_table(std::istream& in);
std::vector<Station> load_station_table(const std::filesystem::path& path);

/// Machine-readable key = value lines under a key prefix.
void write_report_kv(std::ostream& out, const std::string& prefix, const ValidationReport& r);

/// Two-column histogram export: bin_center count.
void write_histogram(std::ostream& out, const ValidationReport& r);

} // namespace lstsr
