#include "lstsr/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lstsr {

void PairedSample::validate() const {
    if (reference.size() != estimate.size()) {
        throw ShapeMismatch("PairedSample: reference and estimate lengths differ");
    }
    if (!tags.empty() && tags.size() != reference.size()) {
        throw ShapeMismatch("PairedSample: tags length differs from the values");
    }
    for (std::size_t i = 0; i < reference.size(); ++i) {
        if (!std::isfinite(reference[i]) || !std::isfinite(estimate[i])) {
            throw NonFinite("PairedSample: non-finite value at index " + std::to_string(i));
        }
    }
}

void Station::validate() const {
    if (std::abs(lat) > 90.0) throw InvalidParams("Station " + id + ": |lat| > 90");
    if (std::abs(lon) > 180.0) throw InvalidParams("Station " + id + ": |lon| > 180");
}

namespace {

double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (n % 2 == 0) {
        const double lower = *std::max_element(v.begin(), v.begin() + mid);
        m = (lower + m) / 2.0;
    }
    return m;
}

ValidationReport report_from_differences(std::vector<double> d, double bin_width) {
    if (d.empty()) throw EmptySample("compute_report: empty sample");
    if (!(bin_width > 0.0)) throw InvalidParams("compute_report: bin width must be positive");

    ValidationReport r;
    r.n = d.size();
    double sum = 0.0, sum_abs = 0.0, sum_sq = 0.0;
    double lo = d.front(), hi = d.front();
    for (double x : d) {
        sum += x;
        sum_abs += std::abs(x);
        sum_sq += x * x;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    r.bias_mean = sum / r.n;
    r.mae = sum_abs / r.n;
    r.rmse = std::sqrt(sum_sq / r.n);

    std::vector<double> work = d;
    r.md = median_inplace(work);
    for (std::size_t i = 0; i < work.size(); ++i) work[i] = std::abs(d[i] - r.md);
    r.rsd = 1.4826 * median_inplace(work);

    // histogram over [lo, hi]; a degenerate single-value sample gets one
    // bin centered on the value
    if (hi == lo) {
        r.bin_edges = {lo - bin_width / 2.0, lo + bin_width / 2.0};
        r.counts = {r.n};
    } else {
        const std::size_t n_bins =
            static_cast<std::size_t>(std::max(1.0, std::ceil((hi - lo) / bin_width)));
        r.bin_edges.resize(n_bins + 1);
        for (std::size_t i = 0; i <= n_bins; ++i) r.bin_edges[i] = lo + i * bin_width;
        r.counts.assign(n_bins, 0);
        for (double x : d) {
            auto bin = static_cast<std::size_t>((x - lo) / bin_width);
            if (bin >= n_bins) bin = n_bins - 1; // right edge inclusive
            ++r.counts[bin];
        }
    }
    return r;
}

} // namespace

ValidationReport compute_report(const PairedSample& s, double bin_width) {
    s.validate();
    if (s.size() == 0) throw EmptySample("compute_report: empty sample");
    std::vector<double> d(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) d[i] = s.estimate[i] - s.reference[i];
    return report_from_differences(std::move(d), bin_width);
}

std::optional<double> matchup(const Grid2D& g, const Station& station) {
    station.validate();
    const auto& geo = g.geo;
    const int row = static_cast<int>(std::floor((geo.lat_max - station.lat) / geo.cell_size));
    const int col = static_cast<int>(std::floor((station.lon - geo.lon_min) / geo.cell_size));
    if (row < 0 || row >= geo.n_rows || col < 0 || col >= geo.n_cols) return std::nullopt;
    if (!g.is_valid(row, col)) return std::nullopt;
    return g.value(row, col);
}

ValidationReport grid_difference_report(const Grid2D& a, const Grid2D& b, double bin_width) {
    if (!a.geo.approx_equal(b.geo)) {
        throw GeoMismatch("grid_difference_report: grid geometries differ");
    }
    std::vector<double> d;
    d.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.valid[i] && b.valid[i]) d.push_back(a.values[i] - b.values[i]);
    }
    if (d.empty()) return ValidationReport{}; // n = 0 flags the empty overlap
    return report_from_differences(std::move(d), bin_width);
}

std::vector<Station> parse_station_table(std::istream& in) {
    std::vector<Station> stations;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 7) {
            throw ParseError("station table: expected 7 tab-separated fields, got " +
                                 std::to_string(fields.size()) + " on line " +
                                 std::to_string(line_no),
                             line_no);
        }
        Station s;
        s.id = fields[0];
        s.name = fields[1];
        s.network = fields[2];
        try {
            s.lat = std::stod(fields[3]);
            s.lon = std::stod(fields[4]);
            s.elevation = std::stod(fields[5]);
        } catch (const std::exception&) {
            throw ParseError("station table: bad number on line " + std::to_string(line_no),
                             line_no);
        }
        s.lccs = fields[6];
        s.validate();
        stations.push_back(std::move(s));
    }
    return stations;
}

std::vector<Station> load_station_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open station table: " + path.string());
    return parse_station_table(in);
}

std::string ValidationReport::summary_line() const {
    std::ostringstream os;
    os << "n=" << n;
    if (n > 0) {
        os.precision(6);
        os << " md=" << md << " rmse=" << rmse << " rsd=" << rsd << " mae=" << mae
           << " bias=" << bias_mean;
    }
    return os.str();
}

void write_report_kv(std::ostream& out, const std::string& prefix, const ValidationReport& r) {
    out << prefix << ".n = " << r.n << "\n";
    if (r.n == 0) return;
    out.precision(17);
    out << prefix << ".md = " << r.md << "\n";
    out << prefix << ".rmse = " << r.rmse << "\n";
    out << prefix << ".rsd = " << r.rsd << "\n";
    out << prefix << ".mae = " << r.mae << "\n";
    out << prefix << ".bias_mean = " << r.bias_mean << "\n";
}

void write_histogram(std::ostream& out, const ValidationReport& r) {
    out.precision(17);
    for (std::size_t i = 0; i < r.counts.size(); ++i) {
        const double center = (r.bin_edges[i] + r.bin_edges[i + 1]) / 2.0;
        out << center << " " << r.counts[i] << "\n";
    }
}

} // namespace lstsr
