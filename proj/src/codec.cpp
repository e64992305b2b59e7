#include "lstsr/codec.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

namespace lstsr {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& key) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw CorruptData("header field '" + key + "' is not a number: " + s);
    }
    return v;
}

long parse_long(const std::string& s, const std::string& key) {
    long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw CorruptData("header field '" + key + "' is not an integer: " + s);
    }
    return v;
}

} // namespace

std::string to_string(Node n) { return n == Node::DAY ? "DAY" : "NIGHT"; }

Node node_from_string(const std::string& s) {
    if (s == "DAY") return Node::DAY;
    if (s == "NIGHT") return Node::NIGHT;
    throw CorruptData("node must be DAY or NIGHT, got '" + s + "'");
}

std::string UtcTime::compact() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d%02d%02d%02d%02d", year, month, day, hour, minute);
    return buf;
}

UtcTime UtcTime::from_compact(const std::string& s) {
    if (s.size() != 12 || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
        throw CorruptData("timestamp must be 12 digits YYYYMMDDhhmm, got '" + s + "'");
    }
    UtcTime t;
    t.year = std::stoi(s.substr(0, 4));
    t.month = std::stoi(s.substr(4, 2));
    t.day = std::stoi(s.substr(6, 2));
    t.hour = std::stoi(s.substr(8, 2));
    t.minute = std::stoi(s.substr(10, 2));
    if (t.month < 1 || t.month > 12 || t.day < 1 || t.day > 31 || t.hour > 23 || t.minute > 59) {
        throw CorruptData("timestamp out of range: '" + s + "'");
    }
    return t;
}

std::int32_t PackedHeader::packed_min() const {
    return static_cast<std::int32_t>(std::llround((valid_min_physical - offset) / scale));
}

std::int32_t PackedHeader::packed_max() const {
    return static_cast<std::int32_t>(std::llround((valid_max_physical - offset) / scale));
}

void PackedHeader::validate() const {
    if (!(scale > 0.0)) throw InvalidParams("PackedHeader: scale must be positive");
    if (valid_max_physical < valid_min_physical) {
        throw InvalidParams("PackedHeader: valid_max_physical < valid_min_physical");
    }
    const std::int32_t lo = packed_min();
    const std::int32_t hi = packed_max();
    if (lo < -32768 || hi > 32767) {
        throw InvalidParams("PackedHeader '" + variable_name +
                            "': physical valid range does not fit int16 at this scale/offset");
    }
    if (fill_code >= lo && fill_code <= hi) {
        throw InvalidParams("PackedHeader '" + variable_name + "': fill code " +
                            std::to_string(fill_code) + " lies inside the packed valid range");
    }
    for (const auto& sc : special_codes) {
        if (sc.code >= lo && sc.code <= hi) {
            throw InvalidParams("PackedHeader '" + variable_name + "': special code " +
                                std::to_string(sc.code) + " lies inside the packed valid range");
        }
        for (char ch : sc.meaning) {
            if (ch == ';' || ch == ':' || ch == '\n') {
                throw InvalidParams("special code meaning may not contain ';', ':' or newlines");
            }
        }
    }
    geo.validate();
}

PackedGrid pack(const Grid2D& g, const PackedHeader& h) {
    h.validate();
    if (!g.geo.approx_equal(h.geo)) {
        throw GeoMismatch("pack: grid geometry does not match header geometry for '" +
                          h.variable_name + "'");
    }
    const double pmin = h.packed_min();
    const double pmax = h.packed_max();
    PackedGrid out;
    out.header = h;
    out.data.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = g.values[i];
        double q = std::numeric_limits<double>::quiet_NaN();
        if (std::isfinite(v)) q = std::round((v - h.offset) / h.scale);

        std::int16_t stored = h.fill_code;
        if (g.valid[i]) {
            if (q >= pmin && q <= pmax) {
                stored = static_cast<std::int16_t>(q);
            } else {
                bool matched = false;
                for (const auto& sc : h.special_codes) {
                    if (q == static_cast<double>(sc.code)) {
                        stored = sc.code;
                        matched = true;
                        break;
                    }
                }
                if (!matched) {
                    const int r = static_cast<int>(i) / g.geo.n_cols;
                    const int c = static_cast<int>(i) % g.geo.n_cols;
                    throw ValueOutOfRange("pack: cell (" + std::to_string(r) + ", " +
                                          std::to_string(c) + ") value " + fmt_double(v) +
                                          " outside [" + fmt_double(h.valid_min_physical) + ", " +
                                          fmt_double(h.valid_max_physical) + "] " + h.units);
                }
            }
        } else if (std::isfinite(v)) {
            for (const auto& sc : h.special_codes) {
                if (q == static_cast<double>(sc.code)) {
                    stored = sc.code;
                    break;
                }
            }
        }
        out.data[i] = stored;
    }
    return out;
}

Grid2D unpack(const PackedGrid& p, CodecMode mode, std::size_t* undeclared_count) {
    p.header.validate();
    if (p.data.size() != p.header.geo.cell_count()) {
        throw CorruptData("unpack: payload size " + std::to_string(p.data.size()) +
                          " does not match geometry " + std::to_string(p.header.geo.cell_count()));
    }
    const std::int32_t pmin = p.header.packed_min();
    const std::int32_t pmax = p.header.packed_max();
    Grid2D out(p.header.geo, p.header.units);
    if (undeclared_count) *undeclared_count = 0;
    for (std::size_t i = 0; i < p.data.size(); ++i) {
        const std::int16_t s = p.data[i];
        if (s == p.header.fill_code) continue;
        if (s >= pmin && s <= pmax) {
            out.values[i] = s * p.header.scale + p.header.offset;
            out.valid[i] = 1;
            continue;
        }
        bool special = false;
        for (const auto& sc : p.header.special_codes) {
            if (s == sc.code) {
                special = true;
                break;
            }
        }
        if (special) {
            // invalid, but keep the physical equivalent so packing restores the code
            out.values[i] = s * p.header.scale + p.header.offset;
            continue;
        }
        if (mode == CodecMode::Strict) {
            const int r = static_cast<int>(i) / p.header.geo.n_cols;
            const int c = static_cast<int>(i) % p.header.geo.n_cols;
            throw CorruptData("unpack: undeclared code " + std::to_string(s) + " at cell (" +
                              std::to_string(r) + ", " + std::to_string(c) + ") of '" +
                              p.header.variable_name + "'");
        }
        if (undeclared_count) ++(*undeclared_count);
    }
    return out;
}

std::string normalize_satellite(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        if (std::isalnum(c)) out.push_back(static_cast<char>(std::toupper(c)));
    }
    return out;
}

std::string format_filename(const PackedHeader& h) {
    const std::string sat = normalize_satellite(h.satellite);
    if (sat.empty()) throw InvalidParams("format_filename: empty satellite token");
    if (h.version.empty() || h.version.find('_') != std::string::npos) {
        throw InvalidParams("format_filename: version must be non-empty and free of '_'");
    }
    return "LST_" + sat + "_" + h.timestamp.compact() + "_" + to_string(h.node) + "_" +
           h.version + ".npg";
}

FilenameFields parse_filename(const std::string& name) {
    const std::string prefix = "LST_";
    if (name.rfind(prefix, 0) != 0) {
        throw ParseError("filename must start with 'LST_'", 0);
    }
    std::size_t pos = prefix.size();

    auto next_field = [&](const char* what) {
        const std::size_t us = name.find('_', pos);
        if (us == std::string::npos || us == pos) {
            throw ParseError(std::string("expected ") + what + " field", pos);
        }
        std::string field = name.substr(pos, us - pos);
        pos = us + 1;
        return field;
    };

    FilenameFields f;
    f.satellite = next_field("satellite");
    for (std::size_t i = 0; i < f.satellite.size(); ++i) {
        if (!std::isalnum(static_cast<unsigned char>(f.satellite[i]))) {
            throw ParseError("satellite token must be alphanumeric", prefix.size() + i);
        }
    }

    const std::size_t ts_pos = pos;
    const std::string ts = next_field("timestamp");
    try {
        f.timestamp = UtcTime::from_compact(ts);
    } catch (const CorruptData& e) {
        throw ParseError(e.what(), ts_pos);
    }

    const std::size_t node_pos = pos;
    const std::string node = next_field("node");
    try {
        f.node = node_from_string(node);
    } catch (const CorruptData& e) {
        throw ParseError(e.what(), node_pos);
    }

    const std::size_t dot = name.rfind('.');
    if (dot == std::string::npos || dot <= pos) {
        throw ParseError("expected version and extension", pos);
    }
    f.version = name.substr(pos, dot - pos);
    return f;
}

namespace {

void append_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

std::string header_document(const PackedHeader& h) {
    std::string doc;
    auto kv = [&doc](const std::string& k, const std::string& v) {
        doc += k;
        doc += " = ";
        doc += v;
        doc += '\n';
    };
    kv("variable_name", h.variable_name);
    kv("long_name", h.long_name);
    kv("units", h.units);
    kv("scale", fmt_double(h.scale));
    kv("offset", fmt_double(h.offset));
    kv("valid_min", fmt_double(h.valid_min_physical));
    kv("valid_max", fmt_double(h.valid_max_physical));
    kv("fill_code", std::to_string(h.fill_code));
    std::string specials;
    for (std::size_t i = 0; i < h.special_codes.size(); ++i) {
        if (i) specials += ';';
        specials += std::to_string(h.special_codes[i].code) + ":" + h.special_codes[i].meaning;
    }
    kv("special_codes", specials);
    kv("lon_min", fmt_double(h.geo.lon_min));
    kv("lat_max", fmt_double(h.geo.lat_max));
    kv("cell_size", fmt_double(h.geo.cell_size));
    kv("n_rows", std::to_string(h.geo.n_rows));
    kv("n_cols", std::to_string(h.geo.n_cols));
    kv("timestamp", h.timestamp.compact());
    kv("satellite", h.satellite);
    kv("version", h.version);
    kv("node", to_string(h.node));
    return doc;
}

PackedHeader parse_header_document(const std::string& doc) {
    std::map<std::string, std::string> fields;
    std::size_t start = 0;
    while (start < doc.size()) {
        std::size_t end = doc.find('\n', start);
        if (end == std::string::npos) end = doc.size();
        const std::string line = doc.substr(start, end - start);
        start = end + 1;
        if (line.empty()) continue;
        const std::size_t sep = line.find(" = ");
        if (sep == std::string::npos) throw CorruptData("malformed header line: '" + line + "'");
        if (!fields.emplace(line.substr(0, sep), line.substr(sep + 3)).second) {
            throw CorruptData("duplicate header key: '" + line.substr(0, sep) + "'");
        }
    }

    static const char* expected[] = {
        "variable_name", "long_name", "units",   "scale",     "offset",    "valid_min",
        "valid_max",     "fill_code", "special_codes", "lon_min", "lat_max", "cell_size",
        "n_rows",        "n_cols",    "timestamp", "satellite", "version",  "node"};
    for (const char* key : expected) {
        if (!fields.count(key)) throw CorruptData(std::string("missing header key: ") + key);
    }
    if (fields.size() != std::size(expected)) {
        for (const auto& [k, v] : fields) {
            if (std::find_if(std::begin(expected), std::end(expected),
                             [&k](const char* e) { return k == e; }) == std::end(expected)) {
                throw CorruptData("unknown header key: '" + k + "'");
            }
        }
    }

    PackedHeader h;
    h.variable_name = fields["variable_name"];
    h.long_name = fields["long_name"];
    h.units = fields["units"];
    h.scale = parse_double(fields["scale"], "scale");
    h.offset = parse_double(fields["offset"], "offset");
    h.valid_min_physical = parse_double(fields["valid_min"], "valid_min");
    h.valid_max_physical = parse_double(fields["valid_max"], "valid_max");
    const long fill = parse_long(fields["fill_code"], "fill_code");
    if (fill < -32768 || fill > 32767) throw CorruptData("fill_code outside int16");
    h.fill_code = static_cast<std::int16_t>(fill);
    const std::string& specials = fields["special_codes"];
    std::size_t p = 0;
    while (p < specials.size()) {
        std::size_t semi = specials.find(';', p);
        if (semi == std::string::npos) semi = specials.size();
        const std::string item = specials.substr(p, semi - p);
        p = semi + 1;
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos) throw CorruptData("malformed special code: '" + item + "'");
        const long code = parse_long(item.substr(0, colon), "special_codes");
        if (code < -32768 || code > 32767) throw CorruptData("special code outside int16");
        h.special_codes.push_back({static_cast<std::int16_t>(code), item.substr(colon + 1)});
    }
    h.geo.lon_min = parse_double(fields["lon_min"], "lon_min");
    h.geo.lat_max = parse_double(fields["lat_max"], "lat_max");
    h.geo.cell_size = parse_double(fields["cell_size"], "cell_size");
    h.geo.n_rows = static_cast<int>(parse_long(fields["n_rows"], "n_rows"));
    h.geo.n_cols = static_cast<int>(parse_long(fields["n_cols"], "n_cols"));
    h.timestamp = UtcTime::from_compact(fields["timestamp"]);
    h.satellite = fields["satellite"];
    h.version = fields["version"];
    h.node = node_from_string(fields["node"]);
    h.validate();
    return h;
}

constexpr char kMagic[4] = {'N', 'P', 'G', '1'};

} // namespace

std::vector<std::uint8_t> encode_block(const PackedGrid& p) {
    p.header.validate();
    if (p.data.size() != p.header.geo.cell_count()) {
        throw CorruptData("encode_block: payload size does not match geometry");
    }
    const std::string doc = header_document(p.header);
    std::vector<std::uint8_t> out;
    out.reserve(4 + 4 + doc.size() + p.data.size() * 2);
    out.insert(out.end(), kMagic, kMagic + 4);
    append_u32_le(out, static_cast<std::uint32_t>(doc.size()));
    out.insert(out.end(), doc.begin(), doc.end());
    for (std::int16_t v : p.data) {
        const auto u = static_cast<std::uint16_t>(v);
        out.push_back(static_cast<std::uint8_t>(u & 0xFF));
        out.push_back(static_cast<std::uint8_t>((u >> 8) & 0xFF));
    }
    return out;
}

PackedGrid decode_block(const std::uint8_t* data, std::size_t size, std::size_t& consumed) {
    if (size < 8 || std::memcmp(data, kMagic, 4) != 0) {
        throw CorruptData("not an NPG1 block (bad magic)");
    }
    const std::uint32_t hlen = static_cast<std::uint32_t>(data[4]) |
                               (static_cast<std::uint32_t>(data[5]) << 8) |
                               (static_cast<std::uint32_t>(data[6]) << 16) |
                               (static_cast<std::uint32_t>(data[7]) << 24);
    if (8 + static_cast<std::size_t>(hlen) > size) {
        throw CorruptData("truncated NPG1 header document");
    }
    const std::string doc(reinterpret_cast<const char*>(data) + 8, hlen);
    PackedGrid p;
    p.header = parse_header_document(doc);
    const std::size_t payload = p.header.geo.cell_count() * 2;
    const std::size_t off = 8 + hlen;
    if (off + payload > size) throw CorruptData("truncated NPG1 payload");
    p.data.resize(p.header.geo.cell_count());
    for (std::size_t i = 0; i < p.data.size(); ++i) {
        const std::uint16_t lo = data[off + 2 * i];
        const std::uint16_t hi = data[off + 2 * i + 1];
        p.data[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
    }
    consumed = off + payload;
    return p;
}

void write_npg(const std::filesystem::path& path, const std::vector<PackedGrid>& blocks) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    for (const auto& b : blocks) {
        const auto bytes = encode_block(b);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void write_npg(const std::filesystem::path& path, const PackedGrid& block) {
    write_npg(path, std::vector<PackedGrid>{block});
}

std::vector<PackedGrid> read_npg(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    std::vector<PackedGrid> blocks;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        std::size_t consumed = 0;
        blocks.push_back(decode_block(bytes.data() + pos, bytes.size() - pos, consumed));
        pos += consumed;
    }
    if (blocks.empty()) throw CorruptData("empty NPG file: " + path.string());
    return blocks;
}

std::optional<std::size_t> find_variable(const std::vector<PackedGrid>& blocks,
                                         const std::string& variable_name) {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].header.variable_name == variable_name) return i;
    }
    return std::nullopt;
}

namespace profiles {

PackedHeader lst() {
    PackedHeader h;
    h.variable_name = "LST";
    h.long_name = "enhanced land surface temperature";
    h.units = "K";
    h.scale = 0.01;
    h.offset = 273.15;
    h.valid_min_physical = 200.0;
    h.valid_max_physical = 360.0;
    h.fill_code = -32768;
    return h;
}

PackedHeader lst_gac() {
    PackedHeader h = lst();
    h.variable_name = "LST_GAC";
    h.long_name = "land surface temperature at GAC resolution";
    h.special_codes = {{-11000, "cloud"}};
    return h;
}

PackedHeader scanline_time() {
    PackedHeader h;
    h.variable_name = "scanline_time";
    h.long_name = "scanline time as fractional hours of the day";
    h.units = "h";
    h.scale = 0.01;
    h.offset = 0.0;
    h.valid_min_physical = 0.0;
    h.valid_max_physical = 240.0;
    h.fill_code = -32768;
    return h;
}

PackedHeader satzen() {
    PackedHeader h;
    h.variable_name = "satzen";
    h.long_name = "satellite zenith angle";
    h.units = "degrees";
    h.scale = 0.01;
    h.offset = 0.0;
    h.valid_min_physical = 0.0;
    h.valid_max_physical = 180.0;
    h.fill_code = -32768;
    return h;
}

PackedHeader sunzen() {
    PackedHeader h;
    h.variable_name = "sunzen";
    h.long_name = "sun zenith angle";
    h.units = "degrees";
    h.scale = 0.01;
    h.offset = 0.0;
    h.valid_min_physical = 0.0;
    h.valid_max_physical = 75.0;
    h.fill_code = -32768;
    return h;
}

PackedHeader test_mae() {
    PackedHeader h;
    h.variable_name = "test_mae";
    h.long_name = "mean absolute error of the retrieval on its test set";
    h.units = "K";
    h.scale = 0.01;
    h.offset = 0.0;
    h.valid_min_physical = -327.0;
    h.valid_max_physical = 327.0;
    h.fill_code = -32768;
    return h;
}

PackedHeader r2() {
    PackedHeader h;
    h.variable_name = "r2";
    h.long_name = "coefficient of determination of the retrieval on its test set";
    h.units = "1";
    h.scale = 0.01;
    h.offset = 0.0;
    h.valid_min_physical = -327.0;
    h.valid_max_physical = 327.0;
    h.fill_code = -32768;
    return h;
}

PackedHeader landcover() {
    PackedHeader h;
    h.variable_name = "landcover";
    h.long_name = "land cover class (LCCS code)";
    h.units = "class";
    h.scale = 1.0;
    h.offset = 0.0;
    h.valid_min_physical = 0.0;
    h.valid_max_physical = 250.0;
    h.fill_code = -32768;
    return h;
}

PackedHeader elevation() {
    PackedHeader h;
    h.variable_name = "elevation";
    h.long_name = "surface elevation";
    h.units = "m";
    h.scale = 1.0;
    h.offset = 0.0;
    h.valid_min_physical = -500.0;
    h.valid_max_physical = 9000.0;
    h.fill_code = -32768;
    return h;
}

PackedHeader canopy() {
    PackedHeader h;
    h.variable_name = "canopy";
    h.long_name = "canopy height";
    h.units = "m";
    h.scale = 0.01;
    h.offset = 0.0;
    h.valid_min_physical = 0.0;
    h.valid_max_physical = 150.0;
    h.fill_code = -32768;
    return h;
}

PackedHeader coefficient(const std::string& variable_name) {
    PackedHeader h;
    h.variable_name = variable_name;
    h.long_name = "diffusion conductance";
    h.units = "1";
    h.scale = 0.0001;
    h.offset = 0.0;
    h.valid_min_physical = 0.0;
    h.valid_max_physical = 1.0;
    h.fill_code = -32768;
    return h;
}

std::optional<PackedHeader> by_name(const std::string& name) {
    if (name == "lst") return lst();
    if (name == "lst_gac") return lst_gac();
    if (name == "scanline_time") return scanline_time();
    if (name == "satzen") return satzen();
    if (name == "sunzen") return sunzen();
    if (name == "test_mae") return test_mae();
    if (name == "r2") return r2();
    if (name == "landcover") return landcover();
    if (name == "elevation") return elevation();
    if (name == "canopy") return canopy();
    return std::nullopt;
}

} // namespace profiles

} // namespace lstsr
