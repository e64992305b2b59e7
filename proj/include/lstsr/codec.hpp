#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lstsr/grid.hpp"

namespace lstsr {

enum class Node { DAY, NIGHT };

std::string to_string(Node n);
Node node_from_string(const std::string& s);

/// Minute-resolution UTC timestamp, the resolution the filename scheme
/// encodes.
struct UtcTime {
    int year = 2000;
    int month = 1;
    int day = 1;
    int hour = 0;
    int minute = 0;

    bool operator==(const UtcTime&) const = default;

    /// "YYYYMMDDhhmm"
    std::string compact() const;
    static UtcTime from_compact(const std::string& s);
};

struct SpecialCode {
    std::int16_t code = 0;
    std::string meaning;

    bool operator==(const SpecialCode&) const = default;
};

/// Everything needed to quantize a Grid2D into int16 storage and to name
/// the resulting file. The packed valid range is derived from the physical
/// range; fill and special codes must lie outside it.
struct PackedHeader {
    std::string variable_name;
    std::string long_name;
    std::string units;
    double scale = 0.01;
    double offset = 0.0;
    double valid_min_physical = 0.0;
    double valid_max_physical = 0.0;
    std::int16_t fill_code = -32768;
    std::vector<SpecialCode> special_codes;
    GeoTransform geo;
    UtcTime timestamp;
    std::string satellite = "NONE";
    std::string version = "v1.0";
    Node node = Node::DAY;

    std::int32_t packed_min() const;
    std::int32_t packed_max() const;
    void validate() const;

    bool operator==(const PackedHeader&) const = default;
};

struct PackedGrid {
    PackedHeader header;
    std::vector<std::int16_t> data;

    bool operator==(const PackedGrid&) const = default;
};

enum class CodecMode { Strict, Lenient };

/// Quantize: stored = round-half-away-from-zero((x - offset) / scale) for
/// valid in-range cells; invalid cells become the fill code. A value (valid
/// or not) that quantizes exactly onto a declared special code is stored as
/// that code, so cloud sentinels in external data survive the trip.
PackedGrid pack(const Grid2D& g, const PackedHeader& h);

/// Inverse of pack. Fill and special codes surface as invalid cells (special
/// codes keep their physical equivalent value so pack(unpack(p)) == p).
/// Undeclared out-of-range codes raise CorruptData in strict mode and are
/// invalidated (counted) in lenient mode.
Grid2D unpack(const PackedGrid& p, CodecMode mode = CodecMode::Strict,
              std::size_t* undeclared_count = nullptr);

/// Uppercase and strip non-alphanumeric characters ("MetOp-A" -> "METOPA").
std::string normalize_satellite(const std::string& s);

/// "LST_<SATELLITE>_<YYYYMMDDhhmm>_<NODE>_<VERSION>.npg"
std::string format_filename(const PackedHeader& h);

struct FilenameFields {
    std::string satellite;
    UtcTime timestamp;
    Node node = Node::DAY;
    std::string version;

    bool operator==(const FilenameFields&) const = default;
};

FilenameFields parse_filename(const std::string& name);

/// Byte-level serialization of one block: "NPG1" magic, uint32-LE header
/// length, UTF-8 key/value header document, int16-LE row-major payload.
std::vector<std::uint8_t> encode_block(const PackedGrid& p);
PackedGrid decode_block(const std::uint8_t* data, std::size_t size, std::size_t& consumed);

/// A .npg file is one or more concatenated blocks.
void write_npg(const std::filesystem::path& path, const std::vector<PackedGrid>& blocks);
void write_npg(const std::filesystem::path& path, const PackedGrid& block);
std::vector<PackedGrid> read_npg(const std::filesystem::path& path);

/// Find a block by variable name; nullopt when absent.
std::optional<std::size_t> find_variable(const std::vector<PackedGrid>& blocks,
                                         const std::string& variable_name);

/// Variable profiles mirroring the product's data-record conventions.
/// Geometry, timestamp, satellite, version and node are left at defaults
/// for the caller to fill in.
namespace profiles {
PackedHeader lst();
PackedHeader lst_gac();
PackedHeader scanline_time();
PackedHeader satzen();
PackedHeader sunzen();
PackedHeader test_mae();
PackedHeader r2();
PackedHeader landcover();
PackedHeader elevation();
PackedHeader canopy();
PackedHeader coefficient(const std::string& variable_name);
std::optional<PackedHeader> by_name(const std::string& name);
} // namespace profiles

} // namespace lstsr
