#include "axloc/volume_io.hpp"

#include "axloc/errors.hpp"
#include "axloc/numeric.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace axloc {

namespace {

constexpr char kMagic[4] = {'A', 'X', 'V', '1'};
// Headers are a few hundred bytes; anything larger is a corrupted length.
constexpr std::uint32_t kMaxHeaderBytes = 1U << 20;

using Kind = VolumeFormatError::Kind;

std::uint32_t read_u32_le(const std::uint8_t* p)
{
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int shift = 0; shift < 32; shift += 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::size_t header_dimension(const nlohmann::json& dims, std::size_t i, const char* field)
{
    const auto& d = dims[i];
    if (!d.is_number_integer() && !d.is_number_unsigned())
        throw VolumeFormatError(Kind::bad_header, field, "dimension must be an integer");
    const auto v = d.get<std::int64_t>();
    if (v <= 0)
        throw VolumeFormatError(Kind::invalid_dimension, field, "dimension must be positive");
    return static_cast<std::size_t>(v);
}

double header_spacing(const nlohmann::json& v, const char* field)
{
    if (!v.is_number())
        throw VolumeFormatError(Kind::bad_header, field, "spacing must be a number");
    return v.get<double>();
}

VolumeMeta parse_header(std::string_view text)
{
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw VolumeFormatError(Kind::bad_header, "header", e.what());
    }
    if (!h.is_object())
        throw VolumeFormatError(Kind::bad_header, "header", "header must be a JSON object");
    for (const char* key : {"dims", "spacing_between_slices_mm", "pixel_spacing_mm", "orientation"})
        if (!h.contains(key))
            throw VolumeFormatError(Kind::bad_header, key, "missing field");

    const auto& dims = h["dims"];
    if (!dims.is_array() || dims.size() != 3)
        throw VolumeFormatError(Kind::bad_header, "dims", "expected [slices, rows, cols]");
    const auto& pix = h["pixel_spacing_mm"];
    if (!pix.is_array() || pix.size() != 2)
        throw VolumeFormatError(Kind::bad_header, "pixel_spacing_mm", "expected [row, col]");
    if (!h["orientation"].is_string())
        throw VolumeFormatError(Kind::bad_header, "orientation", "must be a string");

    VolumeMeta meta;
    meta.num_slices = header_dimension(dims, 0, "dims[0]");
    meta.rows = header_dimension(dims, 1, "dims[1]");
    meta.cols = header_dimension(dims, 2, "dims[2]");
    meta.spacing_between_slices_mm =
        header_spacing(h["spacing_between_slices_mm"], "spacing_between_slices_mm");
    meta.pixel_spacing_mm = {header_spacing(pix[0], "pixel_spacing_mm[0]"),
                             header_spacing(pix[1], "pixel_spacing_mm[1]")};
    try {
        meta.orientation = parse_orientation(h["orientation"].get<std::string>());
    } catch (const LookupError& e) {
        throw VolumeFormatError(Kind::bad_header, "orientation", e.what());
    }
    meta.validate();
    return meta;
}

std::string header_text(const VolumeMeta& meta)
{
    nlohmann::json h;
    h["dims"] = {meta.num_slices, meta.rows, meta.cols};
    h["spacing_between_slices_mm"] = meta.spacing_between_slices_mm;
    h["pixel_spacing_mm"] = {meta.pixel_spacing_mm[0], meta.pixel_spacing_mm[1]};
    h["orientation"] = std::string(to_string(meta.orientation));
    return h.dump();
}

} // namespace

std::string_view to_string(Orientation o) noexcept
{
    switch (o) {
    case Orientation::head_first: return "head_first";
    case Orientation::feet_first: return "feet_first";
    case Orientation::unknown: return "unknown";
    }
    return "unknown";
}

Orientation parse_orientation(std::string_view name)
{
    if (name == "head_first")
        return Orientation::head_first;
    if (name == "feet_first")
        return Orientation::feet_first;
    if (name == "unknown")
        return Orientation::unknown;
    throw LookupError(std::string(name), "orientation");
}

void VolumeMeta::validate() const
{
    if (num_slices < 1)
        throw VolumeFormatError(Kind::invalid_dimension, "dims[0]", "need at least one slice");
    if (rows < 1)
        throw VolumeFormatError(Kind::invalid_dimension, "dims[1]", "need at least one row");
    if (cols < 1)
        throw VolumeFormatError(Kind::invalid_dimension, "dims[2]", "need at least one column");
    if (num_slices > std::numeric_limits<std::size_t>::max() / rows / cols / 2)
        throw VolumeFormatError(Kind::invalid_dimension, "dims", "volume too large");
    auto check = [](double v, const char* field) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw VolumeFormatError(Kind::non_positive_spacing, field,
                                    "spacing must be finite and positive");
    };
    check(spacing_between_slices_mm, "spacing_between_slices_mm");
    check(pixel_spacing_mm[0], "pixel_spacing_mm[0]");
    check(pixel_spacing_mm[1], "pixel_spacing_mm[1]");
}

Volume::Volume(VolumeMeta meta, std::vector<std::int16_t> voxels)
    : meta_(meta), voxels_(std::move(voxels))
{
    meta_.validate();
    if (voxels_.size() != meta_.voxel_count())
        throw VolumeFormatError(Kind::dimension_mismatch, "voxels",
                                "expected " + std::to_string(meta_.voxel_count()) + " voxels, got " +
                                    std::to_string(voxels_.size()));
}

std::span<const std::int16_t> Volume::slice(std::size_t index) const
{
    if (index >= meta_.num_slices)
        throw ArgumentError("slice " + std::to_string(index) + " out of range");
    const auto plane = meta_.rows * meta_.cols;
    return std::span<const std::int16_t>(voxels_).subspan(index * plane, plane);
}

std::int16_t Volume::at(std::size_t s, std::size_t r, std::size_t c) const
{
    if (s >= meta_.num_slices || r >= meta_.rows || c >= meta_.cols)
        throw ArgumentError("voxel index out of range");
    return voxels_[(s * meta_.rows + r) * meta_.cols + c];
}

std::vector<std::uint8_t> encode_volume(const Volume& volume)
{
    const std::string header = header_text(volume.meta());
    std::vector<std::uint8_t> out;
    out.reserve(8 + header.size() + volume.voxels().size() * 2);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_u32_le(out, static_cast<std::uint32_t>(header.size()));
    out.insert(out.end(), header.begin(), header.end());
    for (std::int16_t v : volume.voxels()) {
        const auto u = static_cast<std::uint16_t>(v);
        out.push_back(static_cast<std::uint8_t>(u & 0xFF));
        out.push_back(static_cast<std::uint8_t>(u >> 8));
    }
    return out;
}

Volume decode_volume(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw VolumeFormatError(Kind::bad_magic, "magic", "file does not start with AXV1");
    if (bytes.size() < 8)
        throw VolumeFormatError(Kind::truncated_header, "header_length", "file ends inside the prefix");
    const std::uint32_t header_len = read_u32_le(bytes.data() + 4);
    if (header_len > kMaxHeaderBytes)
        throw VolumeFormatError(Kind::bad_header, "header_length",
                                "implausible header length " + std::to_string(header_len));
    if (bytes.size() < 8 + static_cast<std::size_t>(header_len))
        throw VolumeFormatError(Kind::truncated_header, "header", "file ends inside the header");

    const std::string_view text(reinterpret_cast<const char*>(bytes.data() + 8), header_len);
    const VolumeMeta meta = parse_header(text);

    const auto payload = bytes.subspan(8 + header_len);
    const std::size_t expected = meta.voxel_count() * 2;
    if (payload.size() < expected)
        throw VolumeFormatError(Kind::truncated_payload, "payload",
                                "expected " + std::to_string(expected) + " bytes, got " +
                                    std::to_string(payload.size()));
    if (payload.size() > expected)
        throw VolumeFormatError(Kind::dimension_mismatch, "payload",
                                std::to_string(payload.size() - expected) +
                                    " trailing bytes beyond declared dims");

    std::vector<std::int16_t> voxels(meta.voxel_count());
    for (std::size_t i = 0; i < voxels.size(); ++i) {
        const auto u = static_cast<std::uint16_t>(payload[2 * i] | payload[2 * i + 1] << 8);
        voxels[i] = static_cast<std::int16_t>(u);
    }
    return Volume(meta, std::move(voxels));
}

Volume read_volume(std::istream& in)
{
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_volume(bytes);
}

void write_volume(const Volume& volume, std::ostream& out)
{
    const auto bytes = encode_volume(volume);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Volume load_volume(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(path, "cannot open volume");
    return read_volume(in);
}

void save_volume(const Volume& volume, const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError(path, "cannot open for writing");
    write_volume(volume, out);
    out.flush();
    if (!out)
        throw IoError(path, "write failed");
}

PredictionFile::PredictionFile(std::vector<PredictionRecord> records) : records_(std::move(records))
{
    std::stable_sort(records_.begin(), records_.end(),
                     [](const auto& a, const auto& b) { return a.slice_index < b.slice_index; });
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (!std::isfinite(records_[i].position))
            throw ArgumentError("non-finite position for slice " + std::to_string(records_[i].slice_index));
        if (i > 0 && records_[i].slice_index == records_[i - 1].slice_index)
            throw ArgumentError("duplicate slice index " + std::to_string(records_[i].slice_index));
    }
}

const double* PredictionFile::find(std::size_t slice_index) const noexcept
{
    auto it = std::lower_bound(records_.begin(), records_.end(), slice_index,
                               [](const PredictionRecord& r, std::size_t i) { return r.slice_index < i; });
    if (it == records_.end() || it->slice_index != slice_index)
        return nullptr;
    return &it->position;
}

PredictionFile parse_predictions(std::istream& in)
{
    using PK = ParseError::Kind;
    std::string line;
    std::size_t line_no = 0;

    auto strip = [](std::string& s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
            s.pop_back();
    };

    if (!std::getline(in, line))
        throw ParseError(PK::missing_header, 1, "empty input");
    ++line_no;
    strip(line);
    if (line.rfind("\xEF\xBB\xBF", 0) == 0)
        line.erase(0, 3);
    if (line != kPredictionHeader)
        throw ParseError(PK::missing_header, 1, "expected '" + std::string(kPredictionHeader) + "'");

    std::vector<PredictionRecord> records;
    std::unordered_set<std::size_t> seen;
    while (std::getline(in, line)) {
        ++line_no;
        strip(line);
        if (line.empty())
            continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw ParseError(PK::bad_field, line_no, "expected two comma-separated fields");
        PredictionRecord r;
        if (!parse_index(std::string_view(line).substr(0, comma), r.slice_index))
            throw ParseError(PK::bad_field, line_no, "slice_index '" + line.substr(0, comma) + "'");
        if (!parse_double(std::string_view(line).substr(comma + 1), r.position))
            throw ParseError(PK::bad_field, line_no, "position '" + line.substr(comma + 1) + "'");
        if (!seen.insert(r.slice_index).second)
            throw ParseError(PK::duplicate_index, line_no, "slice_index " + std::to_string(r.slice_index));
        records.push_back(r);
    }

    return PredictionFile(std::move(records));
}

PredictionFile load_predictions(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError(path, "cannot open predictions");
    return parse_predictions(in);
}

void write_predictions(const PredictionFile& file, std::ostream& out)
{
    out << kPredictionHeader << '\n';
    for (const auto& r : file.records())
        out << r.slice_index << ',' << format_decimal(r.position) << '\n';
}

void save_predictions(const PredictionFile& file, const std::string& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError(path, "cannot open for writing");
    write_predictions(file, out);
    out.flush();
    if (!out)
        throw IoError(path, "write failed");
}

} // namespace axloc
