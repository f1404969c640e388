#ifndef AXLOC_VOLUME_IO_HPP
#define AXLOC_VOLUME_IO_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace axloc {

enum class Orientation { head_first, feet_first, unknown };

std::string_view to_string(Orientation o) noexcept;
/// Throws LookupError for anything but the three canonical names.
Orientation parse_orientation(std::string_view name);

/// Default in-plane size for generated volumes; the container accepts any.
inline constexpr std::size_t kMinImageSide = 16;

struct VolumeMeta {
    std::size_t num_slices = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    double spacing_between_slices_mm = 1.0;
    std::array<double, 2> pixel_spacing_mm{1.0, 1.0}; // row, col
    Orientation orientation = Orientation::unknown;

    std::size_t voxel_count() const noexcept { return num_slices * rows * cols; }

    /// Throws VolumeFormatError naming the first offending field.
    void validate() const;

    friend bool operator==(const VolumeMeta&, const VolumeMeta&) = default;
};

/// Slice stack of Hounsfield units, stored slice-major then row-major.
class Volume {
public:
    Volume(VolumeMeta meta, std::vector<std::int16_t> voxels);

    const VolumeMeta& meta() const noexcept { return meta_; }
    std::size_t num_slices() const noexcept { return meta_.num_slices; }

    std::span<const std::int16_t> voxels() const noexcept { return voxels_; }
    std::span<const std::int16_t> slice(std::size_t index) const;
    std::int16_t at(std::size_t slice, std::size_t row, std::size_t col) const;

    friend bool operator==(const Volume&, const Volume&) = default;

private:
    VolumeMeta meta_;
    std::vector<std::int16_t> voxels_;
};

/// AXV1 container: "AXV1", u32 LE header length, JSON header, i16 LE payload.
Volume read_volume(std::istream& in);
void write_volume(const Volume& volume, std::ostream& out);
std::vector<std::uint8_t> encode_volume(const Volume& volume);
Volume decode_volume(std::span<const std::uint8_t> bytes);

Volume load_volume(const std::string& path);
void save_volume(const Volume& volume, const std::string& path);

struct PredictionRecord {
    std::size_t slice_index = 0;
    double position = 0.0;

    friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

/// Per-slice positions keyed by unique slice index, sorted ascending.
class PredictionFile {
public:
    PredictionFile() = default;
    /// Sorts by index; throws ArgumentError on duplicates or non-finite positions.
    explicit PredictionFile(std::vector<PredictionRecord> records);

    const std::vector<PredictionRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    /// Nullptr when the index is absent.
    const double* find(std::size_t slice_index) const noexcept;

    friend bool operator==(const PredictionFile&, const PredictionFile&) = default;

private:
    std::vector<PredictionRecord> records_;
};

inline constexpr std::string_view kPredictionHeader = "slice_index,position";

PredictionFile parse_predictions(std::istream& in);
PredictionFile load_predictions(const std::string& path);
void write_predictions(const PredictionFile& file, std::ostream& out);
void save_predictions(const PredictionFile& file, const std::string& path);

} // namespace axloc

#endif
