#ifndef AXLOC_COORDS_HPP
#define AXLOC_COORDS_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace axloc {

// Normalized body axis: 0 at the superior skull, 100 at the sole of the foot.
inline constexpr double kMinPosition = 0.0;
inline constexpr double kMaxPosition = 100.0;

constexpr double clamp_position(double p) noexcept
{
    return p < kMinPosition ? kMinPosition : (p > kMaxPosition ? kMaxPosition : p);
}

struct Landmark {
    std::string id;
    double position = 0.0;

    friend bool operator==(const Landmark&, const Landmark&) = default;
};

/// Eleven named landmarks with strictly increasing positions from 0 to 100.
class LandmarkTable {
public:
    static constexpr std::size_t kSize = 11;
    static constexpr int kVersion = 1;

    /// Validates and adopts `entries`; throws ArgumentError on any violation.
    explicit LandmarkTable(std::vector<Landmark> entries);

    /// Built-in table (version kVersion).
    static const LandmarkTable& builtin();

    static LandmarkTable from_json(const nlohmann::json& j);
    static LandmarkTable load(const std::string& path);
    nlohmann::json to_json() const;

    /// Throws LookupError naming the id when it is not in the table.
    double position(std::string_view id) const;
    bool contains(std::string_view id) const noexcept;

    const std::vector<Landmark>& entries() const noexcept { return entries_; }

    friend bool operator==(const LandmarkTable&, const LandmarkTable&) = default;

private:
    std::vector<Landmark> entries_;
};

inline double landmark_position(std::string_view id)
{
    return LandmarkTable::builtin().position(id);
}

/// Closest landmarks by coordinate value: `below` has the largest position
/// <= p, `above` the smallest position >= p. Both equal on an exact hit.
struct LandmarkBracket {
    std::optional<std::string> below;
    std::optional<std::string> above;
};

LandmarkBracket nearest_landmarks(double position,
                                  const LandmarkTable& table = LandmarkTable::builtin());

struct LabelAnchor {
    std::size_t slice_index = 0;
    double position = 0.0;
};

/// Labels every slice from the line through two annotated slices. Values
/// beyond the anchors are extrapolated and clamped; the anchor slices keep
/// their input values exactly.
std::vector<double> interpolate_labels(const LabelAnchor& upper, const LabelAnchor& lower,
                                       std::size_t num_slices);

struct BodyScale {
    double height_cm = 170.0;

    BodyScale() = default;
    explicit BodyScale(double height);

    double cm_per_unit() const noexcept { return height_cm / 100.0; }
};

inline double units_to_cm(double delta_units, const BodyScale& scale = BodyScale{})
{
    return delta_units * scale.cm_per_unit();
}

} // namespace axloc

#endif
