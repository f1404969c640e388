#include "axloc/coords.hpp"

#include "axloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace axloc {

LandmarkTable::LandmarkTable(std::vector<Landmark> entries) : entries_(std::move(entries))
{
    if (entries_.size() != kSize)
        throw ArgumentError("landmark table must have " + std::to_string(kSize) +
                            " entries, got " + std::to_string(entries_.size()));
    std::set<std::string> seen;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (e.id.empty())
            throw ArgumentError("landmark table entry " + std::to_string(i) + " has an empty id");
        if (!seen.insert(e.id).second)
            throw ArgumentError("duplicate landmark id '" + e.id + "'");
        if (!std::isfinite(e.position))
            throw ArgumentError("landmark '" + e.id + "' has a non-finite position");
        if (i > 0 && !(e.position > entries_[i - 1].position))
            throw ArgumentError("landmark positions must be strictly increasing at '" + e.id + "'");
    }
    if (entries_.front().position != kMinPosition || entries_.back().position != kMaxPosition)
        throw ArgumentError("landmark table must span [0, 100]");
}

const LandmarkTable& LandmarkTable::builtin()
{
    static const LandmarkTable table({
        {"superior_skull", 0.0},
        {"inferior_cerebellum", 10.9},
        {"hyoid_bone", 12.6},
        {"superior_sternum", 18.9},
        {"carina", 21.1},
        {"inferior_heart", 28.0},
        {"lower_12th_rib", 36.6},
        {"superior_ilium", 40.0},
        {"lesser_trochanter", 51.4},
        {"patellas", 71.4},
        {"sole_of_foot", 100.0},
    });
    return table;
}

LandmarkTable LandmarkTable::from_json(const nlohmann::json& j)
{
    if (!j.is_array())
        throw ArgumentError("landmark table JSON must be an array");
    std::vector<Landmark> entries;
    entries.reserve(j.size());
    for (const auto& item : j) {
        if (!item.is_object() || !item.contains("id") || !item.contains("position") ||
            !item["id"].is_string() || !item["position"].is_number())
            throw ArgumentError("landmark entries must be {\"id\": string, \"position\": number}");
        entries.push_back({item["id"].get<std::string>(), item["position"].get<double>()});
    }
    return LandmarkTable(std::move(entries));
}

LandmarkTable LandmarkTable::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError(path, "cannot open landmark table");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(ParseError::Kind::bad_json, 0, path + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json LandmarkTable::to_json() const
{
    auto out = nlohmann::json::array();
    for (const auto& e : entries_)
        out.push_back({{"id", e.id}, {"position", e.position}});
    return out;
}

double LandmarkTable::position(std::string_view id) const
{
    for (const auto& e : entries_)
        if (e.id == id)
            return e.position;
    throw LookupError(std::string(id), "landmark");
}

bool LandmarkTable::contains(std::string_view id) const noexcept
{
    return std::any_of(entries_.begin(), entries_.end(), [&](const Landmark& e) { return e.id == id; });
}

LandmarkBracket nearest_landmarks(double position, const LandmarkTable& table)
{
    if (!(position >= kMinPosition && position <= kMaxPosition))
        throw ArgumentError("position " + std::to_string(position) + " outside [0, 100]");
    LandmarkBracket out;
    for (const auto& e : table.entries()) {
        if (e.position <= position)
            out.below = e.id;
        if (e.position >= position && !out.above)
            out.above = e.id;
    }
    return out;
}

std::vector<double> interpolate_labels(const LabelAnchor& upper, const LabelAnchor& lower,
                                       std::size_t num_slices)
{
    if (!(upper.slice_index < lower.slice_index))
        throw ArgumentError("upper anchor index must be strictly less than lower anchor index");
    if (lower.slice_index >= num_slices)
        throw ArgumentError("anchor index " + std::to_string(lower.slice_index) +
                            " outside a scan of " + std::to_string(num_slices) + " slices");
    if (!std::isfinite(upper.position) || !std::isfinite(lower.position))
        throw ArgumentError("anchor positions must be finite");

    const double span = static_cast<double>(lower.slice_index - upper.slice_index);
    const double rise = lower.position - upper.position;
    std::vector<double> out(num_slices);
    for (std::size_t i = 0; i < num_slices; ++i) {
        const double offset = static_cast<double>(i) - static_cast<double>(upper.slice_index);
        out[i] = clamp_position(upper.position + rise * (offset / span));
    }
    out[upper.slice_index] = upper.position;
    out[lower.slice_index] = lower.position;
    return out;
}

BodyScale::BodyScale(double height) : height_cm(height)
{
    if (!(height > 0.0) || !std::isfinite(height))
        throw ArgumentError("body height must be positive and finite");
}

} // namespace axloc
