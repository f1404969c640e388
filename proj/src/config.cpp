#include "axloc/config.hpp"

#include "axloc/errors.hpp"

#include <fstream>
#include <set>

namespace axloc {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed)
{
    if (!obj.is_object())
        throw ArgumentError("config '" + where + "' must be an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key))
            throw ArgumentError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
}

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& out)
{
    if (!obj.contains(key))
        return;
    const auto& v = obj.at(key);
    const std::string path = where.empty() ? key : where + "." + key;
    bool ok;
    if constexpr (std::is_same_v<T, bool>)
        ok = v.is_boolean();
    else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>)
        ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    else if constexpr (std::is_integral_v<T>)
        ok = v.is_number_integer();
    else if constexpr (std::is_floating_point_v<T>)
        ok = v.is_number();
    else
        ok = v.is_string();
    if (!ok)
        throw ArgumentError("config key '" + path + "' has the wrong type");
    out = v.get<T>();
}

void apply_sampler(Settings& s, const json& j)
{
    check_keys(j, "sampler", {"samples"});
    read(j, "samples", "sampler", s.sampler.sample_count);
}

void apply_ransac(Settings& s, const json& j)
{
    check_keys(j, "ransac", {"iterations", "inlier_threshold", "min_inliers"});
    read(j, "iterations", "ransac", s.ransac.iterations);
    read(j, "inlier_threshold", "ransac", s.ransac.inlier_threshold_units);
    read(j, "min_inliers", "ransac", s.ransac.min_inliers);
}

void apply_gate(Settings& s, const json& j)
{
    check_keys(j, "gate",
               {"max_fit_score", "min_inlier_fraction", "mm_per_unit_min", "mm_per_unit_max", "require_known_spacing"});
    read(j, "max_fit_score", "gate", s.gate.max_fit_score_units);
    read(j, "min_inlier_fraction", "gate", s.gate.min_inlier_fraction);
    read(j, "mm_per_unit_min", "gate", s.gate.mm_per_unit_lo);
    read(j, "mm_per_unit_max", "gate", s.gate.mm_per_unit_hi);
    read(j, "require_known_spacing", "gate", s.gate.require_known_spacing);
}

} // namespace

void Settings::validate() const
{
    sampler.validate();
    ransac.validate();
    gate.validate();
    noise.validate();
    cohort.validate();
    BodyScale{height_cm};
    if (jobs < 1)
        throw ArgumentError("jobs must be at least 1");
    if (port < 0 || port > 65535)
        throw ArgumentError("port must lie in [0, 65535]");
}

void apply_fit_overrides(Settings& s, const json& j)
{
    check_keys(j, "", {"sampler", "ransac", "gate"});
    if (j.contains("sampler"))
        apply_sampler(s, j["sampler"]);
    if (j.contains("ransac"))
        apply_ransac(s, j["ransac"]);
    if (j.contains("gate"))
        apply_gate(s, j["gate"]);
}

void apply_config(Settings& s, const json& j)
{
    check_keys(j, "", {"seed", "landmarks", "json", "height_cm", "sampler", "ransac", "gate", "noise", "phantom",
                       "bench", "serve"});
    read(j, "seed", "", s.seed);
    if (j.contains("landmarks")) {
        std::string path;
        read(j, "landmarks", "", path);
        s.landmarks_path = path;
    }
    read(j, "json", "", s.json);
    read(j, "height_cm", "", s.height_cm);
    apply_fit_overrides(s, json{{"sampler", j.value("sampler", json::object())},
                                {"ransac", j.value("ransac", json::object())},
                                {"gate", j.value("gate", json::object())}});
    if (j.contains("noise")) {
        const auto& n = j["noise"];
        check_keys(n, "noise", {"sigma", "outlier_rate", "seed"});
        read(n, "sigma", "noise", s.noise.sigma_units);
        read(n, "outlier_rate", "noise", s.noise.outlier_rate);
        read(n, "seed", "noise", s.noise.seed);
    }
    if (j.contains("phantom")) {
        const auto& p = j["phantom"];
        check_keys(p, "phantom", {"count", "out", "corruption_rate", "min_slices", "max_slices"});
        read(p, "count", "phantom", s.phantom_count);
        read(p, "out", "phantom", s.phantom_out);
        read(p, "corruption_rate", "phantom", s.cohort.corruption_rate);
        read(p, "min_slices", "phantom", s.cohort.min_slices);
        read(p, "max_slices", "phantom", s.cohort.max_slices);
    }
    if (j.contains("bench")) {
        check_keys(j["bench"], "bench", {"jobs"});
        read(j["bench"], "jobs", "bench", s.jobs);
    }
    if (j.contains("serve")) {
        check_keys(j["serve"], "serve", {"bind", "port"});
        read(j["serve"], "bind", "serve", s.bind);
        read(j["serve"], "port", "serve", s.port);
    }
}

json to_json(const Settings& s)
{
    json j = {
        {"seed", s.seed},
        {"json", s.json},
        {"height_cm", s.height_cm},
        {"sampler", {{"samples", s.sampler.sample_count}}},
        {"ransac",
         {{"iterations", s.ransac.iterations},
          {"inlier_threshold", s.ransac.inlier_threshold_units},
          {"min_inliers", s.ransac.min_inliers}}},
        {"gate",
         {{"max_fit_score", s.gate.max_fit_score_units},
          {"min_inlier_fraction", s.gate.min_inlier_fraction},
          {"mm_per_unit_min", s.gate.mm_per_unit_lo},
          {"mm_per_unit_max", s.gate.mm_per_unit_hi},
          {"require_known_spacing", s.gate.require_known_spacing}}},
        {"noise", {{"sigma", s.noise.sigma_units}, {"outlier_rate", s.noise.outlier_rate}, {"seed", s.noise.seed}}},
        {"phantom",
         {{"count", s.phantom_count},
          {"out", s.phantom_out},
          {"corruption_rate", s.cohort.corruption_rate},
          {"min_slices", s.cohort.min_slices},
          {"max_slices", s.cohort.max_slices}}},
        {"bench", {{"jobs", s.jobs}}},
        {"serve", {{"bind", s.bind}, {"port", s.port}}},
    };
    if (s.landmarks_path)
        j["landmarks"] = *s.landmarks_path;
    return j;
}

json load_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError(path, "cannot open");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(ParseError::Kind::bad_json, 0, path + ": " + e.what());
    }
}

} // namespace axloc
