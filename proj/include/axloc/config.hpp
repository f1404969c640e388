#ifndef AXLOC_CONFIG_HPP
#define AXLOC_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "axloc/coords.hpp"
#include "axloc/fitter.hpp"
#include "axloc/gatekeeper.hpp"
#include "axloc/phantom.hpp"
#include "axloc/predictor.hpp"

namespace axloc {

/// Every tunable the front ends expose. Precedence when merging:
/// command-line flag > config file (--config, else $AXLOC_CONFIG) > default.
struct Settings {
    std::uint64_t seed = 0; ///< RANSAC seed; master seed for phantom cohorts
    std::optional<std::string> landmarks_path;
    bool json = false;
    double height_cm = 170.0;

    SamplerConfig sampler;
    RansacConfig ransac;
    GateConfig gate;
    NoiseModel noise;

    std::size_t phantom_count = 100;
    std::string phantom_out = "cohort";
    CohortDistribution cohort;

    std::size_t jobs = 1;

    std::string bind = "127.0.0.1";
    int port = 8080;

    /// Copies `seed` into the places it drives.
    void sync_seed() { ransac.seed = seed; }
    void validate() const;
};

/// Applies a config document. Unknown keys and mistyped values raise
/// ArgumentError naming the key path.
void apply_config(Settings& settings, const nlohmann::json& config);

/// Only the fitter and gate blocks ("sampler", "ransac", "gate"); used for
/// per-request overrides.
void apply_fit_overrides(Settings& settings, const nlohmann::json& overrides);

nlohmann::json to_json(const Settings& settings);

nlohmann::json load_json_file(const std::string& path);

} // namespace axloc

#endif
