#ifndef AXLOC_PHANTOM_HPP
#define AXLOC_PHANTOM_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "axloc/predictor.hpp"
#include "axloc/volume_io.hpp"

namespace axloc {

enum class Corruption { none, constant_predictions, shuffled_predictions, wrong_slope };

std::string_view to_string(Corruption c) noexcept;
Corruption parse_corruption(std::string_view name);

/// Synthetic scan with a known index -> position line.
struct PhantomSpec {
    std::size_t num_slices = 100;
    std::size_t rows = kMinImageSide;
    std::size_t cols = kMinImageSide;
    double truth_slope = 0.1;
    double truth_intercept = 10.0;
    NoiseModel noise;
    double spacing_between_slices_mm = 1.7;
    std::array<double, 2> pixel_spacing_mm{0.8, 0.8};
    Orientation orientation = Orientation::head_first;
    Corruption corruption = Corruption::none;

    /// Line may stray into [-20, 120] at most.
    void validate() const;
    VolumeMeta meta() const;
    TruthLine truth_line() const noexcept { return {truth_slope, truth_intercept}; }
};

nlohmann::json to_json(const PhantomSpec& spec);
PhantomSpec phantom_spec_from_json(const nlohmann::json& j);

struct Phantom {
    Volume volume;
    std::vector<double> truth; ///< clamped truth position per slice
};

/// Voxels are seeded noise in [-1000, 2000] HU; only the truth line matters.
Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed);

/// Clamped truth line for every slice.
std::vector<double> truth_positions(const PhantomSpec& spec);

/// Predictor that simulates a classifier on this phantom, including the
/// configured corruption:
///   constant_predictions  every slice gets the same seeded value, no noise
///   shuffled_predictions  noisy truth of a seeded permutation of the slices
///   wrong_slope           noisy truth stretched 3x or squeezed 3x about mid-scan
std::unique_ptr<Predictor> make_phantom_predictor(const PhantomSpec& spec);

/// Parameter ranges for random cohorts.
struct CohortDistribution {
    std::size_t min_slices = 40;
    std::size_t max_slices = 1500;
    double min_coverage_units = 10.0;
    double max_coverage_units = 70.0;
    double min_height_cm = 150.0;
    double max_height_cm = 200.0;
    double feet_first_fraction = 0.5;
    double corruption_rate = 0.05;
    std::vector<Corruption> corruption_kinds{Corruption::constant_predictions,
                                             Corruption::shuffled_predictions, Corruption::wrong_slope};
    double noise_sigma_units = 1.0;
    double outlier_rate = 0.05;
    std::size_t rows = kMinImageSide;
    std::size_t cols = kMinImageSide;

    void validate() const;
};

struct CohortEntry {
    std::string id;
    std::uint64_t seed = 0;
    PhantomSpec spec;
    std::string volume_path; ///< relative to the manifest directory
    std::string truth_path;

    bool corrupted() const noexcept { return spec.corruption != Corruption::none; }
};

struct CohortManifest {
    std::uint64_t master_seed = 0;
    std::vector<CohortEntry> entries;
    std::string base_dir; ///< directory holding the files; not serialized
};

/// Draws specs for `count` phantoms. Exactly round(count * corruption_rate)
/// entries are corrupted, chosen from master_seed.
std::vector<CohortEntry> plan_cohort(std::size_t count, const CohortDistribution& dist,
                                     std::uint64_t master_seed);

/// Writes volumes, truth CSVs and manifest.json into out_dir.
CohortManifest generate_cohort(std::size_t count, const CohortDistribution& dist, std::uint64_t master_seed,
                               const std::string& out_dir, std::size_t jobs = 1);

nlohmann::json to_json(const CohortManifest& manifest);
CohortManifest manifest_from_json(const nlohmann::json& j, std::string base_dir);
CohortManifest load_manifest(const std::string& path);

inline constexpr const char* kManifestFile = "manifest.json";

} // namespace axloc

#endif
