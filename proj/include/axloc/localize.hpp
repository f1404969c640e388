#ifndef AXLOC_LOCALIZE_HPP
#define AXLOC_LOCALIZE_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "axloc/config.hpp"
#include "axloc/coords.hpp"
#include "axloc/fitter.hpp"
#include "axloc/gatekeeper.hpp"

namespace axloc {

/// Localization plus gate verdict. `localization` is empty when RANSAC had no
/// consensus; the verdict then carries R0.
struct LocalizeOutcome {
    std::size_t num_slices = 0;
    std::optional<ScanLocalization> localization;
    ReliabilityVerdict verdict;
    std::size_t inlier_count = 0;
};

LocalizeOutcome localize_volume(const Volume& volume, const Predictor& predictor, const Settings& settings);

/// Same pipeline over already-computed predictions: the sampler picks its
/// indices when every one of them is present, otherwise the predictions are
/// fitted as given. Positions are clamped as a predictor would.
LocalizeOutcome localize_from_predictions(std::span<const SlicePrediction> predictions, std::size_t num_slices,
                                          const ScanMetadata& meta, const Settings& settings);

struct LandmarkInScan {
    std::string landmark_id;
    std::size_t slice_index = 0;
};

/// Landmarks whose position lies within the mapped range of the scan, each
/// with the nearest slice.
std::vector<LandmarkInScan> landmarks_in_scan(const LinearMapping& mapping, std::size_t num_slices,
                                              const LandmarkTable& table);

/// Per-slice positions rounded to three fractional digits.
double round_position(double p);

/// Stable machine-readable form. Keys: slope, intercept, fit_score,
/// inlier_count, num_slices, verdict, landmarks_in_scan and (optionally)
/// per_slice. Fit fields are null without consensus.
nlohmann::json to_json(const LocalizeOutcome& outcome, const LandmarkTable& table, bool per_slice);

} // namespace axloc

#endif
