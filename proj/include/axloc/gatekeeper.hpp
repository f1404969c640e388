#ifndef AXLOC_GATEKEEPER_HPP
#define AXLOC_GATEKEEPER_HPP

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "axloc/fitter.hpp"
#include "axloc/volume_io.hpp"

namespace axloc {

// Exclusion rules:
//   R0  RANSAC found no consensus (raised upstream of evaluate)
//   R1  fit score above max_fit_score_units
//   R2  inlier fraction below min_inlier_fraction
//   R3  slice spacing per normalized unit outside mm_per_unit_range
//   R4  slope magnitude at or below kMinSlope
inline constexpr const char* kRuleNoConsensus = "R0";
inline constexpr const char* kRuleFitScore = "R1";
inline constexpr const char* kRuleInlierFraction = "R2";
inline constexpr const char* kRuleSpacing = "R3";
inline constexpr const char* kRuleSlope = "R4";
inline constexpr std::array<const char*, 5> kAllRules = {"R0", "R1", "R2", "R3", "R4"};

inline constexpr double kMinSlope = 1e-6;

struct GateConfig {
    double max_fit_score_units = 2.0;
    double min_inlier_fraction = 0.6;
    double mm_per_unit_lo = 10.0;
    double mm_per_unit_hi = 30.0;
    bool require_known_spacing = false;

    void validate() const;
};

/// The subset of acquisition metadata the rules look at. Absent values are
/// allowed (service requests may omit them).
struct ScanMetadata {
    std::optional<double> spacing_between_slices_mm;
    std::optional<std::array<double, 2>> pixel_spacing_mm;
    Orientation orientation = Orientation::unknown;

    static ScanMetadata from(const VolumeMeta& meta);
};

struct ReliabilityVerdict {
    bool accepted = true;
    std::vector<std::string> triggered_rules;
    /// Measured value per evaluated rule, plus recorded pixel spacing.
    /// NaN marks a value that could not be measured.
    std::map<std::string, double> diagnostics;

    friend bool operator==(const ReliabilityVerdict&, const ReliabilityVerdict&) = default;
};

ReliabilityVerdict evaluate(const LinearMapping& mapping, const ScanMetadata& meta,
                            const GateConfig& config = {});
ReliabilityVerdict evaluate(const LinearMapping& mapping, const VolumeMeta& meta,
                            const GateConfig& config = {});

/// Verdict for a scan whose fit had no consensus; the diagnostic is the best
/// candidate's inlier count.
ReliabilityVerdict no_consensus_verdict(std::size_t best_inliers);

nlohmann::json to_json(const ReliabilityVerdict& verdict);

struct YieldSummary {
    std::size_t total = 0;
    std::size_t accepted = 0;
    double yield = 0.0;
    std::map<std::string, std::size_t> rule_counts; ///< every rule id, zero included
};

/// Throws ArgumentError on an empty list.
YieldSummary yield_report(std::span<const ReliabilityVerdict> verdicts);

} // namespace axloc

#endif
