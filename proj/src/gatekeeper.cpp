#include "axloc/gatekeeper.hpp"

#include "axloc/errors.hpp"

#include <cmath>
#include <limits>

namespace axloc {

void GateConfig::validate() const
{
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(max_fit_score_units))
        throw ArgumentError("max_fit_score_units must be finite and positive");
    if (!(min_inlier_fraction > 0.0 && min_inlier_fraction <= 1.0))
        throw ArgumentError("min_inlier_fraction must lie in (0, 1]");
    if (!positive(mm_per_unit_lo) || !positive(mm_per_unit_hi) || !(mm_per_unit_lo < mm_per_unit_hi))
        throw ArgumentError("mm_per_unit range must be positive with lo < hi");
}

ScanMetadata ScanMetadata::from(const VolumeMeta& meta)
{
    return {meta.spacing_between_slices_mm, meta.pixel_spacing_mm, meta.orientation};
}

ReliabilityVerdict evaluate(const LinearMapping& mapping, const ScanMetadata& meta, const GateConfig& config)
{
    config.validate();
    ReliabilityVerdict v;
    auto trigger = [&v](const char* rule) { v.triggered_rules.emplace_back(rule); };

    v.diagnostics[kRuleFitScore] = mapping.fit_score;
    if (!(mapping.fit_score <= config.max_fit_score_units))
        trigger(kRuleFitScore);

    const double fraction = mapping.inlier_fraction();
    v.diagnostics[kRuleInlierFraction] = fraction;
    if (!(fraction >= config.min_inlier_fraction))
        trigger(kRuleInlierFraction);

    const double abs_slope = std::abs(mapping.slope);
    if (meta.spacing_between_slices_mm) {
        const double mm_per_unit = abs_slope > 0.0 ? *meta.spacing_between_slices_mm / abs_slope
                                                   : std::numeric_limits<double>::infinity();
        v.diagnostics[kRuleSpacing] = mm_per_unit;
        if (!(mm_per_unit >= config.mm_per_unit_lo && mm_per_unit <= config.mm_per_unit_hi))
            trigger(kRuleSpacing);
    } else if (config.require_known_spacing) {
        v.diagnostics[kRuleSpacing] = std::numeric_limits<double>::quiet_NaN();
        trigger(kRuleSpacing);
    }

    v.diagnostics[kRuleSlope] = abs_slope;
    if (!(abs_slope > kMinSlope))
        trigger(kRuleSlope);

    if (meta.pixel_spacing_mm) {
        v.diagnostics["pixel_spacing_row_mm"] = (*meta.pixel_spacing_mm)[0];
        v.diagnostics["pixel_spacing_col_mm"] = (*meta.pixel_spacing_mm)[1];
    }

    v.accepted = v.triggered_rules.empty();
    return v;
}

ReliabilityVerdict evaluate(const LinearMapping& mapping, const VolumeMeta& meta, const GateConfig& config)
{
    return evaluate(mapping, ScanMetadata::from(meta), config);
}

ReliabilityVerdict no_consensus_verdict(std::size_t best_inliers)
{
    ReliabilityVerdict v;
    v.accepted = false;
    v.triggered_rules.emplace_back(kRuleNoConsensus);
    v.diagnostics[kRuleNoConsensus] = static_cast<double>(best_inliers);
    return v;
}

nlohmann::json to_json(const ReliabilityVerdict& verdict)
{
    nlohmann::json diag = nlohmann::json::object();
    for (const auto& [key, value] : verdict.diagnostics) {
        if (std::isfinite(value))
            diag[key] = value;
        else
            diag[key] = nullptr;
    }
    return {{"accepted", verdict.accepted}, {"triggered_rules", verdict.triggered_rules}, {"diagnostics", diag}};
}

YieldSummary yield_report(std::span<const ReliabilityVerdict> verdicts)
{
    if (verdicts.empty())
        throw ArgumentError("yield report needs at least one verdict");
    YieldSummary s;
    for (const char* rule : kAllRules)
        s.rule_counts[rule] = 0;
    s.total = verdicts.size();
    for (const auto& v : verdicts) {
        if (v.accepted)
            ++s.accepted;
        for (const auto& rule : v.triggered_rules)
            ++s.rule_counts[rule];
    }
    s.yield = static_cast<double>(s.accepted) / static_cast<double>(s.total);
    return s;
}

} // namespace axloc
