#include "axloc/localize.hpp"

#include "axloc/errors.hpp"

#include <algorithm>
#include <cmath>

namespace axloc {

namespace {

LocalizeOutcome finish(std::span<const SlicePrediction> sample, std::size_t num_slices, const ScanMetadata& meta,
                       const Settings& settings)
{
    LocalizeOutcome out;
    out.num_slices = num_slices;
    try {
        out.localization = localize_predictions(sample, num_slices, settings.ransac);
    } catch (const NoConsensusError& e) {
        out.inlier_count = e.best_inliers();
        out.verdict = no_consensus_verdict(e.best_inliers());
        return out;
    }
    out.inlier_count = out.localization->mapping.inlier_count();
    out.verdict = evaluate(out.localization->mapping, meta, settings.gate);
    return out;
}

} // namespace

LocalizeOutcome localize_volume(const Volume& volume, const Predictor& predictor, const Settings& settings)
{
    const auto indices = sample_indices(volume.num_slices(), settings.sampler);
    const auto sample = predict_batch(predictor, volume, indices);
    return finish(sample, volume.num_slices(), ScanMetadata::from(volume.meta()), settings);
}

LocalizeOutcome localize_from_predictions(std::span<const SlicePrediction> predictions, std::size_t num_slices,
                                          const ScanMetadata& meta, const Settings& settings)
{
    if (num_slices == 0)
        throw ArgumentError("num_slices must be at least 1");
    std::vector<SlicePrediction> sorted(predictions.begin(), predictions.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.slice_index < b.slice_index; });
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        if (sorted[k].slice_index >= num_slices)
            throw ArgumentError("prediction index " + std::to_string(sorted[k].slice_index) +
                                " outside a scan of " + std::to_string(num_slices) + " slices");
        if (k > 0 && sorted[k].slice_index == sorted[k - 1].slice_index)
            throw ArgumentError("duplicate prediction index " + std::to_string(sorted[k].slice_index));
        if (!std::isfinite(sorted[k].position))
            throw ArgumentError("prediction positions must be finite");
        sorted[k].position = clamp_position(sorted[k].position);
    }

    std::vector<SlicePrediction> sample;
    bool covered = true;
    for (std::size_t i : sample_indices(num_slices, settings.sampler)) {
        auto it = std::lower_bound(sorted.begin(), sorted.end(), i,
                                   [](const SlicePrediction& p, std::size_t idx) { return p.slice_index < idx; });
        if (it == sorted.end() || it->slice_index != i) {
            covered = false;
            break;
        }
        sample.push_back(*it);
    }
    return finish(covered ? sample : sorted, num_slices, meta, settings);
}

std::vector<LandmarkInScan> landmarks_in_scan(const LinearMapping& mapping, std::size_t num_slices,
                                              const LandmarkTable& table)
{
    std::vector<LandmarkInScan> out;
    if (num_slices == 0 || mapping.slope == 0.0)
        return out;
    const double a = apply_mapping(mapping, 0);
    const double b = apply_mapping(mapping, num_slices - 1);
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    const double last = static_cast<double>(num_slices - 1);
    for (const auto& lm : table.entries()) {
        if (lm.position < lo || lm.position > hi)
            continue;
        const double exact = (lm.position - mapping.intercept) / mapping.slope;
        const double index = std::clamp(std::round(exact), 0.0, last);
        out.push_back({lm.id, static_cast<std::size_t>(index)});
    }
    return out;
}

double round_position(double p)
{
    return std::round(p * 1000.0) / 1000.0;
}

nlohmann::json to_json(const LocalizeOutcome& outcome, const LandmarkTable& table, bool per_slice)
{
    using nlohmann::json;
    json j;
    j["num_slices"] = outcome.num_slices;
    j["inlier_count"] = outcome.inlier_count;
    j["verdict"] = to_json(outcome.verdict);
    if (outcome.localization) {
        const auto& m = outcome.localization->mapping;
        j["slope"] = m.slope;
        j["intercept"] = m.intercept;
        j["fit_score"] = m.fit_score;
        auto marks = json::array();
        for (const auto& l : landmarks_in_scan(m, outcome.num_slices, table))
            marks.push_back({{"landmark_id", l.landmark_id}, {"slice_index", l.slice_index}});
        j["landmarks_in_scan"] = marks;
        if (per_slice) {
            auto positions = json::array();
            for (double p : outcome.localization->positions)
                positions.push_back(round_position(p));
            j["per_slice"] = positions;
        }
    } else {
        j["slope"] = nullptr;
        j["intercept"] = nullptr;
        j["fit_score"] = nullptr;
        j["landmarks_in_scan"] = json::array();
        if (per_slice)
            j["per_slice"] = nullptr;
    }
    return j;
}

} // namespace axloc
