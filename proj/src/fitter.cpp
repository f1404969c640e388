#include "axloc/fitter.hpp"

#include "axloc/coords.hpp"
#include "axloc/errors.hpp"
#include "axloc/numeric.hpp"
#include "axloc/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace axloc {

namespace {

// Absorbs rounding in the analytic inversion of region bounds.
constexpr double kBoundaryEps = 1e-9;

struct Candidate {
    std::size_t inliers = 0;
    double residual_sum = std::numeric_limits<double>::infinity();
    double slope = 0.0;
    double intercept = 0.0;
    bool valid = false;
};

bool better(const Candidate& a, const Candidate& best)
{
    if (!best.valid)
        return true;
    if (a.inliers != best.inliers)
        return a.inliers > best.inliers;
    return a.residual_sum < best.residual_sum;
}

std::pair<double, double> least_squares(std::span<const SlicePrediction> sample, const std::vector<bool>& use)
{
    double n = 0.0;
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (std::size_t k = 0; k < sample.size(); ++k) {
        if (!use[k])
            continue;
        n += 1.0;
        mean_x += static_cast<double>(sample[k].slice_index);
        mean_y += sample[k].position;
    }
    mean_x /= n;
    mean_y /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k = 0; k < sample.size(); ++k) {
        if (!use[k])
            continue;
        const double dx = static_cast<double>(sample[k].slice_index) - mean_x;
        sxx += dx * dx;
        sxy += dx * (sample[k].position - mean_y);
    }
    const double slope = sxy / sxx;
    return {slope, mean_y - slope * mean_x};
}

} // namespace

void SamplerConfig::validate() const
{
    if (sample_count < 2)
        throw ArgumentError("sample_count must be at least 2");
}

void RansacConfig::validate() const
{
    if (iterations < 1)
        throw ArgumentError("RANSAC iterations must be at least 1");
    if (min_inliers < 2)
        throw ArgumentError("min_inliers must be at least 2");
    if (!(inlier_threshold_units > 0.0) || !std::isfinite(inlier_threshold_units))
        throw ArgumentError("inlier threshold must be finite and positive");
}

std::size_t LinearMapping::inlier_count() const noexcept
{
    return static_cast<std::size_t>(std::count(inlier_mask.begin(), inlier_mask.end(), true));
}

double LinearMapping::inlier_fraction() const noexcept
{
    return inlier_mask.empty() ? 0.0
                               : static_cast<double>(inlier_count()) / static_cast<double>(inlier_mask.size());
}

std::vector<std::size_t> sample_indices(std::size_t num_slices, const SamplerConfig& config)
{
    config.validate();
    if (num_slices == 0)
        throw ArgumentError("cannot sample an empty scan");
    std::vector<std::size_t> out;
    if (num_slices <= config.sample_count) {
        out.resize(num_slices);
        for (std::size_t i = 0; i < num_slices; ++i)
            out[i] = i;
        return out;
    }
    // round(j * (n-1) / (k-1)), half up, in exact integer arithmetic. The step
    // exceeds one, so indices are distinct.
    const std::size_t span = num_slices - 1;
    const std::size_t steps = config.sample_count - 1;
    out.reserve(config.sample_count);
    for (std::size_t j = 0; j <= steps; ++j)
        out.push_back((2 * j * span + steps) / (2 * steps));
    return out;
}

double fit_score(std::span<const SlicePrediction> sample, double slope, double intercept)
{
    std::vector<double> residuals;
    residuals.reserve(sample.size());
    for (const auto& p : sample)
        residuals.push_back(std::abs(p.position - (slope * static_cast<double>(p.slice_index) + intercept)));
    return median(residuals);
}

LinearMapping fit_mapping(std::span<const SlicePrediction> sample, const RansacConfig& config)
{
    config.validate();
    const std::size_t n = sample.size();
    {
        bool distinct = false;
        for (std::size_t k = 1; k < n && !distinct; ++k)
            distinct = sample[k].slice_index != sample[0].slice_index;
        if (!distinct)
            throw DegenerateInputError("need at least two distinct slice indices to fit a line, got " +
                                       std::to_string(n) + " samples");
    }
    for (const auto& p : sample)
        if (!std::isfinite(p.position))
            throw ArgumentError("sample positions must be finite");

    Rng rng(config.seed);
    Candidate best;
    for (std::size_t it = 0; it < config.iterations; ++it) {
        const auto a = static_cast<std::size_t>(rng.below(n));
        auto b = static_cast<std::size_t>(rng.below(n - 1));
        if (b >= a)
            ++b;
        const auto& pa = sample[a];
        const auto& pb = sample[b];
        if (pa.slice_index == pb.slice_index)
            continue;
        Candidate c;
        c.slope = (pb.position - pa.position) /
                  (static_cast<double>(pb.slice_index) - static_cast<double>(pa.slice_index));
        c.intercept = pa.position - c.slope * static_cast<double>(pa.slice_index);
        c.residual_sum = 0.0;
        for (const auto& p : sample) {
            const double r = std::abs(p.position - (c.slope * static_cast<double>(p.slice_index) + c.intercept));
            if (r <= config.inlier_threshold_units) {
                ++c.inliers;
                c.residual_sum += r;
            }
        }
        c.valid = true;
        if (better(c, best))
            best = c;
    }

    const std::size_t required = std::min(config.min_inliers, n);
    if (!best.valid || best.inliers < required)
        throw NoConsensusError(best.valid ? best.inliers : 0, required);

    LinearMapping m;
    m.sample.assign(sample.begin(), sample.end());
    m.inlier_mask.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double r = std::abs(sample[k].position -
                                  (best.slope * static_cast<double>(sample[k].slice_index) + best.intercept));
        m.inlier_mask[k] = r <= config.inlier_threshold_units;
    }
    std::tie(m.slope, m.intercept) = least_squares(sample, m.inlier_mask);
    m.fit_score = fit_score(sample, m.slope, m.intercept);
    return m;
}

double apply_mapping(const LinearMapping& mapping, std::size_t slice_index)
{
    return clamp_position(mapping.line_at(slice_index));
}

ScanLocalization localize_predictions(std::span<const SlicePrediction> sample, std::size_t num_slices,
                                      const RansacConfig& ransac)
{
    ScanLocalization out;
    out.mapping = fit_mapping(sample, ransac);
    out.positions.resize(num_slices);
    for (std::size_t i = 0; i < num_slices; ++i)
        out.positions[i] = apply_mapping(out.mapping, i);
    return out;
}

ScanLocalization localize_scan(const Volume& volume, const Predictor& predictor,
                               const SamplerConfig& sampler, const RansacConfig& ransac)
{
    const auto indices = sample_indices(volume.num_slices(), sampler);
    const auto sample = predict_batch(predictor, volume, indices);
    return localize_predictions(sample, volume.num_slices(), ransac);
}

std::optional<SliceRange> region_for_interval(const LinearMapping& mapping, std::size_t num_slices,
                                              double lo, double hi)
{
    if (!(lo < hi))
        throw ArgumentError("region interval requires lo < hi");
    if (mapping.slope == 0.0 || !std::isfinite(mapping.slope))
        throw DegenerateMappingError("cannot invert a mapping with zero slope");
    if (num_slices == 0)
        return std::nullopt;

    // Mapped positions are clamped, so bounds at the coordinate limits admit
    // everything beyond them.
    const double inf = std::numeric_limits<double>::infinity();
    const double lo_eff = lo <= kMinPosition ? -inf : lo;
    const double hi_eff = hi >= kMaxPosition ? inf : hi;

    double a = (lo_eff - mapping.intercept) / mapping.slope;
    double b = (hi_eff - mapping.intercept) / mapping.slope;
    if (a > b)
        std::swap(a, b);

    const double last_index = static_cast<double>(num_slices - 1);
    const double first = std::max(0.0, std::ceil(a - kBoundaryEps));
    const double last = std::min(last_index, std::floor(b + kBoundaryEps));
    if (first > last)
        return std::nullopt;
    return SliceRange{static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
}

} // namespace axloc
