#ifndef AXLOC_FITTER_HPP
#define AXLOC_FITTER_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "axloc/predictor.hpp"
#include "axloc/volume_io.hpp"

namespace axloc {

struct SamplerConfig {
    std::size_t sample_count = 30;

    void validate() const;
};

struct RansacConfig {
    std::size_t iterations = 256;
    double inlier_threshold_units = 2.0;
    std::size_t min_inliers = 8;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Index -> position line fitted to a sample of slice predictions.
struct LinearMapping {
    double slope = 0.0;     ///< normalized units per slice
    double intercept = 0.0; ///< unclamped position of slice 0
    double fit_score = 0.0; ///< median |residual| over the whole sample
    std::vector<bool> inlier_mask;
    std::vector<SlicePrediction> sample;

    std::size_t inlier_count() const noexcept;
    double inlier_fraction() const noexcept;
    double line_at(std::size_t slice_index) const noexcept
    {
        return slope * static_cast<double>(slice_index) + intercept;
    }

    friend bool operator==(const LinearMapping&, const LinearMapping&) = default;
};

/// Evenly spaced slice indices, first and last slice always included. Returns
/// every index when the scan has no more slices than requested.
std::vector<std::size_t> sample_indices(std::size_t num_slices, const SamplerConfig& config = {});

/// Median absolute residual of `sample` against the line.
double fit_score(std::span<const SlicePrediction> sample, double slope, double intercept);

/// RANSAC over two-point candidate lines followed by a least-squares refit
/// on the winning consensus set.
///
/// The winner has the most inliers (|residual| <= threshold); ties go to the
/// smaller summed inlier residual, then to the earlier iteration. Candidates
/// through two samples at the same slice index are skipped. Consensus needs
/// min(min_inliers, sample size) inliers.
///
/// Throws DegenerateInputError with fewer than two distinct indices and
/// NoConsensusError when no candidate gathers enough support.
LinearMapping fit_mapping(std::span<const SlicePrediction> sample, const RansacConfig& config = {});

/// Clamped position of a slice under the mapping.
double apply_mapping(const LinearMapping& mapping, std::size_t slice_index);

struct ScanLocalization {
    LinearMapping mapping;
    std::vector<double> positions; ///< one per slice
};

ScanLocalization localize_scan(const Volume& volume, const Predictor& predictor,
                               const SamplerConfig& sampler = {}, const RansacConfig& ransac = {});

/// Fits the sample predictions for a scan of known length and maps every slice.
ScanLocalization localize_predictions(std::span<const SlicePrediction> sample, std::size_t num_slices,
                                      const RansacConfig& ransac = {});

struct SliceRange {
    std::size_t first = 0;
    std::size_t last = 0;

    friend bool operator==(const SliceRange&, const SliceRange&) = default;
};

/// Maximal run of slices whose mapped position lies in [lo, hi]; boundaries
/// round inward. Works for either slope sign.
std::optional<SliceRange> region_for_interval(const LinearMapping& mapping, std::size_t num_slices,
                                              double lo, double hi);

} // namespace axloc

#endif
