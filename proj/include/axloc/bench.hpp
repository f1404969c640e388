#ifndef AXLOC_BENCH_HPP
#define AXLOC_BENCH_HPP

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "axloc/coords.hpp"
#include "axloc/fitter.hpp"
#include "axloc/gatekeeper.hpp"
#include "axloc/phantom.hpp"

namespace axloc {

/// How absolute errors are referenced: dispersion around the group mean
/// (annotated landmarks without ground truth) or distance to known truth.
enum class Reference { group_mean, truth };

std::string_view to_string(Reference r) noexcept;

struct ErrorStats {
    std::string group_id;
    std::size_t count = 0;
    double mean_position = 0.0;
    double mae_units = 0.0;
    double mdae_units = 0.0;
    double mae_cm = 0.0;
    double mdae_cm = 0.0;
};

std::vector<double> absolute_errors(std::span<const double> estimates, double group_mean);
std::vector<double> absolute_errors(std::span<const double> estimates, std::span<const double> truth);
/// Errors about the estimates' own mean.
std::vector<double> absolute_errors_about_mean(std::span<const double> estimates);

ErrorStats summarize(std::string group_id, std::span<const double> errors, std::span<const double> positions,
                     const BodyScale& scale = BodyScale{});

struct BenchOptions {
    SamplerConfig sampler;
    RansacConfig ransac;
    GateConfig gate;
    BodyScale scale;
    const LandmarkTable* landmarks = &LandmarkTable::builtin();
    std::size_t jobs = 1;
    /// Keep per-slice (truth, fused) pairs for plotting.
    bool keep_points = false;
};

enum class ScanStatus { localized, no_consensus, failed };

/// Fused estimate at the slice whose truth is closest to a landmark.
struct LandmarkHit {
    std::string landmark_id;
    std::size_t slice_index = 0;
    double estimate = 0.0;
    double truth = 0.0;
};

struct ScanResult {
    std::string id;
    std::size_t num_slices = 0;
    bool corrupted = false;
    ScanStatus status = ScanStatus::failed;
    std::string error; ///< set when status != localized
    std::optional<LinearMapping> mapping;
    ReliabilityVerdict verdict;
    std::size_t predictor_calls = 0;
    double seconds = 0.0;
    std::vector<double> fused_errors;  ///< every slice, against truth
    std::vector<double> raw_errors;    ///< sampled predictions, against truth
    std::vector<double> raw_truth;     ///< truth at sampled slices
    std::vector<double> raw_positions; ///< sampled predictions
    std::vector<LandmarkHit> landmark_hits;
    std::vector<double> truth;         ///< kept only with keep_points
    std::vector<double> fused;         ///< kept only with keep_points
};

struct TimingSummary {
    double mean_seconds = 0.0;
    double median_seconds = 0.0;
    double max_seconds = 0.0;
};

struct BenchmarkReport {
    std::vector<ScanResult> scans;
    std::vector<ErrorStats> rows; ///< group ids carry the reference mode prefix
    ErrorStats pooled_fused;
    ErrorStats pooled_raw;
    TimingSummary timing;
    YieldSummary yield_clean;
    std::optional<YieldSummary> yield_corrupted;
};

/// Produces the phantom (volume + truth) for a cohort entry.
using PhantomLoader = std::function<Phantom(const CohortEntry&)>;

/// Loader reading the files listed in an on-disk manifest.
PhantomLoader disk_loader(const CohortManifest& manifest);
/// Loader regenerating each phantom from its spec and seed.
PhantomLoader memory_loader();

/// Localizes every entry, gates it, and scores clean localized scans against
/// truth. Corrupted entries contribute only to the corrupted yield.
BenchmarkReport run_benchmark(std::span<const CohortEntry> entries, const PhantomLoader& loader,
                              const BenchOptions& options = {});
BenchmarkReport run_cohort_benchmark(const CohortManifest& manifest, const BenchOptions& options = {});

inline constexpr std::string_view kReportHeader = "group_id,count,mean_position,mae_units,mdae_units,mae_cm,mdae_cm";

void write_report_csv(std::span<const ErrorStats> rows, std::ostream& out);
std::vector<ErrorStats> parse_report_csv(std::istream& in);
void write_report_table(const BenchmarkReport& report, std::ostream& out);
void write_report_table(std::span<const ErrorStats> rows, std::ostream& out);

/// Predicted vs truth scatter: raw sampled predictions and fused positions.
void write_scatter_svg(const BenchmarkReport& report, std::ostream& out);

} // namespace axloc

#endif
