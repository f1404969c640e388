#ifndef AXLOC_PREDICTOR_HPP
#define AXLOC_PREDICTOR_HPP

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <variant>
#include <vector>

#include "axloc/volume_io.hpp"

namespace axloc {

struct SlicePrediction {
    std::size_t slice_index = 0;
    double position = 0.0;

    friend bool operator==(const SlicePrediction&, const SlicePrediction&) = default;
};

/// Per-slice position predictor. Implementations are immutable after
/// construction and safe to query from several threads.
class Predictor {
public:
    virtual ~Predictor() = default;

    /// Position of one slice, clamped to [0, 100]. Throws ArgumentError when
    /// the index is outside the volume.
    SlicePrediction predict(const Volume& volume, std::size_t slice_index) const;

protected:
    virtual double raw_position(const Volume& volume, std::size_t slice_index) const = 0;
};

/// Element-wise predict; any invalid index fails the whole batch.
std::vector<SlicePrediction> predict_batch(const Predictor& predictor, const Volume& volume,
                                           std::span<const std::size_t> indices);

/// Inlier error is Laplace with median absolute value `sigma_units`
/// (scale sigma/ln 2); with probability `outlier_rate` the prediction is
/// replaced by a uniform draw over [0, 100].
struct NoiseModel {
    double sigma_units = 1.0;
    double outlier_rate = 0.05;
    std::uint64_t seed = 0;

    double laplace_scale() const noexcept { return sigma_units / std::numbers::ln2; }
    void validate() const;

    static NoiseModel noiseless(std::uint64_t seed = 0) { return {0.0, 0.0, seed}; }
};

struct TruthLine {
    double slope = 0.0;
    double intercept = 0.0;

    double at(std::size_t slice_index) const noexcept
    {
        return slope * static_cast<double>(slice_index) + intercept;
    }
};

/// Ground truth as either an analytic line or a per-slice table.
using GroundTruth = std::variant<TruthLine, std::vector<double>>;

/// One synthetic draw, split so tests can separate inlier noise from outliers.
struct NoiseDraw {
    double position = 0.0; ///< clamped output
    double truth = 0.0;
    bool outlier = false;
};

/// Noisy stand-in for a slice classifier. Randomness for each query is
/// derived from (seed, slice_index), so results do not depend on query order.
class SyntheticOracle final : public Predictor {
public:
    SyntheticOracle(GroundTruth truth, NoiseModel noise);

    NoiseDraw draw(std::size_t slice_index) const;
    const NoiseModel& noise() const noexcept { return noise_; }
    double truth_at(std::size_t slice_index) const;

protected:
    double raw_position(const Volume& volume, std::size_t slice_index) const override;

private:
    GroundTruth truth_;
    NoiseModel noise_;
};

/// Lookup into precomputed predictions (offline classifier output).
class FilePredictor final : public Predictor {
public:
    explicit FilePredictor(PredictionFile predictions) : predictions_(std::move(predictions)) {}

    const PredictionFile& predictions() const noexcept { return predictions_; }

protected:
    double raw_position(const Volume& volume, std::size_t slice_index) const override;

private:
    PredictionFile predictions_;
};

/// Forwards to another predictor and counts calls.
class CountingPredictor final : public Predictor {
public:
    explicit CountingPredictor(const Predictor& inner) : inner_(inner) {}

    std::size_t calls() const noexcept { return calls_.load(std::memory_order_relaxed); }
    void reset() noexcept { calls_.store(0, std::memory_order_relaxed); }

protected:
    double raw_position(const Volume& volume, std::size_t slice_index) const override;

private:
    const Predictor& inner_;
    mutable std::atomic<std::size_t> calls_{0};
};

std::unique_ptr<Predictor> make_synthetic_oracle(GroundTruth truth, NoiseModel noise);
std::unique_ptr<Predictor> make_file_predictor(PredictionFile predictions);

} // namespace axloc

#endif
