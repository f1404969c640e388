#include "axloc/predictor.hpp"

#include "axloc/coords.hpp"
#include "axloc/errors.hpp"
#include "axloc/random.hpp"

namespace axloc {

SlicePrediction Predictor::predict(const Volume& volume, std::size_t slice_index) const
{
    if (slice_index >= volume.num_slices())
        throw ArgumentError("slice index " + std::to_string(slice_index) + " out of range for " +
                            std::to_string(volume.num_slices()) + " slices");
    const double raw = raw_position(volume, slice_index);
    if (!std::isfinite(raw))
        throw Error("predictor produced a non-finite position for slice " + std::to_string(slice_index));
    return {slice_index, clamp_position(raw)};
}

std::vector<SlicePrediction> predict_batch(const Predictor& predictor, const Volume& volume,
                                           std::span<const std::size_t> indices)
{
    for (std::size_t i : indices)
        if (i >= volume.num_slices())
            throw ArgumentError("slice index " + std::to_string(i) + " out of range for " +
                                std::to_string(volume.num_slices()) + " slices");
    std::vector<SlicePrediction> out;
    out.reserve(indices.size());
    for (std::size_t i : indices)
        out.push_back(predictor.predict(volume, i));
    return out;
}

void NoiseModel::validate() const
{
    if (!std::isfinite(sigma_units) || sigma_units < 0.0)
        throw ArgumentError("noise sigma must be finite and non-negative");
    if (!(outlier_rate >= 0.0 && outlier_rate <= 1.0))
        throw ArgumentError("outlier rate must lie in [0, 1]");
}

SyntheticOracle::SyntheticOracle(GroundTruth truth, NoiseModel noise)
    : truth_(std::move(truth)), noise_(noise)
{
    noise_.validate();
    if (const auto* line = std::get_if<TruthLine>(&truth_)) {
        if (!std::isfinite(line->slope) || !std::isfinite(line->intercept))
            throw ArgumentError("truth line must be finite");
    }
}

double SyntheticOracle::truth_at(std::size_t slice_index) const
{
    if (const auto* line = std::get_if<TruthLine>(&truth_))
        return line->at(slice_index);
    const auto& table = std::get<std::vector<double>>(truth_);
    if (slice_index >= table.size())
        throw MissingPredictionError(slice_index);
    return table[slice_index];
}

NoiseDraw SyntheticOracle::draw(std::size_t slice_index) const
{
    NoiseDraw d;
    d.truth = truth_at(slice_index);
    Rng rng(derive_seed(noise_.seed, slice_index));
    // Always consume the same variates so the inlier error at an index does
    // not depend on the outlier rate.
    const double outlier_u = rng.uniform01();
    const double replacement = rng.uniform(kMinPosition, kMaxPosition);
    const double error = noise_.sigma_units > 0.0 ? rng.laplace(noise_.laplace_scale()) : 0.0;
    d.outlier = outlier_u < noise_.outlier_rate;
    d.position = clamp_position(d.outlier ? replacement : d.truth + error);
    return d;
}

double SyntheticOracle::raw_position(const Volume&, std::size_t slice_index) const
{
    return draw(slice_index).position;
}

double FilePredictor::raw_position(const Volume&, std::size_t slice_index) const
{
    const double* p = predictions_.find(slice_index);
    if (p == nullptr)
        throw MissingPredictionError(slice_index);
    return *p;
}

double CountingPredictor::raw_position(const Volume& volume, std::size_t slice_index) const
{
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.predict(volume, slice_index).position;
}

std::unique_ptr<Predictor> make_synthetic_oracle(GroundTruth truth, NoiseModel noise)
{
    return std::make_unique<SyntheticOracle>(std::move(truth), noise);
}

std::unique_ptr<Predictor> make_file_predictor(PredictionFile predictions)
{
    return std::make_unique<FilePredictor>(std::move(predictions));
}

} // namespace axloc
