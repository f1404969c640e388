#include "doctest.h"

#include "axloc/errors.hpp"
#include "axloc/numeric.hpp"
#include "axloc/predictor.hpp"
#include "axloc/random.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>

using namespace axloc;
using axloc::test::make_volume;

TEST_CASE("noiseless oracle returns the truth line")
{
    const Volume vol = make_volume(200);
    const auto oracle = make_synthetic_oracle(TruthLine{0.05, 10.0}, NoiseModel::noiseless());
    CHECK(oracle->predict(vol, 100).position == doctest::Approx(15.0).epsilon(1e-15));
    CHECK(oracle->predict(vol, 100).slice_index == 100);
    CHECK(oracle->predict(vol, 0).position == 10.0);
}

TEST_CASE("predict rejects out-of-range indices")
{
    const Volume vol = make_volume(10);
    const auto oracle = make_synthetic_oracle(TruthLine{1.0, 0.0}, NoiseModel::noiseless());
    CHECK_THROWS_AS(oracle->predict(vol, 10), ArgumentError);
    const std::vector<std::size_t> idx{0, 3, 12};
    CHECK_THROWS_AS(predict_batch(*oracle, vol, idx), ArgumentError);
}

TEST_CASE("median absolute inlier error is about one unit at a fixed slice")
{
    // The same query under many seeds samples the per-query noise law.
    std::vector<double> errors;
    for (std::uint64_t seed = 0; seed < 100000; ++seed) {
        const SyntheticOracle oracle(TruthLine{0.05, 10.0}, NoiseModel{1.0, 0.05, seed});
        const NoiseDraw d = oracle.draw(100);
        CHECK(d.truth == doctest::Approx(15.0));
        if (!d.outlier)
            errors.push_back(std::abs(d.position - d.truth));
    }
    const double med = median(errors);
    CHECK(med >= 0.97);
    CHECK(med <= 1.03);
}

TEST_CASE("calibration over many slices")
{
    const SyntheticOracle oracle(TruthLine{0.0, 50.0}, NoiseModel{});
    std::vector<double> errors;
    for (std::size_t i = 0; i < 100000; ++i) {
        const auto d = oracle.draw(i);
        if (!d.outlier)
            errors.push_back(std::abs(d.position - d.truth));
    }
    CHECK(median(errors) >= 0.9);
    CHECK(median(errors) <= 1.1);
    CHECK(mean(errors) >= 1.25);
    CHECK(mean(errors) <= 1.55);
}

TEST_CASE("file-backed predictor is a lookup")
{
    const Volume vol = make_volume(200);
    const auto p = make_file_predictor(PredictionFile({{100, 14.2}, {0, 5.0}}));
    CHECK(p->predict(vol, 100).position == 14.2);
    CHECK(p->predict(vol, 0).position == 5.0);
    try {
        p->predict(vol, 1);
        FAIL("expected MissingPredictionError");
    } catch (const MissingPredictionError& e) {
        CHECK(e.index() == 1);
        CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
}

TEST_CASE("file-backed predictor clamps stored values")
{
    const Volume vol = make_volume(2);
    const auto p = make_file_predictor(PredictionFile({{0, -3.0}, {1, 104.0}}));
    CHECK(p->predict(vol, 0).position == 0.0);
    CHECK(p->predict(vol, 1).position == 100.0);
}

TEST_CASE("batch prediction")
{
    const Volume vol = make_volume(50);
    const auto identity = make_synthetic_oracle(TruthLine{1.0, 0.0}, NoiseModel::noiseless());
    const std::vector<std::size_t> idx{0, 1, 2};
    const auto out = predict_batch(*identity, vol, idx);
    REQUIRE(out.size() == 3);
    for (std::size_t k = 0; k < 3; ++k)
        CHECK(out[k] == SlicePrediction{k, static_cast<double>(k)});
    CHECK(predict_batch(*identity, vol, std::vector<std::size_t>{}).empty());
}

TEST_CASE("batch equals repeated predict on random indices")
{
    const Volume vol = make_volume(400);
    const auto noisy = make_synthetic_oracle(TruthLine{0.2, 5.0}, NoiseModel{1.0, 0.2, 77});
    Rng rng(4);
    std::vector<std::size_t> idx(30);
    for (auto& i : idx)
        i = rng.below(400);
    const auto batch = predict_batch(*noisy, vol, idx);
    REQUIRE(batch.size() == idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k)
        CHECK(batch[k] == noisy->predict(vol, idx[k]));
}

TEST_CASE("outlier rate extremes and Monte Carlo fraction")
{
    SUBCASE("all outliers are uniform on [0, 100]")
    {
        const SyntheticOracle oracle(TruthLine{0.0, 50.0}, NoiseModel{1.0, 1.0, 3});
        double lo = 100.0;
        double hi = 0.0;
        for (std::size_t i = 0; i < 10000; ++i) {
            const auto d = oracle.draw(i);
            CHECK(d.outlier);
            lo = std::min(lo, d.position);
            hi = std::max(hi, d.position);
        }
        CHECK(lo < 1.0);
        CHECK(hi > 99.0);
    }
    SUBCASE("rate 0.1")
    {
        const SyntheticOracle oracle(TruthLine{0.01, 20.0}, NoiseModel{1.0, 0.1, 12345});
        std::size_t outliers = 0;
        for (std::size_t i = 0; i < 10000; ++i)
            outliers += oracle.draw(i).outlier ? 1 : 0;
        const double fraction = static_cast<double>(outliers) / 10000.0;
        CHECK(fraction >= 0.09);
        CHECK(fraction <= 0.11);
    }
}

TEST_CASE("identical noise models give identical outputs")
{
    const Volume vol = make_volume(300);
    const NoiseModel noise{1.3, 0.07, 42};
    const auto a = make_synthetic_oracle(TruthLine{0.1, 20.0}, noise);
    const auto b = make_synthetic_oracle(TruthLine{0.1, 20.0}, noise);
    for (std::size_t i = 0; i < 300; ++i)
        CHECK(a->predict(vol, i) == b->predict(vol, i));
    // Query order does not matter.
    for (std::size_t i = 300; i-- > 0;)
        CHECK(a->predict(vol, i) == b->predict(vol, i));

    const auto c = make_synthetic_oracle(TruthLine{0.1, 20.0}, NoiseModel{1.3, 0.07, 43});
    std::size_t same = 0;
    for (std::size_t i = 0; i < 300; ++i)
        same += a->predict(vol, i) == c->predict(vol, i) ? 1 : 0;
    CHECK(same < 10);
}

TEST_CASE("outputs stay in [0, 100] for any noise parameters")
{
    Rng rng(8);
    const Volume vol = make_volume(100);
    for (int trial = 0; trial < 200; ++trial) {
        const NoiseModel noise{rng.uniform(0.0, 50.0), rng.uniform01(), rng.next()};
        const auto p = make_synthetic_oracle(TruthLine{rng.uniform(-2.0, 2.0), rng.uniform(-50.0, 150.0)}, noise);
        for (std::size_t i = 0; i < 100; ++i) {
            const double v = p->predict(vol, i).position;
            CHECK((v >= 0.0 && v <= 100.0));
        }
    }
}

TEST_CASE("tabulated ground truth")
{
    const SyntheticOracle oracle(std::vector<double>{3.0, 1.0, 2.0}, NoiseModel::noiseless());
    CHECK(oracle.truth_at(1) == 1.0);
    CHECK(oracle.draw(2).position == 2.0);
    CHECK_THROWS_AS(oracle.truth_at(3), MissingPredictionError);
}

TEST_CASE("noise model validation")
{
    CHECK_THROWS_AS(make_synthetic_oracle(TruthLine{}, NoiseModel{-1.0, 0.0, 0}), ArgumentError);
    CHECK_THROWS_AS(make_synthetic_oracle(TruthLine{}, NoiseModel{1.0, 1.5, 0}), ArgumentError);
    CHECK_THROWS_AS(make_synthetic_oracle(TruthLine{}, NoiseModel{NAN, 0.0, 0}), ArgumentError);
    CHECK(NoiseModel{}.laplace_scale() == doctest::Approx(1.4427).epsilon(1e-4));
}

TEST_CASE("counting predictor counts every call")
{
    const Volume vol = make_volume(40);
    const auto inner = make_synthetic_oracle(TruthLine{1.0, 0.0}, NoiseModel::noiseless());
    CountingPredictor counter(*inner);
    for (std::size_t i = 0; i < 7; ++i)
        CHECK(counter.predict(vol, i) == inner->predict(vol, i));
    CHECK(counter.calls() == 7);
    counter.reset();
    CHECK(counter.calls() == 0);
}
