// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "axloc/bench.hpp"
#include "axloc/cli.hpp"
#include "axloc/coords.hpp"
#include "axloc/errors.hpp"
#include "axloc/fitter.hpp"
#include "axloc/localize.hpp"
#include "axloc/numeric.hpp"
#include "axloc/parallel.hpp"
#include "axloc/phantom.hpp"
#include "axloc/predictor.hpp"
#include "axloc/service.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

using namespace axloc;
using nlohmann::json;

namespace {

constexpr std::uint64_t kMasterSeed = 7;

struct Outcome {
    bool passed = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    double budget_seconds; // <= 0: untimed
    std::function<Outcome()> check;
};

std::size_t worker_count()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

std::string fmt(double v, int digits = 3)
{
    return format_fixed(v, digits);
}

double median_of(std::vector<double> v)
{
    return median(v);
}

/// Volume whose voxels do not matter; one pixel per slice keeps it small.
Volume blank_volume(std::size_t slices, double spacing = 1.7, Orientation o = Orientation::head_first)
{
    VolumeMeta meta;
    meta.num_slices = slices;
    meta.rows = 1;
    meta.cols = 1;
    meta.spacing_between_slices_mm = spacing;
    meta.orientation = o;
    return Volume(meta, std::vector<std::int16_t>(slices, 0));
}

Outcome noise_calibration()
{
    // Constant truth mid-axis so clamping never touches the error. The bounds
    // concern the inlier error; outlier draws are counted and set aside.
    const SyntheticOracle oracle(TruthLine{0.0, 50.0}, NoiseModel{});
    std::vector<double> inlier_errs;
    std::vector<double> all_errs;
    constexpr std::size_t kDraws = 100000;
    for (std::size_t i = 0; i < kDraws; ++i) {
        const auto d = oracle.draw(i);
        const double e = std::abs(d.position - d.truth);
        all_errs.push_back(e);
        if (!d.outlier)
            inlier_errs.push_back(e);
    }
    const double mean_err = mean(inlier_errs);
    const double median_err = median_of(inlier_errs);
    const bool ok = median_err >= 0.9 && median_err <= 1.1 && mean_err >= 1.25 && mean_err <= 1.55;
    return {ok, "inlier median |e| " + fmt(median_err) + " (need 0.9..1.1), inlier mean |e| " + fmt(mean_err) +
                    " (need 1.25..1.55); " + std::to_string(kDraws - inlier_errs.size()) + " of " +
                    std::to_string(kDraws) + " draws were outliers (all draws: median " +
                    fmt(median_of(all_errs)) + ", mean " + fmt(mean(all_errs)) + ")"};
}

Outcome error_reduction()
{
    CohortDistribution dist;
    dist.corruption_rate = 0.0;
    const auto entries = plan_cohort(200, dist, kMasterSeed);

    BenchOptions opts;
    opts.jobs = worker_count();
    const auto report = run_benchmark(entries, memory_loader(), opts);

    // Raw per-slice errors over every slice, the same population the fused
    // figure is pooled over.
    std::vector<std::vector<double>> per_scan(entries.size());
    parallel_for(entries.size(), worker_count(), [&](std::size_t k) {
        const auto& spec = entries[k].spec;
        const Phantom ph = generate_phantom(spec, entries[k].seed);
        const auto predictor = make_phantom_predictor(spec);
        auto& out = per_scan[k];
        out.reserve(spec.num_slices);
        for (std::size_t i = 0; i < spec.num_slices; ++i)
            out.push_back(std::abs(predictor->predict(ph.volume, i).position - ph.truth[i]));
    });
    std::vector<double> raw_all;
    for (const auto& v : per_scan)
        raw_all.insert(raw_all.end(), v.begin(), v.end());
    const double raw_mdae = median_of(raw_all);
    const double fused_mdae = report.pooled_fused.mdae_units;

    const bool ok = report.pooled_fused.count > 0 && fused_mdae <= 0.6 && raw_mdae >= 0.9 && raw_mdae <= 1.1;
    return {ok, "fused MdAE " + fmt(fused_mdae) + " (need <= 0.6), raw MdAE " + fmt(raw_mdae) +
                    " (need 0.9..1.1; sampled slices only: " + fmt(report.pooled_raw.mdae_units) + "), " +
                    std::to_string(report.pooled_fused.count) + " fused slices, master seed " +
                    std::to_string(kMasterSeed)};
}

Outcome outlier_robustness()
{
    // Reference geometry: p(i) = 0.05 i + 10 over 1300 slices.
    constexpr std::size_t kSlices = 1300;
    constexpr double kSlope = 0.05;
    constexpr int kTrials = 1000;
    const auto indices = sample_indices(kSlices);
    std::vector<char> hit(kTrials, 0);
    parallel_for(kTrials, worker_count(), [&](std::size_t t) {
        const NoiseModel noise{1.0, 0.3, kMasterSeed * 1000003 + t};
        const SyntheticOracle oracle(TruthLine{kSlope, 10.0}, noise);
        std::vector<SlicePrediction> sample;
        for (std::size_t i : indices)
            sample.push_back({i, oracle.draw(i).position});
        RansacConfig cfg;
        cfg.seed = t;
        try {
            const auto m = fit_mapping(sample, cfg);
            hit[t] = std::abs(m.slope - kSlope) <= 0.05 * kSlope;
        } catch (const Error&) {
            hit[t] = 0;
        }
    });
    const auto good = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
    return {good >= 990, std::to_string(good) + "/" + std::to_string(kTrials) +
                             " slopes within 5% (need >= 990); 30 samples, 30% outliers, Laplace median 1.0"};
}

Outcome unit_conversion()
{
    const std::vector<std::pair<double, double>> table{{0.2, 0.34}, {0.4, 0.68}, {0.5, 0.85},
                                                       {0.6, 1.02}, {0.7, 1.19}, {0.8, 1.36},
                                                       {0.9, 1.53}, {1.0, 1.7},  {1.1, 1.87}};
    double worst = 0.0;
    for (const auto& [units, cm] : table)
        worst = std::max(worst, std::abs(units_to_cm(units, BodyScale{170.0}) - cm));
    std::ostringstream d;
    d << "max deviation " << worst << " over " << table.size() << " values (need <= 1e-9)";
    return {worst <= 1e-9, d.str()};
}

Outcome gatekeeper_yield()
{
    CohortDistribution dist; // 5% corrupted by default
    const auto entries = plan_cohort(2000, dist, kMasterSeed);
    BenchOptions opts;
    opts.jobs = worker_count();
    const auto report = run_benchmark(entries, memory_loader(), opts);
    const auto& clean = report.yield_clean;
    if (!report.yield_corrupted)
        return {false, "cohort has no corrupted entries"};
    const auto& bad = *report.yield_corrupted;
    const double rejected = 1.0 - bad.yield;
    const bool ok = clean.yield >= 0.975 && rejected >= 0.95;
    std::string rules;
    for (const auto& [rule, n] : clean.rule_counts)
        rules += " " + rule + "=" + std::to_string(n);
    return {ok, "clean accepted " + std::to_string(clean.accepted) + "/" + std::to_string(clean.total) + " = " +
                    fmt(100.0 * clean.yield, 2) + "% (need >= 97.5%), corrupted rejected " +
                    std::to_string(bad.total - bad.accepted) + "/" + std::to_string(bad.total) + " = " +
                    fmt(100.0 * rejected, 2) + "% (need >= 95%); clean rejections:" + rules};
}

Outcome size_invariance()
{
    std::string detail;
    bool ok = true;
    const SyntheticOracle oracle(TruthLine{0.005, 20.0}, NoiseModel::noiseless());
    for (std::size_t n : {10u, 30u, 300u, 10000u}) {
        const Volume v = blank_volume(n);
        CountingPredictor counter(oracle);
        localize_scan(v, counter);
        const std::size_t want = std::min<std::size_t>(n, 30);
        ok = ok && counter.calls() == want;
        detail += std::to_string(n) + " slices: " + std::to_string(counter.calls()) + " calls; ";
    }

    std::vector<SlicePrediction> sample;
    const SyntheticOracle noisy(TruthLine{0.005, 20.0}, NoiseModel{});
    for (std::size_t i : sample_indices(10000))
        sample.push_back({i, noisy.draw(i).position});
    double worst_ms = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto loc = localize_predictions(sample, 10000);
        const auto t1 = std::chrono::steady_clock::now();
        if (loc.positions.size() != 10000)
            ok = false;
        worst_ms = std::max(worst_ms, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    ok = ok && worst_ms < 50.0;
    detail += "fit+apply at 10000 slices " + fmt(worst_ms, 2) + " ms worst of 5 (need < 50 ms)";
    return {ok, detail};
}

int run_cli(const std::vector<std::string>& args, std::string& out)
{
    std::ostringstream o, e;
    const int code = cli::run(args, o, e);
    out = o.str();
    return code;
}

Outcome determinism()
{
    test::TempDir dir;
    PhantomSpec spec;
    spec.num_slices = 400;
    spec.truth_slope = 0.1;
    spec.truth_intercept = 12.0;
    spec.spacing_between_slices_mm = 1.7;
    const Phantom ph = generate_phantom(spec, 21);
    const std::string vol = dir.file("scan.axv");
    const std::string truth = dir.file("truth.csv");
    save_volume(ph.volume, vol);
    std::vector<PredictionRecord> recs;
    for (std::size_t i = 0; i < ph.truth.size(); ++i)
        recs.push_back({i, ph.truth[i]});
    save_predictions(PredictionFile(std::move(recs)), truth);

    const std::vector<std::string> args{"--json", "--seed", "7", "--noise-seed", "3", "localize", vol, "--truth",
                                        truth};
    std::string a, b;
    const int ca = run_cli(args, a);
    const int cb = run_cli(args, b);
    const bool ok = ca == cb && !a.empty() && a == b;
    return {ok, "two runs: exit " + std::to_string(ca) + "/" + std::to_string(cb) + ", " +
                    std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different")};
}

Outcome orientation_symmetry()
{
    std::mt19937_64 rng(kMasterSeed);
    double worst = 0.0;
    int cases = 0;
    for (int t = 0; t < 200; ++t) {
        std::uniform_int_distribution<std::size_t> len(2, 3000);
        const std::size_t n = len(rng);
        std::uniform_real_distribution<double> cov(5.0, 90.0);
        const double coverage = cov(rng);
        std::uniform_real_distribution<double> start(0.0, 100.0 - coverage);
        const double a = start(rng);
        const double slope = coverage / static_cast<double>(n - 1);

        const Volume fwd = blank_volume(n, 1.0, Orientation::head_first);
        const Volume rev = blank_volume(n, 1.0, Orientation::feet_first);
        const SyntheticOracle f(TruthLine{slope, a}, NoiseModel::noiseless());
        const SyntheticOracle r(TruthLine{-slope, a + coverage}, NoiseModel::noiseless());
        const auto lf = localize_scan(fwd, f);
        const auto lr = localize_scan(rev, r);
        worst = std::max(worst, std::abs(lf.mapping.slope + lr.mapping.slope));
        for (std::size_t i = 0; i < n; ++i)
            worst = std::max(worst, std::abs(lf.positions[i] - lr.positions[n - 1 - i]));
        ++cases;
    }
    std::ostringstream d;
    d << "max deviation " << worst << " over " << cases << " noiseless scan pairs (need <= 1e-9)";
    return {worst <= 1e-9, d.str()};
}

Outcome service_parity()
{
    test::TempDir dir;
    const LocalizationService service(Settings{}, LandmarkTable::builtin());
    HttpServer server(service);
    const int port = server.bind("127.0.0.1", 0);
    std::thread worker([&] { server.listen(); });
    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(5);
    for (int attempt = 0; attempt < 100 && !client.Get("/v1/health"); ++attempt)
        std::this_thread::sleep_for(std::chrono::milliseconds(20));

    CohortDistribution dist;
    dist.corruption_rate = 0.2;
    dist.max_slices = 800;
    const auto entries = plan_cohort(50, dist, kMasterSeed + 1);

    const char* keys[] = {"num_slices", "inlier_count", "slope", "intercept", "fit_score", "verdict",
                          "landmarks_in_scan"};
    int matched = 0;
    std::string first_mismatch;
    for (const auto& e : entries) {
        const Phantom ph = generate_phantom(e.spec, e.seed);
        const auto predictor = make_phantom_predictor(e.spec);
        std::vector<PredictionRecord> recs;
        json preds = json::array();
        for (std::size_t i = 0; i < e.spec.num_slices; ++i) {
            const double p = predictor->predict(ph.volume, i).position;
            recs.push_back({i, p});
            preds.push_back({{"index", i}, {"position", p}});
        }
        const std::string vol = dir.file(e.id + ".axv");
        const std::string csv = dir.file(e.id + ".csv");
        save_volume(ph.volume, vol);
        save_predictions(PredictionFile(std::move(recs)), csv);

        std::string cli_out;
        const int code = run_cli({"--json", "localize", vol, "--predictions", csv}, cli_out);

        const auto& m = ph.volume.meta();
        const json req{{"predictions", preds},
                       {"meta",
                        {{"num_slices", m.num_slices},
                         {"spacing_between_slices_mm", m.spacing_between_slices_mm},
                         {"pixel_spacing_mm", m.pixel_spacing_mm},
                         {"orientation", std::string(to_string(m.orientation))}}}};
        const auto res = client.Post("/v1/localize", req.dump(), "application/json");

        bool same = res && !cli_out.empty();
        if (same) {
            const json c = json::parse(cli_out);
            const json s = json::parse(res->body);
            for (const char* k : keys)
                same = same && c[k] == s[k];
            const int want_status = code == cli::kOk ? 200 : 422;
            same = same && res->status == want_status && (code == cli::kOk || code == cli::kRejected ||
                                                          code == cli::kNoConsensus);
        }
        if (same)
            ++matched;
        else if (first_mismatch.empty())
            first_mismatch = e.id;
    }
    server.stop();
    worker.join();
    std::string detail = std::to_string(matched) + "/50 fixtures identical between HTTP and CLI";
    if (!first_mismatch.empty())
        detail += " (first mismatch " + first_mismatch + ")";
    return {matched == 50, detail};
}

} // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {"noise-calibration", 5.0, noise_calibration},
        {"error-reduction", 60.0, error_reduction},
        {"outlier-robustness", 30.0, outlier_robustness},
        {"unit-conversion", 0.0, unit_conversion},
        {"gatekeeper-yield", 120.0, gatekeeper_yield},
        {"size-invariance", 0.0, size_invariance},
        {"determinism", 0.0, determinism},
        {"orientation-symmetry", 0.0, orientation_symmetry},
        {"service-parity", 0.0, service_parity},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool passed = o.passed;
        std::string timing = fmt(secs, 2) + " s";
        if (c.budget_seconds > 0.0) {
            timing += " of " + fmt(c.budget_seconds, 0) + " s";
            if (secs >= c.budget_seconds)
                passed = false;
        }
        failures += !passed;
        std::cout << (passed ? "PASS " : "FAIL ") << c.name << ": " << o.detail << " [" << timing << "]"
                  << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
