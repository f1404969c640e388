#include "axloc/cli.hpp"

#include "axloc/bench.hpp"
#include "axloc/config.hpp"
#include "axloc/errors.hpp"
#include "axloc/localize.hpp"
#include "axloc/numeric.hpp"
#include "axloc/service.hpp"
#include "axloc/version.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

namespace axloc::cli {

namespace {

using nlohmann::json;

template <typename T>
struct Flag {
    T value{};
    CLI::Option* opt = nullptr;

    bool given() const { return opt != nullptr && opt->count() > 0; }
    void apply(T& target) const
    {
        if (given())
            target = value;
    }
};

/// Flags that override config-file settings; each maps onto one config key.
struct SettingFlags {
    std::string config_path;
    Flag<std::uint64_t> seed;
    Flag<std::string> landmarks;
    Flag<bool> json;
    Flag<double> height_cm;
    Flag<std::size_t> samples;
    Flag<std::size_t> ransac_iters;
    Flag<double> inlier_threshold;
    Flag<std::size_t> min_inliers;
    Flag<double> max_fit_score;
    Flag<double> min_inlier_fraction;
    Flag<double> mm_per_unit_min;
    Flag<double> mm_per_unit_max;
    Flag<bool> require_known_spacing;
    Flag<double> noise_sigma;
    Flag<double> outlier_rate;
    Flag<std::uint64_t> noise_seed;
    Flag<std::size_t> count;
    Flag<std::string> out_dir;
    Flag<double> corruption_rate;
    Flag<std::size_t> min_slices;
    Flag<std::size_t> max_slices;
    Flag<std::size_t> jobs;
    Flag<std::string> bind;
    Flag<int> port;

    void register_on(CLI::App& app)
    {
        app.add_option("--config", config_path, "JSON config file (falls back to $AXLOC_CONFIG)");
        seed.opt = app.add_option("--seed", seed.value, "RANSAC seed; master seed for phantom cohorts");
        landmarks.opt = app.add_option("--landmarks", landmarks.value, "landmark table JSON overriding the built-in one");
        json.opt = app.add_flag("--json", json.value, "machine-readable output");
        height_cm.opt = app.add_option("--height-cm", height_cm.value, "body height for unit/cm conversion");
        samples.opt = app.add_option("--samples", samples.value, "slices sampled per scan");
        ransac_iters.opt = app.add_option("--ransac-iters", ransac_iters.value, "RANSAC iterations");
        inlier_threshold.opt = app.add_option("--inlier-threshold", inlier_threshold.value, "inlier threshold [units]");
        min_inliers.opt = app.add_option("--min-inliers", min_inliers.value, "inliers needed for consensus");
        max_fit_score.opt = app.add_option("--max-fit-score", max_fit_score.value, "R1 threshold [units]");
        min_inlier_fraction.opt =
            app.add_option("--min-inlier-fraction", min_inlier_fraction.value, "R2 threshold");
        mm_per_unit_min.opt = app.add_option("--mm-per-unit-min", mm_per_unit_min.value, "R3 lower bound");
        mm_per_unit_max.opt = app.add_option("--mm-per-unit-max", mm_per_unit_max.value, "R3 upper bound");
        require_known_spacing.opt = app.add_flag("--require-known-spacing", require_known_spacing.value,
                                                 "reject scans without slice spacing");
        noise_sigma.opt = app.add_option("--noise-sigma", noise_sigma.value, "synthetic median |error| [units]");
        outlier_rate.opt = app.add_option("--outlier-rate", outlier_rate.value, "synthetic outlier rate");
        noise_seed.opt = app.add_option("--noise-seed", noise_seed.value, "synthetic predictor seed");
        count.opt = app.add_option("--count", count.value, "phantoms to generate");
        out_dir.opt = app.add_option("--out", out_dir.value, "cohort output directory");
        corruption_rate.opt = app.add_option("--corruption-rate", corruption_rate.value, "fraction of corrupted phantoms");
        min_slices.opt = app.add_option("--min-slices", min_slices.value, "smallest phantom");
        max_slices.opt = app.add_option("--max-slices", max_slices.value, "largest phantom");
        jobs.opt = app.add_option("--jobs", jobs.value, "worker threads");
        bind.opt = app.add_option("--bind", bind.value, "listen address");
        port.opt = app.add_option("--port", port.value, "listen port");
    }

    Settings resolve() const
    {
        Settings s;
        std::string path = config_path;
        if (path.empty())
            if (const char* env = std::getenv("AXLOC_CONFIG"); env != nullptr && *env != '\0')
                path = env;
        if (!path.empty())
            apply_config(s, load_json_file(path));

        seed.apply(s.seed);
        if (landmarks.given())
            s.landmarks_path = landmarks.value;
        json.apply(s.json);
        height_cm.apply(s.height_cm);
        samples.apply(s.sampler.sample_count);
        ransac_iters.apply(s.ransac.iterations);
        inlier_threshold.apply(s.ransac.inlier_threshold_units);
        min_inliers.apply(s.ransac.min_inliers);
        max_fit_score.apply(s.gate.max_fit_score_units);
        min_inlier_fraction.apply(s.gate.min_inlier_fraction);
        mm_per_unit_min.apply(s.gate.mm_per_unit_lo);
        mm_per_unit_max.apply(s.gate.mm_per_unit_hi);
        require_known_spacing.apply(s.gate.require_known_spacing);
        noise_sigma.apply(s.noise.sigma_units);
        outlier_rate.apply(s.noise.outlier_rate);
        noise_seed.apply(s.noise.seed);
        count.apply(s.phantom_count);
        out_dir.apply(s.phantom_out);
        corruption_rate.apply(s.cohort.corruption_rate);
        min_slices.apply(s.cohort.min_slices);
        max_slices.apply(s.cohort.max_slices);
        jobs.apply(s.jobs);
        bind.apply(s.bind);
        port.apply(s.port);

        s.sync_seed();
        s.cohort.noise_sigma_units = s.noise.sigma_units;
        s.cohort.outlier_rate = s.noise.outlier_rate;
        s.validate();
        return s;
    }
};

LandmarkTable active_landmarks(const Settings& s)
{
    return s.landmarks_path ? LandmarkTable::load(*s.landmarks_path) : LandmarkTable::builtin();
}

struct PredictorArgs {
    std::string predictions_path;
    std::string truth_path;
};

std::unique_ptr<Predictor> resolve_predictor(const PredictorArgs& a, const Volume& volume, const Settings& s)
{
    if (!a.predictions_path.empty() && !a.truth_path.empty())
        throw ArgumentError("give either --predictions or --truth, not both");
    if (!a.predictions_path.empty())
        return make_file_predictor(load_predictions(a.predictions_path));
    if (!a.truth_path.empty()) {
        const auto truth = load_predictions(a.truth_path);
        std::vector<double> table(volume.num_slices());
        if (truth.size() != table.size())
            throw ArgumentError(a.truth_path + ": truth must list every one of the " + std::to_string(table.size()) +
                                " slices");
        for (std::size_t i = 0; i < table.size(); ++i) {
            if (truth.records()[i].slice_index != i)
                throw ArgumentError(a.truth_path + ": truth must list every slice from 0");
            table[i] = truth.records()[i].position;
        }
        return make_synthetic_oracle(std::move(table), s.noise);
    }
    throw ArgumentError("a predictor is required: --predictions <csv> or --truth <csv>");
}

int outcome_exit(const LocalizeOutcome& o)
{
    if (!o.localization)
        return kNoConsensus;
    return o.verdict.accepted ? kOk : kRejected;
}

void print_verdict(const ReliabilityVerdict& v, std::ostream& out)
{
    out << "verdict     " << (v.accepted ? "accepted" : "rejected");
    if (!v.triggered_rules.empty()) {
        out << " (";
        for (std::size_t k = 0; k < v.triggered_rules.size(); ++k) {
            const auto& rule = v.triggered_rules[k];
            out << (k ? ", " : "") << rule;
            auto it = v.diagnostics.find(rule);
            if (it != v.diagnostics.end())
                out << '=' << format_fixed(it->second, 6);
        }
        out << ')';
    }
    out << '\n';
}

// --- localize --------------------------------------------------------------

struct LocalizeArgs {
    std::string volume_path;
    PredictorArgs predictor;
    bool csv = false;
    std::string fit_csv;
};

void write_fit_csv(const LinearMapping& m, const std::string& path)
{
    std::ofstream f(path, std::ios::trunc);
    if (!f)
        throw IoError(path, "cannot open for writing");
    f << "slice_index,predicted,fitted,inlier\n";
    for (std::size_t k = 0; k < m.sample.size(); ++k)
        f << m.sample[k].slice_index << ',' << format_fixed(m.sample[k].position, 3) << ','
          << format_fixed(apply_mapping(m, m.sample[k].slice_index), 3) << ',' << (m.inlier_mask[k] ? 1 : 0) << '\n';
    if (!f)
        throw IoError(path, "write failed");
}

int cmd_localize(const Settings& s, const LocalizeArgs& a, std::ostream& out)
{
    const auto table = active_landmarks(s);
    const Volume volume = load_volume(a.volume_path);
    const auto predictor = resolve_predictor(a.predictor, volume, s);
    const LocalizeOutcome o = localize_volume(volume, *predictor, s);

    if (!a.fit_csv.empty() && o.localization)
        write_fit_csv(o.localization->mapping, a.fit_csv);

    if (s.json) {
        out << to_json(o, table, true).dump() << '\n';
    } else if (a.csv) {
        if (o.localization) {
            out << kPredictionHeader << '\n';
            for (std::size_t i = 0; i < o.localization->positions.size(); ++i)
                out << i << ',' << format_fixed(o.localization->positions[i], 3) << '\n';
        }
    } else {
        out << "volume      " << a.volume_path << " (" << o.num_slices << " slices)\n";
        if (o.localization) {
            const auto& m = o.localization->mapping;
            out << "slope       " << format_fixed(m.slope, 6) << " units/slice\n";
            out << "intercept   " << format_fixed(m.intercept, 3) << '\n';
            out << "fit score   " << format_fixed(m.fit_score, 3) << '\n';
            out << "inliers     " << o.inlier_count << '/' << m.sample.size() << '\n';
            out << "range       " << format_fixed(o.localization->positions.front(), 3) << " .. "
                << format_fixed(o.localization->positions.back(), 3) << '\n';
            out << "landmarks  ";
            const auto marks = landmarks_in_scan(m, o.num_slices, table);
            if (marks.empty())
                out << " none";
            for (const auto& l : marks)
                out << ' ' << l.landmark_id << '@' << l.slice_index;
            out << '\n';
        } else {
            out << "no consensus (best candidate: " << o.inlier_count << " inliers)\n";
        }
        print_verdict(o.verdict, out);
    }
    return outcome_exit(o);
}

// --- region ----------------------------------------------------------------

struct RegionArgs {
    std::string volume_path;
    std::string mapping_path;
    PredictorArgs predictor;
    std::string from;
    std::string to;
    std::size_t num_slices = 0;
};

double resolve_bound(const std::string& text, const LandmarkTable& table)
{
    double v = 0.0;
    if (parse_double(text, v))
        return v;
    return table.position(text);
}

int cmd_region(const Settings& s, const RegionArgs& a, std::ostream& out)
{
    const auto table = active_landmarks(s);
    const double lo = resolve_bound(a.from, table);
    const double hi = resolve_bound(a.to, table);
    if (!(lo < hi))
        throw ArgumentError("--from (" + format_decimal(lo, 1) + ") must lie before --to (" + format_decimal(hi, 1) + ")");

    LinearMapping mapping;
    std::size_t num_slices = a.num_slices;
    if (!a.mapping_path.empty()) {
        const json j = load_json_file(a.mapping_path);
        if (!j.is_object() || !j.contains("slope") || !j.contains("intercept"))
            throw ParseError(ParseError::Kind::bad_json, 0, a.mapping_path + ": expected slope and intercept");
        if (j["slope"].is_null())
            throw DegenerateMappingError(a.mapping_path + ": mapping has no fitted line");
        if (!j["slope"].is_number() || !j["intercept"].is_number())
            throw ParseError(ParseError::Kind::bad_json, 0, a.mapping_path + ": slope and intercept must be numbers");
        mapping.slope = j["slope"].get<double>();
        mapping.intercept = j["intercept"].get<double>();
        if (num_slices == 0) {
            if (j.contains("num_slices") && j["num_slices"].is_number_unsigned())
                num_slices = j["num_slices"].get<std::size_t>();
            else if (j.contains("per_slice") && j["per_slice"].is_array())
                num_slices = j["per_slice"].size();
        }
        if (num_slices == 0)
            throw ArgumentError("slice count unknown: pass --num-slices or include num_slices in the mapping");
    } else if (!a.volume_path.empty()) {
        const Volume volume = load_volume(a.volume_path);
        const auto predictor = resolve_predictor(a.predictor, volume, s);
        const auto o = localize_volume(volume, *predictor, s);
        if (!o.localization)
            throw NoConsensusError(o.inlier_count, std::min(s.ransac.min_inliers, s.sampler.sample_count));
        mapping = o.localization->mapping;
        num_slices = volume.num_slices();
    } else {
        throw ArgumentError("region needs a volume or --mapping");
    }

    const auto range = region_for_interval(mapping, num_slices, lo, hi);
    if (s.json) {
        json j{{"from", lo}, {"to", hi}, {"first_slice", nullptr}, {"last_slice", nullptr}};
        if (range) {
            j["first_slice"] = range->first;
            j["last_slice"] = range->last;
        }
        out << j.dump() << '\n';
    } else if (range) {
        out << range->first << ".." << range->last << '\n';
    } else {
        out << "none\n";
    }
    return kOk;
}

// --- phantom / bench / report ----------------------------------------------

int cmd_phantom(const Settings& s, std::ostream& out)
{
    const auto manifest = generate_cohort(s.phantom_count, s.cohort, s.seed, s.phantom_out, s.jobs);
    std::size_t corrupted = 0;
    for (const auto& e : manifest.entries)
        corrupted += e.corrupted();
    const std::string manifest_path = s.phantom_out + "/" + kManifestFile;
    if (s.json)
        out << json{{"count", manifest.entries.size()}, {"corrupted", corrupted}, {"master_seed", s.seed},
                    {"manifest", manifest_path}}
                   .dump()
            << '\n';
    else
        out << "wrote " << manifest.entries.size() << " phantoms (" << corrupted << " corrupted) to " << manifest_path
            << '\n';
    return kOk;
}

json stats_json(const ErrorStats& e)
{
    return {{"group_id", e.group_id}, {"count", e.count},     {"mean_position", e.mean_position},
            {"mae_units", e.mae_units}, {"mdae_units", e.mdae_units}, {"mae_cm", e.mae_cm},
            {"mdae_cm", e.mdae_cm}};
}

json yield_json(const YieldSummary& y)
{
    return {{"total", y.total}, {"accepted", y.accepted}, {"yield", y.yield}, {"rule_counts", y.rule_counts}};
}

struct BenchArgs {
    std::string manifest;
    std::string report;
    std::string plot;
};

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body)
{
    std::ofstream f(path, std::ios::trunc);
    if (!f)
        throw IoError(path, "cannot open for writing");
    body(f);
    if (!f)
        throw IoError(path, "write failed");
}

int cmd_bench(const Settings& s, const BenchArgs& a, std::ostream& out)
{
    const auto table = active_landmarks(s);
    const auto manifest = load_manifest(a.manifest.empty() ? s.phantom_out : a.manifest);
    BenchOptions opts;
    opts.sampler = s.sampler;
    opts.ransac = s.ransac;
    opts.gate = s.gate;
    opts.scale = BodyScale{s.height_cm};
    opts.landmarks = &table;
    opts.jobs = s.jobs;
    opts.keep_points = !a.plot.empty();
    const auto report = run_cohort_benchmark(manifest, opts);

    if (!a.report.empty())
        write_file(a.report, [&](std::ostream& f) { write_report_csv(report.rows, f); });
    if (!a.plot.empty())
        write_file(a.plot, [&](std::ostream& f) { write_scatter_svg(report, f); });

    if (s.json) {
        auto rows = json::array();
        for (const auto& r : report.rows)
            rows.push_back(stats_json(r));
        json j{{"pooled_fused", stats_json(report.pooled_fused)},
               {"pooled_raw", stats_json(report.pooled_raw)},
               {"timing",
                {{"mean_seconds", report.timing.mean_seconds},
                 {"median_seconds", report.timing.median_seconds},
                 {"max_seconds", report.timing.max_seconds}}},
               {"yield_clean", report.yield_clean.total ? yield_json(report.yield_clean) : json(nullptr)},
               {"yield_corrupted", report.yield_corrupted ? yield_json(*report.yield_corrupted) : json(nullptr)},
               {"rows", rows}};
        out << j.dump() << '\n';
    } else {
        write_report_table(report, out);
    }
    return kOk;
}

struct ReportArgs {
    std::string estimates;
    std::string truth;
    bool group_mean = false;
    std::string group_id = "all";
    std::string report;
};

int cmd_report(const Settings& s, const ReportArgs& a, std::ostream& out)
{
    if (a.truth.empty() == !a.group_mean)
        throw ArgumentError("report needs exactly one of --truth <csv> or --group-mean");
    const auto estimates = load_predictions(a.estimates);
    std::vector<double> positions;
    for (const auto& r : estimates.records())
        positions.push_back(r.position);
    if (positions.empty())
        throw ArgumentError(a.estimates + ": no estimates");

    std::vector<double> errors;
    std::string group;
    if (a.group_mean) {
        errors = absolute_errors_about_mean(positions);
        group = "group_mean/" + a.group_id;
    } else {
        const auto truth = load_predictions(a.truth);
        std::vector<double> ref;
        for (const auto& r : estimates.records()) {
            const double* t = truth.find(r.slice_index);
            if (t == nullptr)
                throw MissingPredictionError(r.slice_index);
            ref.push_back(*t);
        }
        errors = absolute_errors(positions, ref);
        group = "truth/" + a.group_id;
    }
    const ErrorStats stats = summarize(group, errors, positions, BodyScale{s.height_cm});
    const std::vector<ErrorStats> rows{stats};
    if (!a.report.empty())
        write_file(a.report, [&](std::ostream& f) { write_report_csv(rows, f); });
    if (s.json)
        out << stats_json(stats).dump() << '\n';
    else
        write_report_table(rows, out);
    return kOk;
}

int cmd_serve(const Settings& s, std::ostream& out)
{
    LocalizationService service(s, active_landmarks(s));
    HttpServer server(service);
    const int port = server.bind(s.bind, s.port);
    out << "axloc " << kVersion << " listening on http://" << s.bind << ':' << port << std::endl;
    server.listen();
    return kOk;
}

int report_error(std::ostream& err, const std::exception& e, int code)
{
    err << "axloc: error: " << e.what() << '\n';
    return code;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Axial CT scan localization: map every slice to a normalized body position", "axloc"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    SettingFlags flags;
    flags.register_on(app);

    LocalizeArgs loc;
    auto* localize = app.add_subcommand("localize", "localize one scan");
    localize->fallthrough();
    localize->add_option("volume", loc.volume_path, "AXV1 volume")->required();
    localize->add_option("--predictions", loc.predictor.predictions_path, "per-slice predictions CSV");
    localize->add_option("--truth", loc.predictor.truth_path, "truth CSV driving the synthetic predictor");
    localize->add_flag("--csv", loc.csv, "print per-slice positions as CSV");
    localize->add_option("--fit-csv", loc.fit_csv, "write sampled vs fitted positions to a CSV file");

    RegionArgs reg;
    auto* region = app.add_subcommand("region", "slice range covering an anatomical interval");
    region->fallthrough();
    region->add_option("volume", reg.volume_path, "AXV1 volume");
    region->add_option("--mapping", reg.mapping_path, "mapping JSON (localize --json output)");
    region->add_option("--predictions", reg.predictor.predictions_path, "per-slice predictions CSV");
    region->add_option("--truth", reg.predictor.truth_path, "truth CSV driving the synthetic predictor");
    region->add_option("--from", reg.from, "landmark id or position")->required();
    region->add_option("--to", reg.to, "landmark id or position")->required();
    region->add_option("--num-slices", reg.num_slices, "slice count when the mapping file lacks it");

    auto* phantom = app.add_subcommand("phantom", "generate a synthetic cohort");
    phantom->fallthrough();

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "benchmark a cohort against ground truth");
    bench->fallthrough();
    bench->add_option("--manifest", bench_args.manifest, "cohort manifest or directory (default: --out)");
    bench->add_option("--report", bench_args.report, "write the report CSV here");
    bench->add_option("--plot", bench_args.plot, "write a predicted-vs-truth SVG scatter here");

    ReportArgs rep;
    auto* report = app.add_subcommand("report", "error statistics for a set of estimates");
    report->fallthrough();
    report->add_option("--estimates", rep.estimates, "estimates CSV (slice_index,position)")->required();
    report->add_option("--truth", rep.truth, "truth CSV");
    report->add_flag("--group-mean", rep.group_mean, "reference errors to the estimates' mean");
    report->add_option("--group-id", rep.group_id, "label for the statistics row");
    report->add_option("--report", rep.report, "write the report CSV here");

    auto* serve = app.add_subcommand("serve", "serve the JSON HTTP API");
    serve->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        const Settings settings = flags.resolve();
        if (localize->parsed())
            return cmd_localize(settings, loc, out);
        if (region->parsed())
            return cmd_region(settings, reg, out);
        if (phantom->parsed())
            return cmd_phantom(settings, out);
        if (bench->parsed())
            return cmd_bench(settings, bench_args, out);
        if (report->parsed())
            return cmd_report(settings, rep, out);
        if (serve->parsed())
            return cmd_serve(settings, out);
    } catch (const NoConsensusError& e) {
        return report_error(err, e, kNoConsensus);
    } catch (const ParseError& e) {
        return report_error(err, e, kParseError);
    } catch (const VolumeFormatError& e) {
        return report_error(err, e, kParseError);
    } catch (const MissingPredictionError& e) {
        return report_error(err, e, kParseError);
    } catch (const ArgumentError& e) {
        return report_error(err, e, kUsageError);
    } catch (const LookupError& e) {
        return report_error(err, e, kUsageError);
    } catch (const DegenerateMappingError& e) {
        return report_error(err, e, kUsageError);
    } catch (const DegenerateInputError& e) {
        return report_error(err, e, kUsageError);
    } catch (const Error& e) {
        return report_error(err, e, kIoError);
    }
    return kUsageError;
}

} // namespace axloc::cli
