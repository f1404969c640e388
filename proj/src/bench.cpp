#include "axloc/bench.hpp"

#include "axloc/errors.hpp"
#include "axloc/numeric.hpp"
#include "axloc/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace axloc {

namespace {

std::vector<LandmarkHit> landmark_hits(const LandmarkTable& table, std::span<const double> truth,
                                       std::span<const double> fused)
{
    std::vector<LandmarkHit> hits;
    if (truth.empty())
        return hits;
    const auto [lo_it, hi_it] = std::minmax_element(truth.begin(), truth.end());
    for (const auto& lm : table.entries()) {
        if (lm.position < *lo_it || lm.position > *hi_it)
            continue;
        std::size_t best = 0;
        for (std::size_t i = 1; i < truth.size(); ++i)
            if (std::abs(truth[i] - lm.position) < std::abs(truth[best] - lm.position))
                best = i;
        hits.push_back({lm.id, best, fused[best], truth[best]});
    }
    return hits;
}

ScanResult run_one(const CohortEntry& entry, const PhantomLoader& loader, const BenchOptions& options)
{
    ScanResult r;
    r.id = entry.id;
    r.corrupted = entry.corrupted();
    r.num_slices = entry.spec.num_slices;
    try {
        const Phantom phantom = loader(entry);
        if (phantom.volume.num_slices() != phantom.truth.size())
            throw Error(entry.id + ": truth has " + std::to_string(phantom.truth.size()) + " rows for " +
                        std::to_string(phantom.volume.num_slices()) + " slices");
        r.num_slices = phantom.volume.num_slices();
        const auto predictor = make_phantom_predictor(entry.spec);
        CountingPredictor counter(*predictor);

        const auto start = std::chrono::steady_clock::now();
        ScanLocalization loc;
        try {
            loc = localize_scan(phantom.volume, counter, options.sampler, options.ransac);
        } catch (const NoConsensusError& e) {
            r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            r.predictor_calls = counter.calls();
            r.status = ScanStatus::no_consensus;
            r.error = e.what();
            r.verdict = no_consensus_verdict(e.best_inliers());
            return r;
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        r.predictor_calls = counter.calls();
        r.status = ScanStatus::localized;
        r.verdict = evaluate(loc.mapping, phantom.volume.meta(), options.gate);

        if (!r.corrupted) {
            r.fused_errors = absolute_errors(loc.positions, phantom.truth);
            for (const auto& p : loc.mapping.sample) {
                r.raw_positions.push_back(p.position);
                r.raw_truth.push_back(phantom.truth[p.slice_index]);
            }
            r.raw_errors = absolute_errors(r.raw_positions, r.raw_truth);
            r.landmark_hits = landmark_hits(*options.landmarks, phantom.truth, loc.positions);
            if (options.keep_points) {
                r.truth = phantom.truth;
                r.fused = loc.positions;
            }
        }
        r.mapping = std::move(loc.mapping);
    } catch (const Error& e) {
        r.status = ScanStatus::failed;
        r.error = e.what();
        r.verdict = ReliabilityVerdict{false, {}, {}};
    }
    return r;
}

} // namespace

std::string_view to_string(Reference r) noexcept
{
    return r == Reference::truth ? "truth" : "group_mean";
}

std::vector<double> absolute_errors(std::span<const double> estimates, double group_mean)
{
    if (estimates.empty())
        throw ArgumentError("absolute_errors needs at least one estimate");
    std::vector<double> out(estimates.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::abs(estimates[i] - group_mean);
    return out;
}

std::vector<double> absolute_errors(std::span<const double> estimates, std::span<const double> truth)
{
    if (estimates.empty())
        throw ArgumentError("absolute_errors needs at least one estimate");
    if (estimates.size() != truth.size())
        throw ArgumentError("estimates and truth differ in length");
    std::vector<double> out(estimates.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::abs(estimates[i] - truth[i]);
    return out;
}

std::vector<double> absolute_errors_about_mean(std::span<const double> estimates)
{
    return absolute_errors(estimates, mean(estimates));
}

ErrorStats summarize(std::string group_id, std::span<const double> errors, std::span<const double> positions,
                     const BodyScale& scale)
{
    if (errors.empty())
        throw ArgumentError("summarize needs at least one error");
    if (errors.size() != positions.size())
        throw ArgumentError("errors and positions differ in length");
    ErrorStats s;
    s.group_id = std::move(group_id);
    s.count = errors.size();
    s.mean_position = mean(positions);
    s.mae_units = mean(errors);
    s.mdae_units = median(errors);
    s.mae_cm = units_to_cm(s.mae_units, scale);
    s.mdae_cm = units_to_cm(s.mdae_units, scale);
    return s;
}

PhantomLoader disk_loader(const CohortManifest& manifest)
{
    const std::filesystem::path base(manifest.base_dir);
    return [base](const CohortEntry& e) {
        Volume volume = load_volume((base / e.volume_path).string());
        const auto truth_file = load_predictions((base / e.truth_path).string());
        std::vector<double> truth;
        truth.reserve(truth_file.size());
        for (std::size_t i = 0; i < truth_file.size(); ++i) {
            if (truth_file.records()[i].slice_index != i)
                throw Error(e.truth_path + ": truth must list every slice from 0");
            truth.push_back(truth_file.records()[i].position);
        }
        return Phantom{std::move(volume), std::move(truth)};
    };
}

PhantomLoader memory_loader()
{
    return [](const CohortEntry& e) { return generate_phantom(e.spec, e.seed); };
}

BenchmarkReport run_benchmark(std::span<const CohortEntry> entries, const PhantomLoader& loader,
                              const BenchOptions& options)
{
    options.sampler.validate();
    options.ransac.validate();
    options.gate.validate();

    BenchmarkReport report;
    report.scans.resize(entries.size());
    parallel_for(entries.size(), options.jobs,
                 [&](std::size_t i) { report.scans[i] = run_one(entries[i], loader, options); });

    // Aggregation walks scans in entry order, so results do not depend on jobs.
    std::vector<double> fused_errors, fused_positions, raw_errors, raw_positions, seconds;
    std::vector<ReliabilityVerdict> clean_verdicts, corrupt_verdicts;
    std::map<std::string, std::vector<double>> lm_estimates, lm_truth_errors;
    std::vector<std::string> lm_order;
    for (const auto& lm : options.landmarks->entries())
        lm_order.push_back(lm.id);

    for (const auto& scan : report.scans) {
        (scan.corrupted ? corrupt_verdicts : clean_verdicts).push_back(scan.verdict);
        if (scan.status != ScanStatus::failed)
            seconds.push_back(scan.seconds);
        if (scan.corrupted || scan.status != ScanStatus::localized)
            continue;
        fused_errors.insert(fused_errors.end(), scan.fused_errors.begin(), scan.fused_errors.end());
        const auto& m = *scan.mapping;
        for (std::size_t i = 0; i < scan.num_slices; ++i)
            fused_positions.push_back(apply_mapping(m, i));
        raw_errors.insert(raw_errors.end(), scan.raw_errors.begin(), scan.raw_errors.end());
        raw_positions.insert(raw_positions.end(), scan.raw_positions.begin(), scan.raw_positions.end());
        for (const auto& hit : scan.landmark_hits) {
            lm_estimates[hit.landmark_id].push_back(hit.estimate);
            lm_truth_errors[hit.landmark_id].push_back(std::abs(hit.estimate - hit.truth));
        }
        std::vector<double> scan_positions(scan.num_slices);
        for (std::size_t i = 0; i < scan.num_slices; ++i)
            scan_positions[i] = apply_mapping(m, i);
        report.rows.push_back(summarize("truth/" + scan.id, scan.fused_errors, scan_positions, options.scale));
    }

    if (!fused_errors.empty()) {
        report.pooled_fused = summarize("truth/pooled_fused", fused_errors, fused_positions, options.scale);
        report.pooled_raw = summarize("truth/pooled_raw", raw_errors, raw_positions, options.scale);
        std::vector<ErrorStats> head{report.pooled_fused, report.pooled_raw};
        for (const auto& id : lm_order) {
            auto it = lm_estimates.find(id);
            if (it == lm_estimates.end())
                continue;
            head.push_back(summarize("truth/" + id, lm_truth_errors[id], it->second, options.scale));
        }
        for (const auto& id : lm_order) {
            auto it = lm_estimates.find(id);
            if (it == lm_estimates.end())
                continue;
            head.push_back(summarize("group_mean/" + id, absolute_errors_about_mean(it->second), it->second,
                                     options.scale));
        }
        report.rows.insert(report.rows.begin(), head.begin(), head.end());
    } else {
        report.pooled_fused.group_id = "truth/pooled_fused";
        report.pooled_raw.group_id = "truth/pooled_raw";
    }

    if (!seconds.empty()) {
        report.timing.mean_seconds = mean(seconds);
        report.timing.median_seconds = median(seconds);
        report.timing.max_seconds = *std::max_element(seconds.begin(), seconds.end());
    }
    if (!clean_verdicts.empty())
        report.yield_clean = yield_report(clean_verdicts);
    if (!corrupt_verdicts.empty())
        report.yield_corrupted = yield_report(corrupt_verdicts);
    return report;
}

BenchmarkReport run_cohort_benchmark(const CohortManifest& manifest, const BenchOptions& options)
{
    return run_benchmark(manifest.entries, disk_loader(manifest), options);
}

void write_report_csv(std::span<const ErrorStats> rows, std::ostream& out)
{
    out << kReportHeader << '\n';
    for (const auto& r : rows) {
        out << r.group_id << ',' << r.count;
        for (double v : {r.mean_position, r.mae_units, r.mdae_units, r.mae_cm, r.mdae_cm})
            out << ',' << format_decimal(v, 1);
        out << '\n';
    }
}

std::vector<ErrorStats> parse_report_csv(std::istream& in)
{
    using PK = ParseError::Kind;
    std::string line;
    std::size_t line_no = 1;
    const bool has_line = static_cast<bool>(std::getline(in, line));
    if (has_line && !line.empty() && line.back() == '\r')
        line.pop_back();
    if (!has_line || line != kReportHeader)
        throw ParseError(PK::missing_header, 1, "expected '" + std::string(kReportHeader) + "'");
    std::vector<ErrorStats> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ','))
            fields.push_back(f);
        if (fields.size() != 7)
            throw ParseError(PK::bad_field, line_no, "expected 7 fields");
        ErrorStats s;
        s.group_id = fields[0];
        double* targets[] = {&s.mean_position, &s.mae_units, &s.mdae_units, &s.mae_cm, &s.mdae_cm};
        if (!parse_index(fields[1], s.count))
            throw ParseError(PK::bad_field, line_no, "count '" + fields[1] + "'");
        for (std::size_t k = 0; k < 5; ++k)
            if (!parse_double(fields[k + 2], *targets[k]))
                throw ParseError(PK::bad_field, line_no, "value '" + fields[k + 2] + "'");
        rows.push_back(std::move(s));
    }
    return rows;
}

void write_report_table(std::span<const ErrorStats> rows, std::ostream& out)
{
    std::size_t width = 8;
    for (const auto& r : rows)
        width = std::max(width, r.group_id.size());
    out << std::left << std::setw(static_cast<int>(width)) << "group" << "  " << std::right << std::setw(8) << "count"
        << std::setw(10) << "mean pos" << std::setw(16) << "MAE [cm]" << std::setw(16) << "MdAE [cm]" << '\n';
    for (const auto& r : rows) {
        const std::string mae = format_fixed(r.mae_units, 2) + " [" + format_fixed(r.mae_cm, 2) + "]";
        const std::string mdae = format_fixed(r.mdae_units, 2) + " [" + format_fixed(r.mdae_cm, 2) + "]";
        out << std::left << std::setw(static_cast<int>(width)) << r.group_id << "  " << std::right << std::setw(8)
            << r.count << std::setw(10) << format_fixed(r.mean_position, 1) << std::setw(16) << mae << std::setw(16)
            << mdae << '\n';
    }
}

void write_report_table(const BenchmarkReport& report, std::ostream& out)
{
    std::vector<ErrorStats> head;
    for (const auto& r : report.rows)
        if (r.group_id.rfind("truth/phantom_", 0) != 0)
            head.push_back(r);
    out << "Reference modes: truth/* = error against ground truth, group_mean/* = dispersion about group mean\n";
    if (head.empty())
        out << "(no clean scans localized)\n";
    else
        write_report_table(head, out);

    std::size_t localized = 0, no_consensus = 0, failed = 0;
    for (const auto& s : report.scans) {
        localized += s.status == ScanStatus::localized;
        no_consensus += s.status == ScanStatus::no_consensus;
        failed += s.status == ScanStatus::failed;
    }
    out << "\nscans: " << report.scans.size() << " (localized " << localized << ", no consensus " << no_consensus
        << ", failed " << failed << ")\n";
    out << "time per scan [s]: mean " << format_fixed(report.timing.mean_seconds, 6) << ", median "
        << format_fixed(report.timing.median_seconds, 6) << ", max " << format_fixed(report.timing.max_seconds, 6)
        << '\n';
    auto yield_line = [&out](const char* label, const YieldSummary& y) {
        out << label << ": " << y.accepted << "/" << y.total << " accepted (" << format_fixed(100.0 * y.yield, 1)
            << "%)";
        for (const auto& [rule, n] : y.rule_counts)
            out << ' ' << rule << '=' << n;
        out << '\n';
    };
    if (report.yield_clean.total > 0)
        yield_line("clean yield", report.yield_clean);
    if (report.yield_corrupted)
        yield_line("corrupted yield", *report.yield_corrupted);
}

void write_scatter_svg(const BenchmarkReport& report, std::ostream& out)
{
    constexpr double size = 480.0;
    constexpr double margin = 40.0;
    constexpr std::size_t max_fused_points = 4000;
    auto x = [&](double v) { return margin + v / 100.0 * size; };
    auto y = [&](double v) { return margin + size - v / 100.0 * size; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * margin << "\" height=\""
        << size + 2 * margin << "\">\n";
    out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << size << "\" height=\"" << size
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << x(0) << "\" y1=\"" << y(0) << "\" x2=\"" << x(100) << "\" y2=\"" << y(100)
        << "\" stroke=\"#999\" stroke-dasharray=\"4\"/>\n";
    out << "<text x=\"" << margin + size / 2 << "\" y=\"" << size + 1.8 * margin
        << "\" text-anchor=\"middle\" font-size=\"12\">truth</text>\n";
    out << "<text x=\"12\" y=\"" << margin + size / 2
        << "\" font-size=\"12\" transform=\"rotate(-90 12," << margin + size / 2 << ")\">predicted</text>\n";

    std::size_t total_fused = 0;
    for (const auto& s : report.scans)
        total_fused += s.fused.size();
    const std::size_t stride = std::max<std::size_t>(1, total_fused / max_fused_points);

    out << "<g fill=\"#1f77b4\" fill-opacity=\"0.5\">\n";
    std::size_t k = 0;
    for (const auto& s : report.scans)
        for (std::size_t i = 0; i < s.fused.size(); ++i, ++k)
            if (k % stride == 0)
                out << "<circle cx=\"" << format_fixed(x(s.truth[i]), 2) << "\" cy=\"" << format_fixed(y(s.fused[i]), 2)
                    << "\" r=\"1\"/>\n";
    out << "</g>\n<g fill=\"#d62728\" fill-opacity=\"0.6\">\n";
    for (const auto& s : report.scans)
        for (std::size_t i = 0; i < s.raw_positions.size(); ++i)
            out << "<circle cx=\"" << format_fixed(x(s.raw_truth[i]), 2) << "\" cy=\""
                << format_fixed(y(s.raw_positions[i]), 2) << "\" r=\"1.5\"/>\n";
    out << "</g>\n</svg>\n";
}

} // namespace axloc
