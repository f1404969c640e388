#include "axloc/phantom.hpp"

#include "axloc/coords.hpp"
#include "axloc/errors.hpp"
#include "axloc/parallel.hpp"
#include "axloc/random.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace axloc {

namespace fs = std::filesystem;

namespace {

constexpr double kMinLine = -20.0;
constexpr double kMaxLine = 120.0;
constexpr std::int16_t kMinHu = -1000;
constexpr std::uint32_t kHuSpan = 3001; // [-1000, 2000]
constexpr double kWrongSlopeFactor = 3.0;

// Independent streams hanging off a phantom's noise seed.
enum Stream : std::uint64_t { kConstantStream = 101, kShuffleStream = 102, kWrongSlopeStream = 103 };

std::string phantom_id(std::size_t i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "phantom_%05zu", i);
    return buf;
}

} // namespace

std::string_view to_string(Corruption c) noexcept
{
    switch (c) {
    case Corruption::none: return "none";
    case Corruption::constant_predictions: return "constant_predictions";
    case Corruption::shuffled_predictions: return "shuffled_predictions";
    case Corruption::wrong_slope: return "wrong_slope";
    }
    return "none";
}

Corruption parse_corruption(std::string_view name)
{
    for (auto c : {Corruption::none, Corruption::constant_predictions, Corruption::shuffled_predictions,
                   Corruption::wrong_slope})
        if (to_string(c) == name)
            return c;
    throw LookupError(std::string(name), "corruption");
}

void PhantomSpec::validate() const
{
    if (num_slices < 1)
        throw ArgumentError("phantom needs at least one slice");
    if (!std::isfinite(truth_slope) || !std::isfinite(truth_intercept))
        throw ArgumentError("phantom truth line must be finite");
    const double first = truth_intercept;
    const double last = truth_slope * static_cast<double>(num_slices - 1) + truth_intercept;
    if (std::min(first, last) < kMinLine || std::max(first, last) > kMaxLine)
        throw ArgumentError("phantom truth line leaves [-20, 120]");
    noise.validate();
    meta().validate();
}

VolumeMeta PhantomSpec::meta() const
{
    VolumeMeta m;
    m.num_slices = num_slices;
    m.rows = rows;
    m.cols = cols;
    m.spacing_between_slices_mm = spacing_between_slices_mm;
    m.pixel_spacing_mm = pixel_spacing_mm;
    m.orientation = orientation;
    return m;
}

nlohmann::json to_json(const PhantomSpec& s)
{
    return {
        {"num_slices", s.num_slices},
        {"rows", s.rows},
        {"cols", s.cols},
        {"truth_slope", s.truth_slope},
        {"truth_intercept", s.truth_intercept},
        {"noise", {{"sigma_units", s.noise.sigma_units}, {"outlier_rate", s.noise.outlier_rate}, {"seed", s.noise.seed}}},
        {"spacing_between_slices_mm", s.spacing_between_slices_mm},
        {"pixel_spacing_mm", {s.pixel_spacing_mm[0], s.pixel_spacing_mm[1]}},
        {"orientation", std::string(to_string(s.orientation))},
        {"corruption", std::string(to_string(s.corruption))},
    };
}

PhantomSpec phantom_spec_from_json(const nlohmann::json& j)
{
    try {
        PhantomSpec s;
        s.num_slices = j.at("num_slices").get<std::size_t>();
        s.rows = j.at("rows").get<std::size_t>();
        s.cols = j.at("cols").get<std::size_t>();
        s.truth_slope = j.at("truth_slope").get<double>();
        s.truth_intercept = j.at("truth_intercept").get<double>();
        const auto& n = j.at("noise");
        s.noise.sigma_units = n.at("sigma_units").get<double>();
        s.noise.outlier_rate = n.at("outlier_rate").get<double>();
        s.noise.seed = n.at("seed").get<std::uint64_t>();
        s.spacing_between_slices_mm = j.at("spacing_between_slices_mm").get<double>();
        s.pixel_spacing_mm = {j.at("pixel_spacing_mm").at(0).get<double>(), j.at("pixel_spacing_mm").at(1).get<double>()};
        s.orientation = parse_orientation(j.at("orientation").get<std::string>());
        s.corruption = parse_corruption(j.at("corruption").get<std::string>());
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(ParseError::Kind::bad_json, 0, std::string("phantom spec: ") + e.what());
    }
}

std::vector<double> truth_positions(const PhantomSpec& spec)
{
    std::vector<double> out(spec.num_slices);
    const auto line = spec.truth_line();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = clamp_position(line.at(i));
    return out;
}

Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed)
{
    spec.validate();
    const VolumeMeta meta = spec.meta();
    std::vector<std::int16_t> voxels(meta.voxel_count());
    Rng rng(seed);
    std::size_t i = 0;
    while (i < voxels.size()) {
        std::uint64_t word = rng.next();
        for (int lane = 0; lane < 4 && i < voxels.size(); ++lane, word >>= 16) {
            const auto chunk = static_cast<std::uint32_t>(word & 0xFFFF);
            voxels[i++] = static_cast<std::int16_t>(kMinHu + static_cast<std::int32_t>((chunk * kHuSpan) >> 16));
        }
    }
    return Phantom{Volume(meta, std::move(voxels)), truth_positions(spec)};
}

std::unique_ptr<Predictor> make_phantom_predictor(const PhantomSpec& spec)
{
    spec.validate();
    const auto line = spec.truth_line();
    switch (spec.corruption) {
    case Corruption::none:
        return make_synthetic_oracle(line, spec.noise);
    case Corruption::constant_predictions: {
        Rng rng(derive_seed(spec.noise.seed, kConstantStream));
        return make_synthetic_oracle(TruthLine{0.0, rng.uniform(kMinPosition, kMaxPosition)},
                                     NoiseModel::noiseless(spec.noise.seed));
    }
    case Corruption::shuffled_predictions: {
        std::vector<std::size_t> perm(spec.num_slices);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        Rng rng(derive_seed(spec.noise.seed, kShuffleStream));
        for (std::size_t k = perm.size(); k > 1; --k)
            std::swap(perm[k - 1], perm[rng.below(k)]);
        std::vector<double> table(spec.num_slices);
        for (std::size_t k = 0; k < table.size(); ++k)
            table[k] = line.at(perm[k]);
        return make_synthetic_oracle(std::move(table), spec.noise);
    }
    case Corruption::wrong_slope: {
        Rng rng(derive_seed(spec.noise.seed, kWrongSlopeStream));
        const double factor = rng.bernoulli(0.5) ? kWrongSlopeFactor : 1.0 / kWrongSlopeFactor;
        const double mid = 0.5 * static_cast<double>(spec.num_slices - 1);
        const double centre = line.slope * mid + line.intercept;
        const double slope = line.slope * factor;
        return make_synthetic_oracle(TruthLine{slope, centre - slope * mid}, spec.noise);
    }
    }
    throw ArgumentError("unhandled corruption kind");
}

void CohortDistribution::validate() const
{
    if (min_slices < 2 || min_slices > max_slices)
        throw ArgumentError("cohort slice range must satisfy 2 <= min <= max");
    if (!(min_coverage_units > 0.0 && min_coverage_units <= max_coverage_units && max_coverage_units <= 100.0))
        throw ArgumentError("cohort coverage range must lie in (0, 100]");
    if (!(min_height_cm > 0.0 && min_height_cm <= max_height_cm))
        throw ArgumentError("cohort height range must be positive");
    if (!(feet_first_fraction >= 0.0 && feet_first_fraction <= 1.0))
        throw ArgumentError("feet_first_fraction must lie in [0, 1]");
    if (!(corruption_rate >= 0.0 && corruption_rate <= 1.0))
        throw ArgumentError("corruption_rate must lie in [0, 1]");
    if (corruption_rate > 0.0 && corruption_kinds.empty())
        throw ArgumentError("corruption requested without corruption kinds");
    for (auto k : corruption_kinds)
        if (k == Corruption::none)
            throw ArgumentError("'none' is not a corruption kind");
    NoiseModel{noise_sigma_units, outlier_rate, 0}.validate();
}

std::vector<CohortEntry> plan_cohort(std::size_t count, const CohortDistribution& dist, std::uint64_t master_seed)
{
    dist.validate();
    std::vector<CohortEntry> entries(count);

    // Exact corruption count, placed by a seeded shuffle.
    const auto n_corrupt = static_cast<std::size_t>(std::llround(static_cast<double>(count) * dist.corruption_rate));
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng selector(derive_seed(master_seed, 0xC0));
    for (std::size_t k = order.size(); k > 1; --k)
        std::swap(order[k - 1], order[selector.below(k)]);
    std::vector<bool> corrupt(count, false);
    for (std::size_t k = 0; k < n_corrupt; ++k)
        corrupt[order[k]] = true;

    for (std::size_t i = 0; i < count; ++i) {
        auto& e = entries[i];
        e.id = phantom_id(i);
        e.seed = derive_seed(master_seed, i);
        e.volume_path = e.id + ".axv";
        e.truth_path = e.id + "_truth.csv";

        Rng rng(e.seed);
        PhantomSpec& s = e.spec;
        s.num_slices = dist.min_slices + static_cast<std::size_t>(rng.below(dist.max_slices - dist.min_slices + 1));
        const double coverage = rng.uniform(dist.min_coverage_units, dist.max_coverage_units);
        const double height_cm = rng.uniform(dist.min_height_cm, dist.max_height_cm);
        const double start = rng.uniform(kMinPosition, kMaxPosition - coverage);
        const bool feet_first = rng.bernoulli(dist.feet_first_fraction);
        const double step = coverage / static_cast<double>(s.num_slices - 1);
        s.orientation = feet_first ? Orientation::feet_first : Orientation::head_first;
        s.truth_slope = feet_first ? -step : step;
        s.truth_intercept = feet_first ? start + coverage : start;
        // Body length in mm spread over 100 units.
        s.spacing_between_slices_mm = height_cm / 10.0 * step;
        const double pixel = rng.uniform(0.5, 1.0);
        s.pixel_spacing_mm = {pixel, pixel};
        s.rows = dist.rows;
        s.cols = dist.cols;
        s.noise = {dist.noise_sigma_units, dist.outlier_rate, derive_seed(e.seed, 1)};
        const auto kind_pick = rng.below(std::max<std::size_t>(1, dist.corruption_kinds.size()));
        s.corruption = corrupt[i] ? dist.corruption_kinds[kind_pick] : Corruption::none;
    }
    return entries;
}

CohortManifest generate_cohort(std::size_t count, const CohortDistribution& dist, std::uint64_t master_seed,
                               const std::string& out_dir, std::size_t jobs)
{
    CohortManifest manifest;
    manifest.master_seed = master_seed;
    manifest.entries = plan_cohort(count, dist, master_seed);
    manifest.base_dir = out_dir;

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw IoError(out_dir, "cannot create directory: " + ec.message());

    parallel_for(manifest.entries.size(), jobs, [&](std::size_t i) {
        const auto& e = manifest.entries[i];
        const Phantom p = generate_phantom(e.spec, e.seed);
        save_volume(p.volume, (fs::path(out_dir) / e.volume_path).string());
        std::vector<PredictionRecord> records(p.truth.size());
        for (std::size_t k = 0; k < records.size(); ++k)
            records[k] = {k, p.truth[k]};
        save_predictions(PredictionFile(std::move(records)), (fs::path(out_dir) / e.truth_path).string());
    });

    const auto path = (fs::path(out_dir) / kManifestFile).string();
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError(path, "cannot open for writing");
    out << to_json(manifest).dump(2) << '\n';
    if (!out)
        throw IoError(path, "write failed");
    return manifest;
}

nlohmann::json to_json(const CohortManifest& manifest)
{
    auto entries = nlohmann::json::array();
    for (const auto& e : manifest.entries)
        entries.push_back({{"id", e.id},
                           {"seed", e.seed},
                           {"corrupted", e.corrupted()},
                           {"volume", e.volume_path},
                           {"truth", e.truth_path},
                           {"spec", to_json(e.spec)}});
    return {{"format", "axloc-cohort"}, {"version", 1}, {"master_seed", manifest.master_seed}, {"entries", entries}};
}

CohortManifest manifest_from_json(const nlohmann::json& j, std::string base_dir)
{
    CohortManifest m;
    m.base_dir = std::move(base_dir);
    try {
        if (j.at("format").get<std::string>() != "axloc-cohort" || j.at("version").get<int>() != 1)
            throw ParseError(ParseError::Kind::bad_json, 0, "not an axloc cohort manifest (version 1)");
        m.master_seed = j.at("master_seed").get<std::uint64_t>();
        for (const auto& item : j.at("entries")) {
            CohortEntry e;
            e.id = item.at("id").get<std::string>();
            e.seed = item.at("seed").get<std::uint64_t>();
            e.volume_path = item.at("volume").get<std::string>();
            e.truth_path = item.at("truth").get<std::string>();
            e.spec = phantom_spec_from_json(item.at("spec"));
            if (item.at("corrupted").get<bool>() != e.corrupted())
                throw ParseError(ParseError::Kind::bad_json, 0, "entry " + e.id + ": corrupted flag disagrees with spec");
            m.entries.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(ParseError::Kind::bad_json, 0, std::string("manifest: ") + e.what());
    }
    return m;
}

CohortManifest load_manifest(const std::string& path)
{
    fs::path p(path);
    if (fs::is_directory(p))
        p /= kManifestFile;
    std::ifstream in(p);
    if (!in)
        throw IoError(p.string(), "cannot open manifest");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(ParseError::Kind::bad_json, 0, p.string() + ": " + e.what());
    }
    return manifest_from_json(j, p.parent_path().string());
}

} // namespace axloc
