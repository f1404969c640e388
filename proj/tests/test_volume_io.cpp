#include "doctest.h"

#include "axloc/errors.hpp"
#include "axloc/random.hpp"
#include "axloc/volume_io.hpp"
#include "test_support.hpp"

#include <functional>
#include <sstream>

#include "json.hpp"

using namespace axloc;
using axloc::test::TempDir;
using Kind = VolumeFormatError::Kind;
using nlohmann::json;

namespace {

Volume tiny_volume()
{
    VolumeMeta meta;
    meta.num_slices = 4;
    meta.rows = 2;
    meta.cols = 2;
    meta.spacing_between_slices_mm = 2.5;
    meta.pixel_spacing_mm = {0.7, 0.8};
    meta.orientation = Orientation::feet_first;
    std::vector<std::int16_t> voxels;
    for (int i = 0; i < 16; ++i)
        voxels.push_back(static_cast<std::int16_t>(i * 100 - 1000));
    return Volume(meta, voxels);
}

json tiny_header()
{
    return json{{"dims", {4, 2, 2}},
                {"spacing_between_slices_mm", 2.5},
                {"pixel_spacing_mm", {0.7, 0.8}},
                {"orientation", "feet_first"}};
}

// Assemble a container by hand so header fields can be corrupted freely.
std::vector<std::uint8_t> assemble(const std::string& header, std::size_t payload_bytes,
                                   std::int64_t length_delta = 0)
{
    std::vector<std::uint8_t> out{'A', 'X', 'V', '1'};
    const auto len = static_cast<std::uint32_t>(static_cast<std::int64_t>(header.size()) + length_delta);
    for (int s = 0; s < 32; s += 8)
        out.push_back(static_cast<std::uint8_t>(len >> s));
    out.insert(out.end(), header.begin(), header.end());
    for (std::size_t i = 0; i < payload_bytes; ++i)
        out.push_back(static_cast<std::uint8_t>(i * 7));
    return out;
}

Kind decode_failure(const std::vector<std::uint8_t>& bytes, std::string* field = nullptr)
{
    try {
        decode_volume(bytes);
    } catch (const VolumeFormatError& e) {
        if (field)
            *field = e.field();
        return e.kind();
    }
    FAIL("decode unexpectedly succeeded");
    return Kind::bad_magic;
}

} // namespace

TEST_CASE("4-slice 2x2 volume round-trips through a file")
{
    TempDir dir;
    const auto path = dir.file("v.axv");
    save_volume(tiny_volume(), path);
    const Volume v = load_volume(path);
    CHECK(v.num_slices() == 4);
    CHECK(v == tiny_volume());
    CHECK(v.at(3, 1, 1) == 500);
}

TEST_CASE("encoded layout")
{
    const auto bytes = encode_volume(tiny_volume());
    const std::string header = tiny_header().dump();
    REQUIRE(bytes.size() == 8 + header.size() + 32);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "AXV1");
    const std::uint32_t len = bytes[4] | bytes[5] << 8 | bytes[6] << 16 | static_cast<std::uint32_t>(bytes[7]) << 24;
    CHECK(len == header.size());
    CHECK(json::parse(std::string(bytes.begin() + 8, bytes.begin() + 8 + len)) == tiny_header());
    // First voxel is -1000 = 0xFC18, little-endian.
    CHECK(bytes[8 + len] == 0x18);
    CHECK(bytes[9 + len] == 0xFC);
}

TEST_CASE("payload one voxel short is a truncated payload")
{
    const auto bytes = assemble(tiny_header().dump(), 30);
    std::string field;
    CHECK(decode_failure(bytes, &field) == Kind::truncated_payload);
    CHECK(field == "payload");
}

TEST_CASE("trailing payload bytes are a dimension mismatch")
{
    CHECK(decode_failure(assemble(tiny_header().dump(), 34)) == Kind::dimension_mismatch);
}

TEST_CASE("zero slice spacing is rejected")
{
    auto h = tiny_header();
    h["spacing_between_slices_mm"] = 0.0;
    std::string field;
    CHECK(decode_failure(assemble(h.dump(), 32), &field) == Kind::non_positive_spacing);
    CHECK(field == "spacing_between_slices_mm");
}

TEST_CASE("bad magic and truncated prefix")
{
    auto bytes = encode_volume(tiny_volume());
    bytes[3] = '2';
    CHECK(decode_failure(bytes) == Kind::bad_magic);
    CHECK(decode_failure({}) == Kind::bad_magic);
    CHECK(decode_failure({'A', 'X', 'V', '1', 0x10}) == Kind::truncated_header);
    CHECK(decode_failure(assemble(tiny_header().dump(), 0, 1000)) == Kind::truncated_header);
    CHECK(decode_failure(assemble(tiny_header().dump(), 32, 1 << 24)) == Kind::bad_header);
}

TEST_CASE("every single-field header corruption is rejected")
{
    struct Corruption {
        const char* name;
        std::function<void(json&)> apply;
        Kind expected;
        const char* field;
    };
    const std::vector<Corruption> cases = {
        {"dims missing", [](json& h) { h.erase("dims"); }, Kind::bad_header, "dims"},
        {"dims not array", [](json& h) { h["dims"] = 16; }, Kind::bad_header, "dims"},
        {"dims too short", [](json& h) { h["dims"] = {4, 2}; }, Kind::bad_header, "dims"},
        {"dims too long", [](json& h) { h["dims"] = {4, 2, 2, 1}; }, Kind::bad_header, "dims"},
        {"slices zero", [](json& h) { h["dims"][0] = 0; }, Kind::invalid_dimension, "dims[0]"},
        {"slices negative", [](json& h) { h["dims"][0] = -4; }, Kind::invalid_dimension, "dims[0]"},
        {"slices fractional", [](json& h) { h["dims"][0] = 4.5; }, Kind::bad_header, "dims[0]"},
        {"slices string", [](json& h) { h["dims"][0] = "4"; }, Kind::bad_header, "dims[0]"},
        {"slices too many", [](json& h) { h["dims"][0] = 5; }, Kind::truncated_payload, "payload"},
        {"slices too few", [](json& h) { h["dims"][0] = 3; }, Kind::dimension_mismatch, "payload"},
        {"rows zero", [](json& h) { h["dims"][1] = 0; }, Kind::invalid_dimension, "dims[1]"},
        {"rows too many", [](json& h) { h["dims"][1] = 3; }, Kind::truncated_payload, "payload"},
        {"cols zero", [](json& h) { h["dims"][2] = 0; }, Kind::invalid_dimension, "dims[2]"},
        {"cols too few", [](json& h) { h["dims"][2] = 1; }, Kind::dimension_mismatch, "payload"},
        {"spacing missing", [](json& h) { h.erase("spacing_between_slices_mm"); }, Kind::bad_header,
         "spacing_between_slices_mm"},
        {"spacing negative", [](json& h) { h["spacing_between_slices_mm"] = -1.0; },
         Kind::non_positive_spacing, "spacing_between_slices_mm"},
        {"spacing string", [](json& h) { h["spacing_between_slices_mm"] = "2.5"; }, Kind::bad_header,
         "spacing_between_slices_mm"},
        {"spacing null", [](json& h) { h["spacing_between_slices_mm"] = nullptr; }, Kind::bad_header,
         "spacing_between_slices_mm"},
        {"pixel spacing missing", [](json& h) { h.erase("pixel_spacing_mm"); }, Kind::bad_header,
         "pixel_spacing_mm"},
        {"pixel spacing scalar", [](json& h) { h["pixel_spacing_mm"] = 0.7; }, Kind::bad_header,
         "pixel_spacing_mm"},
        {"pixel row zero", [](json& h) { h["pixel_spacing_mm"][0] = 0.0; }, Kind::non_positive_spacing,
         "pixel_spacing_mm[0]"},
        {"pixel col negative", [](json& h) { h["pixel_spacing_mm"][1] = -0.8; }, Kind::non_positive_spacing,
         "pixel_spacing_mm[1]"},
        {"pixel col string", [](json& h) { h["pixel_spacing_mm"][1] = "x"; }, Kind::bad_header,
         "pixel_spacing_mm[1]"},
        {"orientation missing", [](json& h) { h.erase("orientation"); }, Kind::bad_header, "orientation"},
        {"orientation unknown name", [](json& h) { h["orientation"] = "sideways"; }, Kind::bad_header,
         "orientation"},
        {"orientation number", [](json& h) { h["orientation"] = 1; }, Kind::bad_header, "orientation"},
    };
    for (const auto& c : cases) {
        CAPTURE(c.name);
        auto h = tiny_header();
        c.apply(h);
        std::string field;
        CHECK(decode_failure(assemble(h.dump(), 32), &field) == c.expected);
        CHECK(field == c.field);
    }
}

TEST_CASE("header length field corruption")
{
    const std::string header = tiny_header().dump();
    // Shorter length cuts the JSON; longer swallows payload bytes into it.
    CHECK(decode_failure(assemble(header, 32, -1)) == Kind::bad_header);
    CHECK_THROWS_AS(decode_volume(assemble(header, 32, 1)), VolumeFormatError);
    CHECK(decode_failure(assemble("[1,2,3]", 32)) == Kind::bad_header);
}

TEST_CASE("round-trip identity over randomized volumes")
{
    Rng rng(2024);
    for (int trial = 0; trial < 120; ++trial) {
        VolumeMeta meta;
        meta.num_slices = 1 + rng.below(12);
        meta.rows = 1 + rng.below(24);
        meta.cols = 1 + rng.below(24);
        meta.spacing_between_slices_mm = rng.uniform(0.1, 10.0);
        meta.pixel_spacing_mm = {rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0)};
        meta.orientation = static_cast<Orientation>(rng.below(3));
        std::vector<std::int16_t> voxels(meta.voxel_count());
        for (auto& v : voxels)
            v = static_cast<std::int16_t>(static_cast<std::uint16_t>(rng.next()));
        const Volume original(meta, voxels);

        std::stringstream buf;
        write_volume(original, buf);
        const Volume back = read_volume(buf);
        CHECK(back == original);
        CHECK(back.meta().spacing_between_slices_mm == meta.spacing_between_slices_mm);
    }
}

TEST_CASE("random single-byte flips either fail to load or change the volume")
{
    const Volume original = axloc::test::make_volume(3, 4, 4, 1.25);
    const auto clean = encode_volume(original);
    Rng rng(99);
    int failed = 0;
    int differed = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        auto bytes = clean;
        const std::size_t pos = rng.below(bytes.size());
        const auto mask = static_cast<std::uint8_t>(1 + rng.below(255));
        bytes[pos] ^= mask;
        try {
            const Volume v = decode_volume(bytes);
            CHECK_FALSE(v == original);
            ++differed;
        } catch (const VolumeFormatError&) {
            ++failed;
        }
    }
    CHECK(failed + differed == 2000);
    CHECK(failed > 0);
    CHECK(differed > 0);
}

TEST_CASE("Volume constructor checks voxel count")
{
    VolumeMeta meta;
    meta.num_slices = 2;
    meta.rows = 2;
    meta.cols = 2;
    CHECK_THROWS_AS(Volume(meta, std::vector<std::int16_t>(7)), VolumeFormatError);
    const Volume v(meta, std::vector<std::int16_t>(8, 5));
    CHECK(v.slice(1).size() == 4);
    CHECK_THROWS_AS(v.slice(2), ArgumentError);
    CHECK_THROWS_AS(v.at(0, 2, 0), ArgumentError);
}

TEST_CASE("file I/O errors carry the path")
{
    TempDir dir;
    const auto bad = (dir.path() / "no_such_dir" / "v.axv").string();
    try {
        save_volume(tiny_volume(), bad);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.path() == bad);
    }
    CHECK_THROWS_AS(load_volume(dir.file("missing.axv")), IoError);
    CHECK_THROWS_AS(load_predictions(dir.file("missing.csv")), IoError);
    CHECK_THROWS_AS(save_predictions(PredictionFile{}, bad), IoError);
}

TEST_CASE("orientation names")
{
    for (auto o : {Orientation::head_first, Orientation::feet_first, Orientation::unknown})
        CHECK(parse_orientation(to_string(o)) == o);
    CHECK_THROWS_AS(parse_orientation("HEAD_FIRST"), LookupError);
}

namespace {

ParseError parse_failure(const std::string& text)
{
    std::istringstream in(text);
    try {
        parse_predictions(in);
    } catch (const ParseError& e) {
        return e;
    }
    FAIL("parse unexpectedly succeeded");
    return ParseError(ParseError::Kind::bad_json, 0, "");
}

} // namespace

TEST_CASE("predictions CSV parses into sorted records")
{
    std::istringstream in("slice_index,position\n0,10.0\n5,12.5");
    const auto file = parse_predictions(in);
    REQUIRE(file.size() == 2);
    CHECK(file.records()[0] == PredictionRecord{0, 10.0});
    CHECK(file.records()[1] == PredictionRecord{5, 12.5});

    std::istringstream unsorted("\xEF\xBB\xBFslice_index,position\r\n9,1.5\r\n\r\n2,3\r\n");
    const auto f2 = parse_predictions(unsorted);
    REQUIRE(f2.size() == 2);
    CHECK(f2.records()[0].slice_index == 2);
    CHECK(*f2.find(9) == 1.5);
    CHECK(f2.find(3) == nullptr);
}

TEST_CASE("predictions CSV errors name their line")
{
    auto e = parse_failure("slice_index,position\n5,1.0\n6,2.0\n5,3.0\n");
    CHECK(e.kind() == ParseError::Kind::duplicate_index);
    CHECK(e.line() == 4);

    e = parse_failure("slice_index,position\n0,10.0\n1,abc\n");
    CHECK(e.kind() == ParseError::Kind::bad_field);
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);

    e = parse_failure("0,10.0\n");
    CHECK(e.kind() == ParseError::Kind::missing_header);
    CHECK(e.line() == 1);

    CHECK(parse_failure("").kind() == ParseError::Kind::missing_header);
    CHECK(parse_failure("slice_index,position\n-1,2.0\n").line() == 2);
    CHECK(parse_failure("slice_index,position\n1,nan\n").kind() == ParseError::Kind::bad_field);
    CHECK(parse_failure("slice_index,position\n1,2,3\n").kind() == ParseError::Kind::bad_field);
    CHECK(parse_failure("slice_index,position\n1\n").kind() == ParseError::Kind::bad_field);
    CHECK(parse_failure("slice_index,position\n1,2.0x\n").kind() == ParseError::Kind::bad_field);
}

TEST_CASE("predictions write with at least three fractional digits and round-trip")
{
    const PredictionFile file({{3, 14.2}, {0, 10.0}, {7, 1.0 / 3.0}});
    std::ostringstream out;
    write_predictions(file, out);
    CHECK(out.str() == "slice_index,position\n0,10.000\n3,14.200\n7,0.3333333333333333\n");

    std::istringstream in(out.str());
    CHECK(parse_predictions(in) == file);

    TempDir dir;
    save_predictions(file, dir.file("p.csv"));
    CHECK(load_predictions(dir.file("p.csv")) == file);
}

TEST_CASE("PredictionFile invariants")
{
    CHECK_THROWS_AS(PredictionFile({{1, 2.0}, {1, 3.0}}), ArgumentError);
    CHECK_THROWS_AS(PredictionFile({{1, NAN}}), ArgumentError);
    CHECK(PredictionFile{}.empty());
}
