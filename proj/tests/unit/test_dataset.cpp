// SPDX-License-Identifier: Apache-2.0
#include <retouch/dataset.hpp>
#include <retouch/error.hpp>

#include "../support/oracles.hpp"

#include <catch_amalgamated.hpp>

#include <fstream>
#include <sstream>
#include <string>

using namespace retouch;
using Catch::Matchers::WithinAbs;

namespace
{

std::string const OneRecord =
    R"({"image_id":"a","image":"a.pnm","prompt":"a dog","width":40,"height":20,)"
    R"("regions":[{"x":3,"y":4,"category":"hand","description":"six fingers","annotator":"ann1"}]})";

RegionAnnotation mark(std::size_t x, std::size_t y, DistortionCategory category)
{
    return RegionAnnotation { x, y, category, "note", "" };
}

AnnotationRecord recordWith(std::size_t regions, DistortionCategory category)
{
    auto record = AnnotationRecord { "id", "img.pnm", "prompt", 40, 40, {} };
    for (auto i = std::size_t { 0 }; i < regions; ++i)
        record.regions.push_back(RegionAnnotation { i, i, category, "two words", "consensus" });
    return record;
}

std::size_t errorLine(std::string_view text)
{
    try
    {
        (void)parse_dataset(text);
    }
    catch (const Error& e)
    {
        return e.line().value_or(0);
    }
    FAIL("expected parse_dataset to throw");
    return 0;
}

} // namespace

TEST_CASE("parsing empty input gives no records")
{
    CHECK(parse_dataset("").empty());
    CHECK(parse_dataset("\n\n").empty());
}

TEST_CASE("a single record keeps every field")
{
    auto const records = parse_dataset(OneRecord);
    REQUIRE(records.size() == 1);
    auto const& r = records[0];
    CHECK(r.image_id == "a");
    CHECK(r.image == "a.pnm");
    CHECK(r.prompt == "a dog");
    CHECK(r.width == 40);
    CHECK(r.height == 20);
    REQUIRE(r.regions.size() == 1);
    CHECK(r.regions[0] == RegionAnnotation { 3, 4, DistortionCategory::HandDeformity, "six fingers", "ann1" });
    CHECK(parse_dataset(serialize_dataset(records)) == records);
}

TEST_CASE("parse errors report their line")
{
    auto const outOfBounds =
        R"({"image_id":"b","image":"b.pnm","prompt":"p","width":40,"height":20,)"
        R"("regions":[{"x":40,"y":4,"category":"hand","description":"d"}]})";
    CHECK(errorLine(OneRecord + "\n" + outOfBounds) == 2);
    CHECK(errorLine(OneRecord + "\n\n{not json") == 3);
    CHECK_THROWS_MATCHES(parse_dataset(outOfBounds),
                         Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::OutOfBounds;
                         }));
    auto const unknown =
        R"({"image_id":"c","image":"c.pnm","prompt":"p","width":40,"height":20,)"
        R"("regions":[{"x":1,"y":4,"category":"wings","description":"d"}]})";
    CHECK_THROWS_MATCHES(parse_dataset(unknown),
                         Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::UnknownCategory;
                         }));
}

TEST_CASE("region radius and rasterized discs")
{
    CHECK(region_radius(100) == 5.0);
    CHECK(rasterize_region(50, 50, 100, 100).count() == 81);
    CHECK(rasterize_region(10, 10, 20, 20).count() == 5);
    CHECK(rasterize_region(0, 0, 100, 100).count() == 26);
    for (auto const h: { 37, 60, 153 })
        CHECK(rasterize_region(h / 2, h / 2, h, h).count() == oracle::lattice_disc_count(h));
    CHECK_THROWS_AS(rasterize_region(100, 0, 100, 100), Error);
}

TEST_CASE("majority voting")
{
    using C = DistortionCategory;
    SECTION("strict majority wins")
    {
        auto const votes = std::vector<std::vector<RegionAnnotation>> {
            { mark(10, 10, C::HandDeformity) },
            { mark(11, 10, C::HandDeformity) },
            { mark(10, 11, C::FaceDistortion) },
        };
        auto const merged = reconcile_majority(votes, 5.0);
        REQUIRE(merged.size() == 1);
        CHECK(merged[0].category == C::HandDeformity);
    }
    SECTION("a lone mark is dropped")
    {
        auto const votes = std::vector<std::vector<RegionAnnotation>> { { mark(10, 10, C::HandDeformity) }, {}, {} };
        CHECK(reconcile_majority(votes, 5.0).empty());
    }
    SECTION("ties go to the lower category code")
    {
        auto const votes = std::vector<std::vector<RegionAnnotation>> {
            { mark(10, 10, C::TextAnomaly) },
            { mark(10, 10, C::FaceDistortion) },
            { mark(10, 10, C::TextAnomaly) },
            { mark(10, 10, C::FaceDistortion) },
        };
        auto const merged = reconcile_majority(votes, 5.0);
        REQUIRE(merged.size() == 1);
        CHECK(merged[0].category == C::FaceDistortion);
    }
}

TEST_CASE("dataset statistics")
{
    auto const records = std::vector<AnnotationRecord> { recordWith(3, DistortionCategory::HandDeformity),
                                                         recordWith(5, DistortionCategory::HandDeformity) };
    auto const stats = compute_stats(records);
    CHECK(stats.image_count == 2);
    CHECK(stats.region_count == 8);
    CHECK(stats.regions_per_image == 4.0);
    CHECK(stats.mean_description_words == 2.0);
    CHECK(stats.category_histogram.at(DistortionCategory::HandDeformity) == 1.0);
    CHECK_THROWS_AS(compute_stats(std::vector<AnnotationRecord> {}), Error);
}

TEST_CASE("synthetic corpus statistics")
{
    auto file = std::ifstream(std::string(RETOUCH_TEST_DATA_DIR) + "/synthetic50.jsonl");
    REQUIRE(file);
    auto buffer = std::stringstream {};
    buffer << file.rdbuf();
    auto const stats = compute_stats(parse_dataset(buffer.str()));
    CHECK(stats.image_count == 50);
    CHECK(stats.region_count == 150);
    CHECK(stats.description_words == 650);
    CHECK(stats.category_counts.at(DistortionCategory::HandDeformity) == 70);
    CHECK(stats.category_counts.at(DistortionCategory::FaceDistortion) == 40);
    CHECK(stats.category_counts.at(DistortionCategory::TextAnomaly) == 30);
    CHECK(stats.category_counts.at(DistortionCategory::ObjectRedundancy) == 10);
}

TEST_CASE("ground truth maps")
{
    auto empty = recordWith(0, DistortionCategory::HandDeformity);
    auto const none = ground_truth_map(empty);
    CHECK(none.map.max() == 0.0F);
    CHECK(none.fixations.empty());

    auto one = recordWith(0, DistortionCategory::HandDeformity);
    one.regions.push_back(RegionAnnotation { 20, 20, DistortionCategory::HandDeformity, "d", "consensus" });
    auto const single = ground_truth_map(one);
    CHECK(single.fixations.size() == 1);
    auto support = std::size_t { 0 };
    for (auto const v: single.map.values())
        support += v > 0.0F ? 1 : 0;
    CHECK(support == rasterize_region(20, 20, 40, 40).count());

    one.regions.push_back(RegionAnnotation { 21, 20, DistortionCategory::FaceDistortion, "d", "consensus" });
    auto const pair = ground_truth_map(one);
    CHECK(pair.fixations.size() == 2);
    auto const left = rasterize_region(20, 20, 40, 40);
    auto const right = rasterize_region(21, 20, 40, 40);
    for (auto i = std::size_t { 0 }; i < left.cells.size(); ++i)
        CHECK((pair.map.values()[i] > 0.0F) == (left.cells[i] || right.cells[i]));
}

TEST_CASE("word counting")
{
    CHECK(count_words("") == 0);
    CHECK(count_words("  two   words ") == 2);
}
