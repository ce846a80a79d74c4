// SPDX-License-Identifier: Apache-2.0
#include <retouch/error.hpp>
#include <retouch/text_metrics.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace retouch;
using Catch::Matchers::WithinAbs;

namespace
{

LabeledRegion truthFor(std::string id, DistortionCategory category, std::string description)
{
    return LabeledRegion { id, RegionAnnotation { 0, 0, category, std::move(description), "consensus" } };
}

} // namespace

TEST_CASE("tokenizer lowercases alphanumeric runs")
{
    CHECK(tokenize("The Cat, sat!") == std::vector<std::string> { "the", "cat", "sat" });
    CHECK(tokenize("  ").empty());
}

TEST_CASE("ROUGE-L examples")
{
    CHECK(rouge_l("the cat sat", "the cat sat") == 1.0);
    CHECK(rouge_l("a b", "c d") == 0.0);
    CHECK_THAT(rouge_l("the cat sat", "the cat ran"), WithinAbs(2.0 / 3.0, 1e-12));
    CHECK_THROWS_AS(rouge_l("", "x"), Error);
}

TEST_CASE("METEOR-lite examples")
{
    for (auto const n: { 1, 3, 6 })
    {
        auto text = std::string {};
        for (auto i = 0; i < n; ++i)
            text += "w" + std::to_string(i) + " ";
        CHECK_THAT(meteor_lite(text, text), WithinAbs(1.0 - 0.5 / std::pow(n, 3), 1e-12));
    }
    CHECK(meteor_lite("a b", "c d") == 0.0);
    CHECK_THAT(meteor_lite("a b", "b a"), WithinAbs(0.5, 1e-12));
}

TEST_CASE("category accuracy counts matches")
{
    using C = DistortionCategory;
    auto truth = std::vector<LabeledRegion> {};
    auto preds = std::vector<Diagnosis> {};
    for (auto i = 0; i < 5; ++i)
    {
        truth.push_back(truthFor(std::to_string(i), C::HandDeformity, "x"));
        preds.push_back(Diagnosis { std::to_string(i), i < 4 ? C::HandDeformity : C::FaceDistortion, "x", 0.0 });
    }
    CHECK_THAT(category_accuracy(preds, truth), WithinAbs(0.8, 1e-15));
    preds.push_back(Diagnosis { "missing", C::HandDeformity, "x", 0.0 });
    CHECK_THROWS_AS(category_accuracy(preds, truth), Error);
    CHECK_THROWS_AS(category_accuracy(std::vector<Diagnosis> {}, truth), Error);
}

TEST_CASE("reasoning report for perfect and single predictions")
{
    auto const truth = std::vector<LabeledRegion> { truthFor("r", DistortionCategory::TextAnomaly, "garbled sign text") };
    auto const perfect = std::vector<Diagnosis> { { "r", DistortionCategory::TextAnomaly, "garbled sign text", 0.5 } };
    auto const report = evaluate_reasoning(perfect, truth);
    CHECK(report.accuracy == 1.0);
    CHECK(report.rouge_l == 1.0);
    CHECK_THAT(report.meteor_lite, WithinAbs(1.0, 0.02));

    auto const other = std::vector<Diagnosis> { { "r", DistortionCategory::FaceDistortion, "garbled text", 0.5 } };
    auto const single = evaluate_reasoning(other, truth);
    CHECK(single.accuracy == 0.0);
    CHECK(single.rouge_l == rouge_l("garbled text", "garbled sign text"));
    CHECK(single.meteor_lite == meteor_lite("garbled text", "garbled sign text"));
}

TEST_CASE("diagnosis lines parse with validation")
{
    auto const parsed = parse_diagnoses(
        R"({"region_id":"a#0","category":"face","description":"melted eye","severity":0.4})"
        "\n"
        R"({"region_id":"a#1","category":"text","description":"garbled"})");
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].severity == 0.4);
    CHECK(parsed[1].category == DistortionCategory::TextAnomaly);

    try
    {
        (void)parse_diagnoses("{\"region_id\":\"a\",\"category\":\"face\",\"description\":\"x\"}\n"
                              "{\"region_id\":\"b\",\"category\":\"face\",\"description\":\"\"}");
        FAIL("expected an error");
    }
    catch (const Error& e)
    {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_diagnoses(R"({"region_id":"a","category":"bogus","description":"x"})"), Error);
}
