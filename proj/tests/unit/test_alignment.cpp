// SPDX-License-Identifier: Apache-2.0
#include <retouch/alignment.hpp>
#include <retouch/error.hpp>

#include "../support/oracles.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace retouch;
using Catch::Matchers::WithinAbs;

namespace
{

std::vector<double> asVector(std::span<const double> values)
{
    return { values.begin(), values.end() };
}

} // namespace

TEST_CASE("group advantages are standardized")
{
    auto const adv = group_advantages(std::vector<double> { 1.0, 2.0, 3.0 });
    REQUIRE(adv.size() == 3);
    CHECK_THAT(adv[0], WithinAbs(-1.2247, 1e-4));
    CHECK_THAT(adv[1], WithinAbs(0.0, 1e-12));
    CHECK_THAT(adv[2], WithinAbs(1.2247, 1e-4));
    CHECK_THROWS_AS(group_advantages(std::vector<double> { 5.0, 5.0 }), Error);
    CHECK_THROWS_AS(group_advantages(std::vector<double> { 1.0 }), Error);
}

TEST_CASE("policies validate their probabilities")
{
    CHECK_THROWS_AS(CategoricalPolicy({ 0.5, 0.6 }), Error);
    CHECK_THROWS_AS(CategoricalPolicy({ 1.0, 0.0 }), Error);
    auto const p = CategoricalPolicy::from_logits(std::vector<double> { 1000.0, 1000.0 });
    CHECK(p[0] == 0.5);
}

TEST_CASE("identical policies give a zero objective")
{
    auto const p = CategoricalPolicy({ 0.2, 0.3, 0.5 });
    auto const group = GrpoGroup { { 0, 1, 2, 1 }, { 0.1, 0.7, 0.4, 0.9 } };
    CHECK_THAT(grpo_objective(p, p, p, group, GrpoConfig {}), WithinAbs(0.0, 1e-12));
}

TEST_CASE("objective reduces to negative KL without advantage signal")
{
    auto const theta = CategoricalPolicy({ 0.2, 0.3, 0.5 });
    auto const ref = CategoricalPolicy({ 0.4, 0.4, 0.2 });
    auto const group = GrpoGroup { { 0, 1, 2, 1 }, { 0.1, 0.7, 0.4, 0.9 } };
    auto const objective = grpo_objective(theta, ref, theta, group, GrpoConfig { 0.2, 1.0 });
    auto const kl = oracle::categorical_kl(asVector(theta.probs()), asVector(ref.probs()));
    CHECK_THAT(objective, WithinAbs(-kl, 1e-12));
    CHECK(grpo_loss(theta, ref, theta, group, GrpoConfig { 0.2, 1.0 }) == -objective);
}

TEST_CASE("clipping is pessimistic")
{
    // Action 0 has ratio 0.6 / 0.4 = 1.5 and action 1 has ratio 0.4 / 0.6.
    auto const theta = CategoricalPolicy({ 0.6, 0.4 });
    auto const old = CategoricalPolicy({ 0.4, 0.6 });
    auto const cfg = GrpoConfig { 0.2, 0.0 };

    // Two samples of action 0 with rewards 1 and 0 give advantages +1 and -1.
    auto const group = GrpoGroup { { 0, 0 }, { 1.0, 0.0 } };
    auto const objective = grpo_objective(theta, theta, old, group, cfg);
    CHECK_THAT(objective, WithinAbs((1.2 - 1.5) / 2.0, 1e-12));
}

TEST_CASE("unbounded clip and zero beta give the plain surrogate")
{
    auto const theta = CategoricalPolicy({ 0.1, 0.6, 0.3 });
    auto const old = CategoricalPolicy({ 0.3, 0.3, 0.4 });
    auto const group = GrpoGroup { { 0, 1, 2 }, { 1.0, 2.0, 4.0 } };
    auto const adv = group_advantages(group.rewards);
    auto expected = 0.0;
    for (auto i = std::size_t { 0 }; i < 3; ++i)
        expected += theta[group.actions[i]] / old[group.actions[i]] * adv[i];
    expected /= 3.0;
    auto const cfg = GrpoConfig { std::numeric_limits<double>::infinity(), 0.0 };
    CHECK_THAT(grpo_objective(theta, theta, old, group, cfg), WithinAbs(expected, 1e-12));
}

TEST_CASE("gradient agrees with finite differences")
{
    auto const logits = std::vector<double> { 0.1, -0.2, 0.3, 0.05 };
    auto const old = CategoricalPolicy::from_logits(std::vector<double> { 0.12, -0.18, 0.27, 0.0 });
    auto const ref = CategoricalPolicy({ 0.25, 0.25, 0.25, 0.25 });
    auto const group = GrpoGroup { { 0, 1, 2, 3, 2 }, { 0.3, 0.9, 0.1, 0.5, 0.7 } };
    auto const f = [&](const GrpoConfig& cfg) {
        return [&, cfg](const std::vector<double>& x) {
            return grpo_objective(CategoricalPolicy::from_logits(x), ref, old, group, cfg);
        };
    };
    for (auto const cfg: { GrpoConfig { 0.2, 0.0 }, GrpoConfig { 0.2, 0.5 } })
    {
        auto const analytic = grpo_gradient(logits, ref, old, group, cfg);
        auto const numeric = oracle::central_difference(f(cfg), logits, 1e-5);
        CHECK(oracle::max_relative_error(analytic, numeric) < 1e-4);
    }
}

TEST_CASE("KL is non-negative and zero on itself")
{
    auto rng = std::mt19937_64 { 5 };
    auto uniform = std::uniform_real_distribution<double> { -2.0, 2.0 };
    for (auto trial = 0; trial < 200; ++trial)
    {
        auto a = std::vector<double>(5);
        auto b = std::vector<double>(5);
        for (auto i = 0; i < 5; ++i)
        {
            a[i] = uniform(rng);
            b[i] = uniform(rng);
        }
        auto const p = CategoricalPolicy::from_logits(a);
        auto const q = CategoricalPolicy::from_logits(b);
        CHECK(kl_divergence(p, q) >= 0.0);
        CHECK(kl_divergence(p, p) == 0.0);
    }
}

TEST_CASE("composite reward")
{
    auto const truth = RegionAnnotation { 0, 0, DistortionCategory::HandDeformity, "the cat sat on mat", "" };
    CHECK(compose_reward({ "r", DistortionCategory::HandDeformity, "the cat sat on mat", 0.0 }, truth) == 1.0);
    CHECK(compose_reward({ "r", DistortionCategory::FaceDistortion, "purple", 0.0 }, truth) == 0.0);
    auto const half = RegionAnnotation { 0, 0, DistortionCategory::HandDeformity, "a b c d", "" };
    CHECK_THAT(compose_reward({ "r", DistortionCategory::HandDeformity, "a b x y", 0.0 }, half), WithinAbs(0.75, 1e-12));
    CHECK_THROWS_AS(compose_reward({ "r", DistortionCategory::HandDeformity, "x", 0.0 }, truth, 0.7, 0.7), Error);
}

TEST_CASE("low-rank adapters")
{
    auto a = Eigen::MatrixXd(2, 1);
    a << 1, 2;
    auto b = Eigen::MatrixXd(1, 2);
    b << 3, 4;
    auto expected = Eigen::MatrixXd(2, 2);
    expected << 3, 4, 6, 8;
    CHECK(lora_delta({ a, b }) == expected);

    auto const w = Eigen::MatrixXd::Identity(2, 2).eval();
    CHECK(lora_apply(w, { Eigen::MatrixXd::Zero(2, 1), b }) == w);
    CHECK_THROWS_AS(lora_apply(Eigen::MatrixXd::Zero(3, 2), { a, b }), Error);
    CHECK_THROWS_AS(lora_delta({ a, Eigen::MatrixXd::Zero(2, 2) }), Error);
}

TEST_CASE("built-in consistency checks pass")
{
    for (auto const& outcome: run_grpo_checks(7))
    {
        INFO(outcome.name);
        CHECK(outcome.passed);
    }
}
