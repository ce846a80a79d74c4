// SPDX-License-Identifier: Apache-2.0
#include <retouch/alignment.hpp>
#include <retouch/error.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace retouch
{

namespace
{

constexpr double ProbabilitySumTolerance = 1e-9;

double clipRatio(double ratio, double epsilon)
{
    if (std::isinf(epsilon))
        return ratio;
    return std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
}

void requireSameSupport(const CategoricalPolicy& a, const CategoricalPolicy& b)
{
    if (a.size() != b.size())
        throw Error(ErrorKind::DimensionMismatch,
                    fmt::format("policies over {} and {} actions", a.size(), b.size()));
}

/// True when the unclipped branch r * A attains the min of the surrogate.
bool unclippedActive(double ratio, double advantage, double epsilon)
{
    if (advantage >= 0.0)
        return ratio <= 1.0 + epsilon;
    return ratio >= 1.0 - epsilon;
}

double surrogateMean(const CategoricalPolicy& theta,
                     const CategoricalPolicy& old,
                     const GrpoGroup& group,
                     std::span<const double> advantages,
                     double epsilon)
{
    auto total = 0.0;
    for (auto i = std::size_t { 0 }; i < group.actions.size(); ++i)
    {
        auto const action = group.actions[i];
        auto const ratio = theta[action] / old[action];
        auto const advantage = advantages[i];
        total += std::min(ratio * advantage, clipRatio(ratio, epsilon) * advantage);
    }
    return total / static_cast<double>(group.actions.size());
}

} // namespace

CategoricalPolicy::CategoricalPolicy(std::vector<double> probs): _probs(std::move(probs))
{
    if (_probs.empty())
        throw Error(ErrorKind::EmptyInput, "policy over an empty action set");
    auto sum = 0.0;
    for (auto const p: _probs)
    {
        if (!(p > 0.0) || !std::isfinite(p))
            throw Error(ErrorKind::InvalidArgument, fmt::format("policy probability {} is not positive", p));
        sum += p;
    }
    if (std::abs(sum - 1.0) > ProbabilitySumTolerance)
        throw Error(ErrorKind::InvalidArgument, fmt::format("policy probabilities sum to {}", sum));
}

CategoricalPolicy CategoricalPolicy::from_logits(std::span<const double> logits)
{
    if (logits.empty())
        throw Error(ErrorKind::EmptyInput, "no logits");
    auto const peak = *std::ranges::max_element(logits);
    auto probs = std::vector<double>(logits.size());
    auto sum = 0.0;
    for (auto i = std::size_t { 0 }; i < logits.size(); ++i)
    {
        probs[i] = std::exp(logits[i] - peak);
        sum += probs[i];
    }
    for (auto& p: probs)
        p /= sum;
    return CategoricalPolicy(std::move(probs));
}

void GrpoConfig::validate() const
{
    if (!(epsilon_clip > 0.0))
        throw Error(ErrorKind::InvalidArgument, fmt::format("epsilon_clip {} must be positive", epsilon_clip));
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw Error(ErrorKind::InvalidArgument, fmt::format("beta {} must be finite and non-negative", beta));
}

void GrpoGroup::validate(std::size_t action_count) const
{
    if (actions.size() < 2)
        throw Error(ErrorKind::InvalidArgument, "a group needs at least two members");
    if (actions.size() != rewards.size())
        throw Error(ErrorKind::DimensionMismatch,
                    fmt::format("{} actions but {} rewards", actions.size(), rewards.size()));
    for (auto const a: actions)
        if (a >= action_count)
            throw Error(ErrorKind::OutOfBounds, fmt::format("action {} outside [0, {})", a, action_count));
}

std::vector<double> group_advantages(std::span<const double> rewards)
{
    if (rewards.size() < 2)
        throw Error(ErrorKind::InvalidArgument, "advantages need at least two rewards");
    auto const [lo, hi] = std::ranges::minmax(rewards);
    if (lo == hi)
        throw Error(ErrorKind::ZeroVariance, "all rewards in the group are equal");

    auto const n = static_cast<double>(rewards.size());
    auto const mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    auto variance = 0.0;
    for (auto const r: rewards)
        variance += (r - mean) * (r - mean);
    auto const stddev = std::sqrt(variance / n);

    auto advantages = std::vector<double>(rewards.size());
    std::ranges::transform(rewards, advantages.begin(), [&](double r) { return (r - mean) / stddev; });
    return advantages;
}

double kl_divergence(const CategoricalPolicy& p, const CategoricalPolicy& q)
{
    requireSameSupport(p, q);
    auto total = 0.0;
    for (auto i = std::size_t { 0 }; i < p.size(); ++i)
        total += p[i] * std::log(p[i] / q[i]);
    return total;
}

double grpo_objective(const CategoricalPolicy& theta,
                      const CategoricalPolicy& ref,
                      const CategoricalPolicy& old,
                      const GrpoGroup& group,
                      const GrpoConfig& cfg)
{
    cfg.validate();
    requireSameSupport(theta, ref);
    requireSameSupport(theta, old);
    group.validate(theta.size());
    auto const advantages = group_advantages(group.rewards);
    auto const surrogate = surrogateMean(theta, old, group, advantages, cfg.epsilon_clip);
    if (cfg.beta == 0.0)
        return surrogate;
    return surrogate - cfg.beta * kl_divergence(theta, ref);
}

double grpo_loss(const CategoricalPolicy& theta,
                 const CategoricalPolicy& ref,
                 const CategoricalPolicy& old,
                 const GrpoGroup& group,
                 const GrpoConfig& cfg)
{
    return -grpo_objective(theta, ref, old, group, cfg);
}

std::vector<double> grpo_gradient(std::span<const double> theta_logits,
                                  const CategoricalPolicy& ref,
                                  const CategoricalPolicy& old,
                                  const GrpoGroup& group,
                                  const GrpoConfig& cfg)
{
    cfg.validate();
    auto const theta = CategoricalPolicy::from_logits(theta_logits);
    requireSameSupport(theta, ref);
    requireSameSupport(theta, old);
    group.validate(theta.size());
    auto const advantages = group_advantages(group.rewards);

    auto const k = theta.size();
    auto const members = static_cast<double>(group.actions.size());
    auto gradient = std::vector<double>(k, 0.0);

    // d ratio / d z_j = ratio * (delta_aj - pi_j) for softmax logits.
    for (auto i = std::size_t { 0 }; i < group.actions.size(); ++i)
    {
        auto const action = group.actions[i];
        auto const ratio = theta[action] / old[action];
        if (!unclippedActive(ratio, advantages[i], cfg.epsilon_clip))
            continue;
        auto const scale = advantages[i] * ratio / members;
        for (auto j = std::size_t { 0 }; j < k; ++j)
            gradient[j] += scale * ((j == action ? 1.0 : 0.0) - theta[j]);
    }

    // d KL / d z_j = pi_j * (ln(pi_j / ref_j) - KL).
    if (cfg.beta != 0.0)
    {
        auto const kl = kl_divergence(theta, ref);
        for (auto j = std::size_t { 0 }; j < k; ++j)
            gradient[j] -= cfg.beta * theta[j] * (std::log(theta[j] / ref[j]) - kl);
    }
    return gradient;
}

double compose_reward(const Diagnosis& pred, const RegionAnnotation& truth, double w_cat, double w_txt)
{
    if (!(w_cat >= 0.0) || !(w_txt >= 0.0) || std::abs(w_cat + w_txt - 1.0) > 1e-12)
        throw Error(ErrorKind::InvalidArgument,
                    fmt::format("reward weights ({}, {}) must be non-negative and sum to 1", w_cat, w_txt));
    auto const category = pred.category == truth.category ? 1.0 : 0.0;
    if (w_txt == 0.0)
        return w_cat * category;
    return w_cat * category + w_txt * rouge_l(pred.description, truth.description);
}

Eigen::MatrixXd lora_delta(const LoraFactors& factors)
{
    if (factors.a.cols() != factors.b.rows() || factors.a.cols() < 1)
        throw Error(ErrorKind::DimensionMismatch,
                    fmt::format("factor shapes {}x{} and {}x{} are not conformable",
                                factors.a.rows(),
                                factors.a.cols(),
                                factors.b.rows(),
                                factors.b.cols()));
    return factors.a * factors.b;
}

Eigen::MatrixXd lora_apply(const Eigen::MatrixXd& weights, const LoraFactors& factors)
{
    if (weights.rows() != factors.a.rows() || weights.cols() != factors.b.cols())
        throw Error(ErrorKind::DimensionMismatch,
                    fmt::format("weights {}x{} do not match adapter {}x{}",
                                weights.rows(),
                                weights.cols(),
                                factors.a.rows(),
                                factors.b.cols()));
    return weights + lora_delta(factors);
}

namespace
{

std::vector<double> randomLogits(std::mt19937_64& rng, std::size_t k, double spread)
{
    auto dist = std::uniform_real_distribution<double>(-spread, spread);
    auto logits = std::vector<double>(k);
    for (auto& z: logits)
        z = dist(rng);
    return logits;
}

GrpoGroup randomGroup(std::mt19937_64& rng, std::size_t k, std::size_t members)
{
    auto pick = std::uniform_int_distribution<std::size_t>(0, k - 1);
    auto reward = std::uniform_real_distribution<double>(0.0, 1.0);
    auto group = GrpoGroup {};
    for (auto i = std::size_t { 0 }; i < members; ++i)
    {
        group.actions.push_back(pick(rng));
        group.rewards.push_back(reward(rng));
    }
    return group;
}

// Largest deviation between analytic and central-difference gradients,
// relative to the largest finite-difference component.
double gradientError(std::span<const double> logits,
                     const CategoricalPolicy& ref,
                     const CategoricalPolicy& old,
                     const GrpoGroup& group,
                     const GrpoConfig& cfg,
                     double h)
{
    auto const analytic = grpo_gradient(logits, ref, old, group, cfg);
    auto shifted = std::vector<double>(logits.begin(), logits.end());
    auto diff = 0.0;
    auto scale = 0.0;
    for (auto j = std::size_t { 0 }; j < shifted.size(); ++j)
    {
        auto const z = shifted[j];
        shifted[j] = z + h;
        auto const up = grpo_objective(CategoricalPolicy::from_logits(shifted), ref, old, group, cfg);
        shifted[j] = z - h;
        auto const down = grpo_objective(CategoricalPolicy::from_logits(shifted), ref, old, group, cfg);
        shifted[j] = z;
        auto const numeric = (up - down) / (2.0 * h);
        diff = std::max(diff, std::abs(numeric - analytic[j]));
        scale = std::max(scale, std::abs(numeric));
    }
    return scale > 0.0 ? diff / scale : diff;
}

} // namespace

std::vector<CheckOutcome> run_grpo_checks(std::uint64_t seed)
{
    auto rng = std::mt19937_64(seed);
    auto outcomes = std::vector<CheckOutcome> {};

    {
        auto worst = 0.0;
        for (auto trial = 0; trial < 500; ++trial)
        {
            auto const group = randomGroup(rng, 4, 2 + static_cast<std::size_t>(trial % 15));
            auto const adv = group_advantages(group.rewards);
            auto const n = static_cast<double>(adv.size());
            auto const mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
            auto sq = 0.0;
            for (auto const a: adv)
                sq += (a - mean) * (a - mean);
            worst = std::max({ worst, std::abs(mean), std::abs(std::sqrt(sq / n) - 1.0) });
        }
        outcomes.push_back({ "advantage_normalization", worst <= 1e-10, worst, 1e-10 });
    }

    {
        auto worst = 0.0;
        for (auto trial = 0; trial < 500; ++trial)
        {
            auto const policy = CategoricalPolicy::from_logits(randomLogits(rng, 5, 2.0));
            auto const group = randomGroup(rng, 5, 8);
            worst = std::max(worst, std::abs(grpo_objective(policy, policy, policy, group, GrpoConfig {})));
        }
        outcomes.push_back({ "identity_objective", worst <= 1e-12, worst, 1e-12 });
    }

    {
        // Dyadic rewards and an integer shift keep every operation exact.
        auto worst = 0.0;
        auto tick = std::uniform_int_distribution<int>(0, 64);
        auto shift = std::uniform_int_distribution<int>(-100, 100);
        for (auto trial = 0; trial < 500; ++trial)
        {
            auto const theta = CategoricalPolicy::from_logits(randomLogits(rng, 4, 1.0));
            auto const ref = CategoricalPolicy::from_logits(randomLogits(rng, 4, 1.0));
            auto const old = CategoricalPolicy::from_logits(randomLogits(rng, 4, 1.0));
            auto group = randomGroup(rng, 4, 8);
            for (auto& r: group.rewards)
                r = tick(rng) / 64.0;
            if (std::ranges::min(group.rewards) == std::ranges::max(group.rewards))
                group.rewards[0] += 0.5;
            auto const base = grpo_objective(theta, ref, old, group, GrpoConfig {});
            auto const c = static_cast<double>(shift(rng));
            for (auto& r: group.rewards)
                r += c;
            worst = std::max(worst, std::abs(grpo_objective(theta, ref, old, group, GrpoConfig {}) - base));
        }
        outcomes.push_back({ "reward_shift_invariance", worst == 0.0, worst, 0.0 });
    }

    {
        auto worst = 0.0;
        auto beta = std::uniform_real_distribution<double>(0.0, 1.0);
        for (auto trial = 0; trial < 300; ++trial)
        {
            auto const oldLogits = randomLogits(rng, 5, 1.5);
            auto thetaLogits = oldLogits;
            auto const nudge = randomLogits(rng, 5, 0.04);
            for (auto j = std::size_t { 0 }; j < thetaLogits.size(); ++j)
                thetaLogits[j] += nudge[j];
            auto const ref = CategoricalPolicy::from_logits(randomLogits(rng, 5, 1.5));
            auto const old = CategoricalPolicy::from_logits(oldLogits);
            auto const group = randomGroup(rng, 5, 6);
            auto const cfg = GrpoConfig { .epsilon_clip = 0.2, .beta = trial % 3 == 0 ? 10.0 : beta(rng) };
            worst = std::max(worst, gradientError(thetaLogits, ref, old, group, cfg, 1e-5));
        }
        outcomes.push_back({ "gradient_finite_difference", worst <= 1e-4, worst, 1e-4 });
    }

    {
        auto lowest = 0.0;
        for (auto trial = 0; trial < 1000; ++trial)
        {
            auto const k = 2 + static_cast<std::size_t>(trial % 7);
            auto const p = CategoricalPolicy::from_logits(randomLogits(rng, k, 3.0));
            auto const q = CategoricalPolicy::from_logits(randomLogits(rng, k, 3.0));
            lowest = std::min({ lowest, kl_divergence(p, q), -std::abs(kl_divergence(p, p)) });
        }
        outcomes.push_back({ "kl_nonnegative", lowest >= 0.0, lowest < 0.0 ? -lowest : 0.0, 0.0 });
    }

    return outcomes;
}

} // namespace retouch
