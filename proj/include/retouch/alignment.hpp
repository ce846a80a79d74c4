// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <retouch/dataset.hpp>
#include <retouch/text_metrics.hpp>

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace retouch
{

/// Full distribution over a finite action set; every probability is positive.
class CategoricalPolicy
{
  public:
    explicit CategoricalPolicy(std::vector<double> probs);

    /// Numerically stable softmax of `logits`.
    [[nodiscard]] static CategoricalPolicy from_logits(std::span<const double> logits);

    [[nodiscard]] std::size_t size() const noexcept { return _probs.size(); }
    [[nodiscard]] double operator[](std::size_t action) const { return _probs[action]; }
    [[nodiscard]] std::span<const double> probs() const noexcept { return _probs; }

  private:
    std::vector<double> _probs;
};

struct GrpoConfig
{
    /// Clip half-width; infinity disables clipping.
    double epsilon_clip = 0.2;
    /// Weight of the KL penalty toward the reference policy.
    double beta = 0.04;

    void validate() const;
};

/// Sampled actions of one query and their scalar rewards.
struct GrpoGroup
{
    std::vector<std::size_t> actions;
    std::vector<double> rewards;

    void validate(std::size_t action_count) const;
};

/// (r - mean) / std with the population standard deviation. All-equal rewards
/// raise ZeroVariance.
[[nodiscard]] std::vector<double> group_advantages(std::span<const double> rewards);

/// Exact categorical divergence sum p * ln(p / q).
[[nodiscard]] double kl_divergence(const CategoricalPolicy& p, const CategoricalPolicy& q);

/// Clipped surrogate averaged over the group minus beta * KL(theta || ref).
/// This is an objective to maximise.
[[nodiscard]] double grpo_objective(const CategoricalPolicy& theta,
                                    const CategoricalPolicy& ref,
                                    const CategoricalPolicy& old,
                                    const GrpoGroup& group,
                                    const GrpoConfig& cfg);

/// Negated objective, for minimisers.
[[nodiscard]] double grpo_loss(const CategoricalPolicy& theta,
                               const CategoricalPolicy& ref,
                               const CategoricalPolicy& old,
                               const GrpoGroup& group,
                               const GrpoConfig& cfg);

/// Gradient of grpo_objective with respect to the logits of theta. Advantages
/// are constants; members whose clipped branch is active contribute zero.
[[nodiscard]] std::vector<double> grpo_gradient(std::span<const double> theta_logits,
                                                const CategoricalPolicy& ref,
                                                const CategoricalPolicy& old,
                                                const GrpoGroup& group,
                                                const GrpoConfig& cfg);

/// w_cat * [category match] + w_txt * rouge_l(descriptions). Weights must be
/// non-negative and sum to one.
[[nodiscard]] double compose_reward(const Diagnosis& pred,
                                    const RegionAnnotation& truth,
                                    double w_cat = 0.5,
                                    double w_txt = 0.5);

/// Low-rank adapter factors: delta = a * b with a (n x r) and b (r x m).
struct LoraFactors
{
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
};

[[nodiscard]] Eigen::MatrixXd lora_delta(const LoraFactors& factors);
[[nodiscard]] Eigen::MatrixXd lora_apply(const Eigen::MatrixXd& weights, const LoraFactors& factors);

/// Outcome of one self-check suite run by the grpo-check command.
struct CheckOutcome
{
    std::string name;
    bool passed = false;
    double max_error = 0.0;
    double tolerance = 0.0;
};

/// Randomised finite-difference and invariance suites for the GRPO kernels.
[[nodiscard]] std::vector<CheckOutcome> run_grpo_checks(std::uint64_t seed);

} // namespace retouch
