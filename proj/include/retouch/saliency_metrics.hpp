// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <retouch/saliency.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace retouch
{

struct Fixation
{
    std::size_t x = 0;
    std::size_t y = 0;

    friend bool operator==(const Fixation&, const Fixation&) = default;
};

using FixationSet = std::vector<Fixation>;

/// Read-only view of a row-major map of doubles.
struct MapView
{
    std::size_t width = 0;
    std::size_t height = 0;
    std::span<const double> values;
};

struct MetricReport
{
    double auc_judd = 0.0;
    double nss = 0.0;
    double cc = 0.0;
    double sim = 0.0;
    double kld = 0.0;

    friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

namespace metrics
{

    /// Pearson correlation of two equally sized pixel populations.
    [[nodiscard]] double cc(std::span<const double> pred, std::span<const double> truth);

    /// Histogram intersection of the two sum-normalised maps.
    [[nodiscard]] double sim(std::span<const double> pred, std::span<const double> truth);

    /// Same quantity as the KLD term of the hybrid saliency loss.
    [[nodiscard]] double kld(std::span<const double> pred, std::span<const double> truth, double epsilon);

    /// Mean z-score (population std) of the map at each fixation; duplicates count.
    [[nodiscard]] double nss(const MapView& pred, const FixationSet& fixations);

    /// Area under the fixation-vs-background ROC. Thresholds sweep every
    /// distinct map value, so tied positive/negative pairs earn half credit and
    /// the result equals the Mann-Whitney statistic U / (n_pos * n_neg).
    [[nodiscard]] double auc_judd(const MapView& pred, const FixationSet& fixations);

} // namespace metrics

[[nodiscard]] MetricReport evaluate_all(const SaliencyMap& pred,
                                        const SaliencyMap& truth,
                                        const FixationSet& fixations,
                                        double epsilon = 1e-7);

/// Unweighted mean of per-image reports.
[[nodiscard]] MetricReport mean_report(std::span<const MetricReport> reports);

} // namespace retouch
