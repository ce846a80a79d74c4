// SPDX-License-Identifier: Apache-2.0
#include <retouch/error.hpp>
#include <retouch/saliency_metrics.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace retouch
{

namespace
{

void requirePair(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw Error(ErrorKind::DimensionMismatch, fmt::format("map sizes differ: {} vs {}", a.size(), b.size()));
    if (a.empty())
        throw Error(ErrorKind::EmptyInput, "maps are empty");
}

void requireNonConstant(std::span<const double> values, const char* what)
{
    auto const [lo, hi] = std::ranges::minmax_element(values);
    if (*lo == *hi)
        throw Error(ErrorKind::ZeroVariance, fmt::format("{} map is constant", what));
}

double mean(std::span<const double> values)
{
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

void requireFixations(const MapView& map, const FixationSet& fixations)
{
    if (map.values.size() != map.width * map.height || map.values.empty())
        throw Error(ErrorKind::DimensionMismatch, "map view size does not match its dimensions");
    if (fixations.empty())
        throw Error(ErrorKind::EmptyInput, "fixation set is empty");
    for (auto const& f: fixations)
        if (f.x >= map.width || f.y >= map.height)
            throw Error(ErrorKind::OutOfBounds,
                        fmt::format("fixation ({}, {}) outside {}x{} map", f.x, f.y, map.width, map.height));
}

} // namespace

namespace metrics
{

    double cc(std::span<const double> pred, std::span<const double> truth)
    {
        requirePair(pred, truth);
        requireNonConstant(pred, "predicted");
        requireNonConstant(truth, "ground-truth");
        auto const mp = mean(pred);
        auto const mt = mean(truth);
        auto cov = 0.0;
        auto vp = 0.0;
        auto vt = 0.0;
        for (auto i = std::size_t { 0 }; i < pred.size(); ++i)
        {
            auto const dp = pred[i] - mp;
            auto const dt = truth[i] - mt;
            cov += dp * dt;
            vp += dp * dp;
            vt += dt * dt;
        }
        return std::clamp(cov / std::sqrt(vp * vt), -1.0, 1.0);
    }

    double sim(std::span<const double> pred, std::span<const double> truth)
    {
        requirePair(pred, truth);
        auto const sp = std::accumulate(pred.begin(), pred.end(), 0.0);
        auto const st = std::accumulate(truth.begin(), truth.end(), 0.0);
        if (std::ranges::any_of(pred, [](double v) { return v < 0.0; })
            || std::ranges::any_of(truth, [](double v) { return v < 0.0; }))
            throw Error(ErrorKind::InvalidArgument, "SIM requires non-negative maps");
        if (!(sp > 0.0) || !(st > 0.0))
            throw Error(ErrorKind::ZeroSum, "SIM requires maps with positive sum");
        auto total = 0.0;
        for (auto i = std::size_t { 0 }; i < pred.size(); ++i)
            total += std::min(pred[i] / sp, truth[i] / st);
        return total;
    }

    double kld(std::span<const double> pred, std::span<const double> truth, double epsilon)
    {
        return kl_divergence(pred, truth, epsilon);
    }

    double nss(const MapView& pred, const FixationSet& fixations)
    {
        requireFixations(pred, fixations);
        requireNonConstant(pred.values, "predicted");
        auto const mu = mean(pred.values);
        auto var = 0.0;
        for (auto const v: pred.values)
            var += (v - mu) * (v - mu);
        auto const sigma = std::sqrt(var / static_cast<double>(pred.values.size()));

        auto total = 0.0;
        for (auto const& f: fixations)
            total += (pred.values[f.y * pred.width + f.x] - mu) / sigma;
        return total / static_cast<double>(fixations.size());
    }

    double auc_judd(const MapView& pred, const FixationSet& fixations)
    {
        requireFixations(pred, fixations);
        auto const n = pred.values.size();
        auto positive = std::vector<bool>(n, false);
        for (auto const& f: fixations)
            positive[f.y * pred.width + f.x] = true;
        auto const nPos = static_cast<std::uint64_t>(std::ranges::count(positive, true));
        auto const nNeg = static_cast<std::uint64_t>(n) - nPos;
        if (nNeg == 0)
            throw Error(ErrorKind::EmptyInput, "AUC needs at least one non-fixated pixel");

        auto order = std::vector<std::size_t>(n);
        std::iota(order.begin(), order.end(), std::size_t { 0 });
        std::ranges::sort(order, [&](std::size_t a, std::size_t b) { return pred.values[a] > pred.values[b]; });

        // Walk the ROC one distinct threshold at a time and accumulate twice the
        // trapezoid area in integers: each step adds dFP * (2 * TP + dTP).
        auto twiceArea = std::uint64_t { 0 };
        auto tp = std::uint64_t { 0 };
        for (auto i = std::size_t { 0 }; i < n;)
        {
            auto const threshold = pred.values[order[i]];
            auto dTp = std::uint64_t { 0 };
            auto dFp = std::uint64_t { 0 };
            for (; i < n && pred.values[order[i]] == threshold; ++i)
                (positive[order[i]] ? dTp : dFp) += 1;
            twiceArea += dFp * (2 * tp + dTp);
            tp += dTp;
        }
        return static_cast<double>(twiceArea) / (2.0 * static_cast<double>(nPos) * static_cast<double>(nNeg));
    }

} // namespace metrics

MetricReport evaluate_all(const SaliencyMap& pred, const SaliencyMap& truth, const FixationSet& fixations, double epsilon)
{
    if (pred.width() != truth.width() || pred.height() != truth.height())
        throw Error(ErrorKind::DimensionMismatch, "predicted and ground-truth maps differ in size");
    auto const p = pred.to_doubles();
    auto const t = truth.to_doubles();
    auto const view = MapView { pred.width(), pred.height(), p };
    return MetricReport {
        .auc_judd = metrics::auc_judd(view, fixations),
        .nss = metrics::nss(view, fixations),
        .cc = metrics::cc(p, t),
        .sim = metrics::sim(p, t),
        .kld = metrics::kld(p, t, epsilon),
    };
}

MetricReport mean_report(std::span<const MetricReport> reports)
{
    if (reports.empty())
        throw Error(ErrorKind::EmptyInput, "no reports to aggregate");
    auto sum = MetricReport {};
    for (auto const& r: reports)
    {
        sum.auc_judd += r.auc_judd;
        sum.nss += r.nss;
        sum.cc += r.cc;
        sum.sim += r.sim;
        sum.kld += r.kld;
    }
    auto const n = static_cast<double>(reports.size());
    return MetricReport { sum.auc_judd / n, sum.nss / n, sum.cc / n, sum.sim / n, sum.kld / n };
}

} // namespace retouch
