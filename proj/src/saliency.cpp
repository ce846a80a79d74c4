// SPDX-License-Identifier: Apache-2.0
#include <retouch/error.hpp>
#include <retouch/saliency.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <utility>

namespace retouch
{

namespace
{

void requireSameSize(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw Error(ErrorKind::DimensionMismatch, fmt::format("map sizes differ: {} vs {}", a.size(), b.size()));
    if (a.empty())
        throw Error(ErrorKind::EmptyInput, "maps are empty");
}

void requireSameDims(const SaliencyMap& a, const SaliencyMap& b)
{
    if (a.width() != b.width() || a.height() != b.height())
        throw Error(ErrorKind::DimensionMismatch,
                    fmt::format("map dimensions differ: {}x{} vs {}x{}", a.width(), a.height(), b.width(), b.height()));
}

void requireNonNegative(std::span<const double> values, const char* what)
{
    if (std::ranges::any_of(values, [](double v) { return !(v >= 0.0) || !std::isfinite(v); }))
        throw Error(ErrorKind::InvalidArgument, fmt::format("{} map has negative or non-finite values", what));
}

struct Normalized
{
    std::vector<double> values;
    double total = 0.0;
};

Normalized normalizeOrKeep(std::span<const double> values)
{
    auto const total = std::accumulate(values.begin(), values.end(), 0.0);
    auto out = Normalized { std::vector<double>(values.begin(), values.end()), total };
    if (total > 0.0)
        for (auto& v: out.values)
            v /= total;
    return out;
}

} // namespace

SaliencyMap::SaliencyMap(FloatGrid grid): _grid(std::move(grid))
{
    if (!std::ranges::all_of(_grid.data(), [](float v) { return v >= 0.0F && v <= 1.0F; }))
        throw Error(ErrorKind::InvalidArgument, "saliency values must lie in [0, 1]");
}

SaliencyMap::SaliencyMap(std::size_t width, std::size_t height, std::vector<float> values):
    SaliencyMap(FloatGrid(width, height, std::move(values)))
{
}

SaliencyMap SaliencyMap::zeros(std::size_t width, std::size_t height)
{
    return SaliencyMap(FloatGrid::zeros(width, height));
}

float SaliencyMap::max() const
{
    return *std::ranges::max_element(_grid.data());
}

std::vector<double> SaliencyMap::to_doubles() const
{
    return { _grid.data().begin(), _grid.data().end() };
}

void HybridLossConfig::validate() const
{
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw Error(ErrorKind::InvalidArgument, fmt::format("alpha {} outside [0, 1]", alpha));
    if (!(epsilon > 0.0))
        throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
}

double mean_squared_error(std::span<const double> pred, std::span<const double> truth)
{
    requireSameSize(pred, truth);
    auto sum = 0.0;
    for (auto i = std::size_t { 0 }; i < pred.size(); ++i)
        sum += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    return sum / static_cast<double>(pred.size());
}

double kl_divergence(std::span<const double> pred, std::span<const double> truth, double epsilon)
{
    requireSameSize(pred, truth);
    requireNonNegative(pred, "predicted");
    requireNonNegative(truth, "ground-truth");
    auto const g = normalizeOrKeep(truth);
    if (!(g.total > 0.0))
        throw Error(ErrorKind::ZeroSum, "ground-truth map sums to zero; KLD undefined");
    auto const s = normalizeOrKeep(pred);

    auto sum = 0.0;
    for (auto i = std::size_t { 0 }; i < pred.size(); ++i)
    {
        auto const gi = g.values[i];
        if (gi > 0.0)
            sum += gi * std::log(gi / (s.values[i] + epsilon) + epsilon);
    }
    return sum;
}

double hybrid_loss(std::span<const double> pred, std::span<const double> truth, const HybridLossConfig& cfg)
{
    cfg.validate();
    auto loss = cfg.alpha * mean_squared_error(pred, truth);
    // The KLD term only participates (and can only fail) when it carries weight.
    if (cfg.alpha < 1.0)
        loss += (1.0 - cfg.alpha) * kl_divergence(pred, truth, cfg.epsilon);
    return loss;
}

std::vector<double> hybrid_loss_gradient(std::span<const double> pred,
                                         std::span<const double> truth,
                                         const HybridLossConfig& cfg)
{
    cfg.validate();
    requireSameSize(pred, truth);
    auto const n = pred.size();
    auto grad = std::vector<double>(n, 0.0);

    for (auto i = std::size_t { 0 }; i < n; ++i)
        grad[i] = cfg.alpha * 2.0 * (pred[i] - truth[i]) / static_cast<double>(n);

    if (cfg.alpha >= 1.0)
        return grad;

    requireNonNegative(pred, "predicted");
    requireNonNegative(truth, "ground-truth");
    auto const g = normalizeOrKeep(truth);
    if (!(g.total > 0.0))
        throw Error(ErrorKind::ZeroSum, "ground-truth map sums to zero; KLD undefined");
    auto const s = normalizeOrKeep(pred);
    auto const eps = cfg.epsilon;

    // d term_i / d s_i, then chain through s = p / sum(p).
    auto dTerm = std::vector<double>(n, 0.0);
    for (auto i = std::size_t { 0 }; i < n; ++i)
    {
        auto const gi = g.values[i];
        if (gi <= 0.0)
            continue;
        auto const shifted = s.values[i] + eps;
        auto const ratio = gi / shifted;
        dTerm[i] = -gi * ratio / ((ratio + eps) * shifted);
    }

    auto const klWeight = 1.0 - cfg.alpha;
    if (s.total > 0.0)
    {
        auto projected = 0.0;
        for (auto i = std::size_t { 0 }; i < n; ++i)
            projected += dTerm[i] * s.values[i];
        for (auto j = std::size_t { 0 }; j < n; ++j)
            grad[j] += klWeight * (dTerm[j] - projected) / s.total;
    }
    else
    {
        for (auto j = std::size_t { 0 }; j < n; ++j)
            grad[j] += klWeight * dTerm[j];
    }
    return grad;
}

double hybrid_loss(const SaliencyMap& pred, const SaliencyMap& truth, const HybridLossConfig& cfg)
{
    requireSameDims(pred, truth);
    return hybrid_loss(pred.to_doubles(), truth.to_doubles(), cfg);
}

FloatGrid hybrid_loss_gradient(const SaliencyMap& pred, const SaliencyMap& truth, const HybridLossConfig& cfg)
{
    requireSameDims(pred, truth);
    auto const grad = hybrid_loss_gradient(pred.to_doubles(), truth.to_doubles(), cfg);
    auto values = std::vector<float>(grad.size());
    std::ranges::transform(grad, values.begin(), [](double v) { return static_cast<float>(v); });
    return FloatGrid(pred.width(), pred.height(), std::move(values));
}

BinaryMask binarize(const SaliencyMap& map, double tau)
{
    auto mask = BinaryMask(map.width(), map.height());
    auto const values = map.values();
    for (auto i = std::size_t { 0 }; i < values.size(); ++i)
        mask.cells[i] = static_cast<double>(values[i]) >= tau ? 1 : 0;
    return mask;
}

BinaryMask dilate(const BinaryMask& mask, std::size_t radius)
{
    if (radius == 0)
        return mask;

    // The square element is separable: a horizontal pass followed by a vertical one.
    auto const w = mask.width;
    auto const h = mask.height;
    auto horizontal = BinaryMask(w, h);
    for (auto y = std::size_t { 0 }; y < h; ++y)
        for (auto x = std::size_t { 0 }; x < w; ++x)
        {
            if (!mask.test(x, y))
                continue;
            auto const lo = x >= radius ? x - radius : 0;
            auto const hi = std::min(w - 1, x + radius);
            for (auto xx = lo; xx <= hi; ++xx)
                horizontal.set(xx, y);
        }

    auto out = BinaryMask(w, h);
    for (auto y = std::size_t { 0 }; y < h; ++y)
        for (auto x = std::size_t { 0 }; x < w; ++x)
        {
            if (!horizontal.test(x, y))
                continue;
            auto const lo = y >= radius ? y - radius : 0;
            auto const hi = std::min(h - 1, y + radius);
            for (auto yy = lo; yy <= hi; ++yy)
                out.set(x, yy);
        }
    return out;
}

std::vector<RegionProposal> extract_regions(const BinaryMask& mask, const SaliencyMap& source, std::size_t min_area)
{
    if (mask.width != source.width() || mask.height != source.height())
        throw Error(ErrorKind::DimensionMismatch, "mask and saliency map dimensions differ");

    auto const w = mask.width;
    auto const h = mask.height;
    auto visited = std::vector<bool>(w * h, false);
    auto regions = std::vector<RegionProposal> {};
    auto frontier = std::queue<std::pair<std::size_t, std::size_t>> {};

    for (auto sy = std::size_t { 0 }; sy < h; ++sy)
        for (auto sx = std::size_t { 0 }; sx < w; ++sx)
        {
            if (!mask.test(sx, sy) || visited[sy * w + sx])
                continue;

            auto region = RegionProposal {
                .mask = BinaryMask(w, h),
                .bbox = BoundingBox { .x0 = sx, .y0 = sy, .x1 = sx, .y1 = sy },
                .peak_saliency = 0.0F,
                .area = 0,
            };
            visited[sy * w + sx] = true;
            frontier.emplace(sx, sy);
            while (!frontier.empty())
            {
                auto const [x, y] = frontier.front();
                frontier.pop();
                region.mask.set(x, y);
                ++region.area;
                region.peak_saliency = std::max(region.peak_saliency, source.at(x, y));
                region.bbox.x0 = std::min(region.bbox.x0, x);
                region.bbox.y0 = std::min(region.bbox.y0, y);
                region.bbox.x1 = std::max(region.bbox.x1, x);
                region.bbox.y1 = std::max(region.bbox.y1, y);

                for (auto dy = -1; dy <= 1; ++dy)
                    for (auto dx = -1; dx <= 1; ++dx)
                    {
                        auto const nx = static_cast<std::ptrdiff_t>(x) + dx;
                        auto const ny = static_cast<std::ptrdiff_t>(y) + dy;
                        if (nx < 0 || ny < 0 || nx >= static_cast<std::ptrdiff_t>(w)
                            || ny >= static_cast<std::ptrdiff_t>(h))
                            continue;
                        auto const idx = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
                        if (mask.cells[idx] && !visited[idx])
                        {
                            visited[idx] = true;
                            frontier.emplace(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny));
                        }
                    }
            }
            if (region.area >= min_area && region.area > 0)
                regions.push_back(std::move(region));
        }

    std::ranges::stable_sort(regions, [](const RegionProposal& a, const RegionProposal& b) {
        if (a.peak_saliency != b.peak_saliency)
            return a.peak_saliency > b.peak_saliency;
        return std::pair(a.bbox.y0, a.bbox.x0) < std::pair(b.bbox.y0, b.bbox.x0);
    });
    return regions;
}

std::vector<RegionProposal> propose_masks(const SaliencyMap& map, const ProposalConfig& cfg)
{
    if (!(cfg.tau >= 0.0 && cfg.tau <= 1.0))
        throw Error(ErrorKind::InvalidArgument, fmt::format("tau {} outside [0, 1]", cfg.tau));
    return extract_regions(dilate(binarize(map, cfg.tau), cfg.dilation_radius), map, cfg.min_area);
}

} // namespace retouch
