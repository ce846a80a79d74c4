// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <retouch/media_io.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace retouch
{

/// Distortion-saliency map: a FloatGrid whose values all lie in [0, 1].
class SaliencyMap
{
  public:
    explicit SaliencyMap(FloatGrid grid);
    SaliencyMap(std::size_t width, std::size_t height, std::vector<float> values);

    static SaliencyMap zeros(std::size_t width, std::size_t height);

    [[nodiscard]] const FloatGrid& grid() const noexcept { return _grid; }
    [[nodiscard]] std::size_t width() const noexcept { return _grid.width(); }
    [[nodiscard]] std::size_t height() const noexcept { return _grid.height(); }
    [[nodiscard]] std::span<const float> values() const noexcept { return _grid.data(); }
    [[nodiscard]] float at(std::size_t x, std::size_t y) const { return _grid.at(x, y); }
    [[nodiscard]] float max() const;

    /// Values widened to double for metric and loss kernels.
    [[nodiscard]] std::vector<double> to_doubles() const;

    friend bool operator==(const SaliencyMap&, const SaliencyMap&) = default;

  private:
    FloatGrid _grid;
};

struct HybridLossConfig
{
    double alpha = 0.5;
    double epsilon = 1e-7;

    void validate() const;
};

/// Inclusive pixel bounds.
struct BoundingBox
{
    std::size_t x0 = 0;
    std::size_t y0 = 0;
    std::size_t x1 = 0;
    std::size_t y1 = 0;

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// One connected distortion candidate extracted from a saliency map.
struct RegionProposal
{
    BinaryMask mask;
    BoundingBox bbox;
    float peak_saliency = 0.0F;
    std::size_t area = 0;

    friend bool operator==(const RegionProposal&, const RegionProposal&) = default;
};

struct ProposalConfig
{
    double tau = 0.5;
    std::size_t dilation_radius = 2;
    std::size_t min_area = 4;
};

// Loss kernels work on flat double arrays so finite-difference checks are not
// limited by float32 storage; the SaliencyMap overloads widen and forward.

[[nodiscard]] double mean_squared_error(std::span<const double> pred, std::span<const double> truth);

/// KL(truth || pred) after sum-normalising both maps:
/// sum_i g_i * ln(g_i / (s_i + eps) + eps). A zero-sum pred is left unnormalised.
/// Throws ZeroSum when truth sums to zero.
[[nodiscard]] double kl_divergence(std::span<const double> pred, std::span<const double> truth, double epsilon);

[[nodiscard]] double hybrid_loss(std::span<const double> pred,
                                 std::span<const double> truth,
                                 const HybridLossConfig& cfg);
[[nodiscard]] std::vector<double> hybrid_loss_gradient(std::span<const double> pred,
                                                       std::span<const double> truth,
                                                       const HybridLossConfig& cfg);

[[nodiscard]] double hybrid_loss(const SaliencyMap& pred, const SaliencyMap& truth, const HybridLossConfig& cfg);
[[nodiscard]] FloatGrid hybrid_loss_gradient(const SaliencyMap& pred,
                                             const SaliencyMap& truth,
                                             const HybridLossConfig& cfg);

/// Cell set iff value >= tau.
[[nodiscard]] BinaryMask binarize(const SaliencyMap& map, double tau);

/// Dilation by a (2r+1)x(2r+1) square, clipped at the borders.
[[nodiscard]] BinaryMask dilate(const BinaryMask& mask, std::size_t radius);

/// 8-connected components with area >= min_area, ordered by peak saliency
/// descending, then (y0, x0) ascending.
[[nodiscard]] std::vector<RegionProposal> extract_regions(const BinaryMask& mask,
                                                          const SaliencyMap& source,
                                                          std::size_t min_area);

[[nodiscard]] std::vector<RegionProposal> propose_masks(const SaliencyMap& map, const ProposalConfig& cfg);

} // namespace retouch
