// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <retouch/providers.hpp>

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace retouch
{

/// Test double for the loop: an image plus a hidden distortion field that a
/// perfect perceiver reports and every edit attenuates by `decay`.
struct SyntheticScene
{
    ImageBuffer image;
    FloatGrid field;
    double decay = 0.5;

    void validate() const;
};

/// Field with a single Gaussian bump of the given height and width (std in
/// pixels), centred at (cx, cy). Values are exact at the centre.
[[nodiscard]] FloatGrid gaussian_bump(std::size_t width,
                                      std::size_t height,
                                      std::size_t cx,
                                      std::size_t cy,
                                      double peak,
                                      double sigma);

/// Hidden field returned verbatim.
[[nodiscard]] SaliencyMap mock_perceive(const SyntheticScene& scene);

/// One diagnosis per region. The category is a seeded hash of the bounding
/// box, the description "<category> at (x0,y0)-(x1,y1)", and the severity the
/// region's peak saliency. Region ids are the indices.
[[nodiscard]] std::vector<Diagnosis> mock_diagnose(std::span<const RegionProposal> regions, std::uint64_t seed);

/// Multiplies the field by decay inside `mask` and paints masked pixels with
/// the mean masked colour.
[[nodiscard]] SyntheticScene mock_inpaint(const SyntheticScene& scene, const BinaryMask& mask);

/// Mutable scene shared by the mock providers of one loop run.
class MockBackend
{
  public:
    explicit MockBackend(SyntheticScene scene, std::uint64_t seed = 0);

    [[nodiscard]] SaliencyMap perceive(const ImageBuffer& image) const;
    [[nodiscard]] std::vector<Diagnosis> diagnose(std::span<const RegionProposal> regions) const;
    /// Edits `image` inside `mask` and attenuates the hidden field there.
    [[nodiscard]] ImageBuffer inpaint(const ImageBuffer& image, const BinaryMask& mask);

    [[nodiscard]] SyntheticScene scene() const;

  private:
    mutable std::mutex _mutex;
    SyntheticScene _scene;
    std::uint64_t _seed;
};

/// Perception, reasoning and a two-tool registry ("mock-mask", cost 1, and
/// "mock-instruct", cost 2) bound to one backend. The instruction tool edits
/// the bounding box written in the instruction, or the whole image if none.
[[nodiscard]] Providers make_mock_providers(std::shared_ptr<MockBackend> backend);

/// Parses "(x0,y0)-(x1,y1)" out of free text into a rectangle mask.
[[nodiscard]] std::optional<BinaryMask> parse_bbox_mask(std::string_view text, std::size_t width, std::size_t height);

} // namespace retouch
