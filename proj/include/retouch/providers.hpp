// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <retouch/media_io.hpp>
#include <retouch/saliency.hpp>
#include <retouch/text_metrics.hpp>

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace retouch
{

/// Localises distortions: one saliency value per image pixel.
class PerceptionProvider
{
  public:
    virtual ~PerceptionProvider() = default;
    [[nodiscard]] virtual SaliencyMap perceive(const ImageBuffer& image, std::string_view prompt) = 0;
};

/// Explains proposed regions; the result is aligned with `regions` by index.
class ReasoningProvider
{
  public:
    virtual ~ReasoningProvider() = default;
    [[nodiscard]] virtual std::vector<Diagnosis> diagnose(const ImageBuffer& image,
                                                          std::string_view prompt,
                                                          std::span<const RegionProposal> regions) = 0;
};

enum class ToolKind
{
    MaskGuided,
    InstructionDriven,
};

[[nodiscard]] std::string_view tool_kind_code(ToolKind kind) noexcept;

struct ToolDescriptor
{
    std::string name;
    ToolKind kind = ToolKind::MaskGuided;
    double cost_hint = 0.0;
};

/// Local editor. Mask-guided tools require `mask`, instruction-driven tools
/// require `instruction`; the output has the input's dimensions.
class InpaintTool
{
  public:
    virtual ~InpaintTool() = default;
    [[nodiscard]] virtual const ToolDescriptor& descriptor() const noexcept = 0;
    [[nodiscard]] virtual ImageBuffer inpaint(const ImageBuffer& image,
                                              const std::optional<BinaryMask>& mask,
                                              const std::optional<std::string>& instruction) = 0;
};

using ToolRegistry = std::vector<std::shared_ptr<InpaintTool>>;

enum class ToolPreference
{
    Auto,
    MaskGuided,
    InstructionDriven,
};

struct ToolPolicy
{
    ToolPreference prefer = ToolPreference::Auto;
    double max_cost = std::numeric_limits<double>::infinity();
};

/// Cheapest tool of the preferred kind whose cost is within max_cost; ties go
/// to registry order. Auto prefers instruction-driven editing for text
/// anomalies and mask-guided editing otherwise. Raises NoToolAvailable when
/// nothing qualifies.
[[nodiscard]] std::shared_ptr<InpaintTool> select_tool(const ToolRegistry& registry,
                                                       const Diagnosis& diagnosis,
                                                       const ToolPolicy& policy);

/// Checks the kind-specific input contract of InpaintTool::inpaint.
void check_tool_inputs(const ToolDescriptor& tool,
                       const ImageBuffer& image,
                       const std::optional<BinaryMask>& mask,
                       const std::optional<std::string>& instruction);

/// The three roles a loop run talks to.
struct Providers
{
    std::shared_ptr<PerceptionProvider> perception;
    std::shared_ptr<ReasoningProvider> reasoning;
    ToolRegistry tools;
};

} // namespace retouch
