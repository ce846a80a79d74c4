// SPDX-License-Identifier: Apache-2.0
#include <retouch/error.hpp>
#include <retouch/providers.hpp>

#include <fmt/format.h>

namespace retouch
{

std::string_view tool_kind_code(ToolKind kind) noexcept
{
    switch (kind)
    {
        case ToolKind::MaskGuided: return "mask_guided";
        case ToolKind::InstructionDriven: return "instruction_driven";
    }
    return "unknown";
}

std::shared_ptr<InpaintTool> select_tool(const ToolRegistry& registry,
                                         const Diagnosis& diagnosis,
                                         const ToolPolicy& policy)
{
    if (registry.empty())
        throw Error(ErrorKind::NoToolAvailable, "tool registry is empty");

    auto wanted = ToolKind::MaskGuided;
    switch (policy.prefer)
    {
        case ToolPreference::MaskGuided: wanted = ToolKind::MaskGuided; break;
        case ToolPreference::InstructionDriven: wanted = ToolKind::InstructionDriven; break;
        case ToolPreference::Auto:
            wanted = diagnosis.category == DistortionCategory::TextAnomaly ? ToolKind::InstructionDriven
                                                                           : ToolKind::MaskGuided;
            break;
    }

    auto best = std::shared_ptr<InpaintTool> {};
    for (auto const& tool: registry)
    {
        auto const& d = tool->descriptor();
        if (d.kind != wanted || d.cost_hint > policy.max_cost)
            continue;
        if (!best || d.cost_hint < best->descriptor().cost_hint)
            best = tool;
    }
    if (!best)
        throw Error(ErrorKind::NoToolAvailable,
                    fmt::format("no {} tool within cost {}", tool_kind_code(wanted), policy.max_cost));
    return best;
}

void check_tool_inputs(const ToolDescriptor& tool,
                       const ImageBuffer& image,
                       const std::optional<BinaryMask>& mask,
                       const std::optional<std::string>& instruction)
{
    if (tool.kind == ToolKind::MaskGuided && !mask)
        throw Error(ErrorKind::InvalidArgument, fmt::format("tool '{}' requires a mask", tool.name));
    if (tool.kind == ToolKind::InstructionDriven && !instruction)
        throw Error(ErrorKind::InvalidArgument, fmt::format("tool '{}' requires an instruction", tool.name));
    if (mask && (mask->width != image.width() || mask->height != image.height()))
        throw Error(ErrorKind::DimensionMismatch,
                    fmt::format("mask {}x{} does not match image {}x{}",
                                mask->width,
                                mask->height,
                                image.width(),
                                image.height()));
}

} // namespace retouch
