// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace retouch
{

/// Top-level distortion dimensions.
enum class DistortionDimension
{
    HumanAnatomy,
    AttributeInconsistency,
    Spatial,
    ObjectDeformation,
    ActionInteraction,
    Miscellaneous,
};

/// The twelve fine-grained distortion categories. The enumerator order is the
/// category-code order used for tie-breaking and must not change.
enum class DistortionCategory
{
    HandDeformity,
    LimbDeformity,
    FaceDistortion,
    BodyProportion,
    AttributeMismatch,
    CountInconsistency,
    SpatialRelation,
    PerspectiveError,
    ObjectDeformation,
    ObjectRedundancy,
    InteractionError,
    TextAnomaly,
};

inline constexpr std::size_t CategoryCount = 12;

inline constexpr std::array<DistortionCategory, CategoryCount> AllCategories = {
    DistortionCategory::HandDeformity,     DistortionCategory::LimbDeformity,
    DistortionCategory::FaceDistortion,    DistortionCategory::BodyProportion,
    DistortionCategory::AttributeMismatch, DistortionCategory::CountInconsistency,
    DistortionCategory::SpatialRelation,   DistortionCategory::PerspectiveError,
    DistortionCategory::ObjectDeformation, DistortionCategory::ObjectRedundancy,
    DistortionCategory::InteractionError,  DistortionCategory::TextAnomaly,
};

/// Stable string code, e.g. "hand".
[[nodiscard]] std::string_view category_code(DistortionCategory category) noexcept;

/// Human-readable label, e.g. "hand deformity".
[[nodiscard]] std::string_view category_label(DistortionCategory category) noexcept;

[[nodiscard]] DistortionDimension category_dimension(DistortionCategory category) noexcept;

[[nodiscard]] std::string_view dimension_code(DistortionDimension dimension) noexcept;

[[nodiscard]] std::optional<DistortionCategory> parse_category(std::string_view code) noexcept;

[[nodiscard]] constexpr std::size_t category_index(DistortionCategory category) noexcept
{
    return static_cast<std::size_t>(category);
}

} // namespace retouch
