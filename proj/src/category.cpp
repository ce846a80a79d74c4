// SPDX-License-Identifier: Apache-2.0
#include <retouch/category.hpp>

namespace retouch
{

namespace
{

struct CategoryInfo
{
    std::string_view code;
    std::string_view label;
    DistortionDimension dimension;
};

constexpr std::array<CategoryInfo, CategoryCount> Categories = { {
    { "hand", "hand deformity", DistortionDimension::HumanAnatomy },
    { "limb", "limb deformity", DistortionDimension::HumanAnatomy },
    { "face", "face distortion", DistortionDimension::HumanAnatomy },
    { "body", "body proportion error", DistortionDimension::HumanAnatomy },
    { "attribute", "attribute mismatch", DistortionDimension::AttributeInconsistency },
    { "count", "count inconsistency", DistortionDimension::AttributeInconsistency },
    { "spatial", "spatial relation error", DistortionDimension::Spatial },
    { "perspective", "perspective error", DistortionDimension::Spatial },
    { "object_deformation", "object deformation", DistortionDimension::ObjectDeformation },
    { "object_redundancy", "redundant object", DistortionDimension::ObjectDeformation },
    { "interaction", "action or interaction distortion", DistortionDimension::ActionInteraction },
    { "text", "text anomaly", DistortionDimension::Miscellaneous },
} };

} // namespace

std::string_view category_code(DistortionCategory category) noexcept
{
    return Categories[category_index(category)].code;
}

std::string_view category_label(DistortionCategory category) noexcept
{
    return Categories[category_index(category)].label;
}

DistortionDimension category_dimension(DistortionCategory category) noexcept
{
    return Categories[category_index(category)].dimension;
}

std::string_view dimension_code(DistortionDimension dimension) noexcept
{
    switch (dimension)
    {
        case DistortionDimension::HumanAnatomy: return "human_anatomy";
        case DistortionDimension::AttributeInconsistency: return "attribute_inconsistency";
        case DistortionDimension::Spatial: return "spatial";
        case DistortionDimension::ObjectDeformation: return "object_deformation_or_redundancy";
        case DistortionDimension::ActionInteraction: return "action_interaction";
        case DistortionDimension::Miscellaneous: return "miscellaneous";
    }
    return "unknown";
}

std::optional<DistortionCategory> parse_category(std::string_view code) noexcept
{
    for (auto const category: AllCategories)
        if (category_code(category) == code)
            return category;
    return std::nullopt;
}

} // namespace retouch
