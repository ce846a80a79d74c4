// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <retouch/category.hpp>
#include <retouch/media_io.hpp>
#include <retouch/saliency.hpp>
#include <retouch/saliency_metrics.hpp>

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace retouch
{

/// One annotated distortion: a center pixel, category and short description.
struct RegionAnnotation
{
    std::size_t x = 0;
    std::size_t y = 0;
    DistortionCategory category = DistortionCategory::HandDeformity;
    std::string description;
    std::string annotator;

    friend bool operator==(const RegionAnnotation&, const RegionAnnotation&) = default;
};

/// One dataset sample. Before reconciliation `regions` holds every
/// annotator's marks (distinguished by `annotator`); afterwards, the consensus.
struct AnnotationRecord
{
    std::string image_id;
    std::string image;
    std::string prompt;
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<RegionAnnotation> regions;

    friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

struct DatasetStats
{
    std::size_t image_count = 0;
    std::size_t region_count = 0;
    std::size_t description_words = 0;
    double regions_per_image = 0.0;
    double mean_description_words = 0.0;
    std::map<DistortionCategory, std::size_t> category_counts;
    /// Share of regions per category; only categories that occur are present.
    std::map<DistortionCategory, double> category_histogram;
};

struct GroundTruth
{
    SaliencyMap map;
    FixationSet fixations;
};

/// Annotator label given to reconciled regions.
inline constexpr std::string_view ConsensusAnnotator = "consensus";

// JSON-lines: one record per line with fields image_id, image, prompt, width,
// height and regions[{x, y, category, description, annotator}]. Blank lines
// are skipped and unknown fields are dropped. Errors carry the 1-based line.
[[nodiscard]] std::vector<AnnotationRecord> parse_dataset(std::string_view text);
[[nodiscard]] std::string serialize_dataset(std::span<const AnnotationRecord> records);

/// Disc radius for a region annotation: one twentieth of the image height.
[[nodiscard]] constexpr double region_radius(std::size_t image_height) noexcept
{
    return static_cast<double>(image_height) / 20.0;
}

/// Pixels within region_radius(height) of the center (squared distance <= r^2), clipped.
[[nodiscard]] BinaryMask rasterize_region(std::size_t center_x,
                                          std::size_t center_y,
                                          std::size_t image_height,
                                          std::size_t image_width);

/// Clusters regions from different annotators lying within `match_radius`
/// (single linkage) and keeps clusters backed by a strict majority of the
/// annotators. Category: modal, ties to the lower category code. Center:
/// coordinate-wise median (lower median for even counts). Description: the
/// longest, ties to the lexicographically smallest. Output is sorted by
/// (y, x, category) so it does not depend on annotator order.
[[nodiscard]] std::vector<RegionAnnotation> reconcile_majority(
    std::span<const std::vector<RegionAnnotation>> per_annotator, double match_radius);

/// Splits a raw record's regions into one list per distinct annotator id, in
/// first-appearance order.
[[nodiscard]] std::vector<std::vector<RegionAnnotation>> group_by_annotator(const AnnotationRecord& record);

[[nodiscard]] DatasetStats compute_stats(std::span<const AnnotationRecord> records);

/// Union of the rasterised region discs as a {0,1} map (optionally
/// Gaussian-blurred with std `blur_sigma` pixels), plus region centers as fixations.
[[nodiscard]] GroundTruth ground_truth_map(const AnnotationRecord& record, double blur_sigma = 0.0);

/// Separable Gaussian blur with border renormalisation; sigma <= 0 is identity.
[[nodiscard]] SaliencyMap gaussian_blur(const SaliencyMap& map, double sigma);

[[nodiscard]] std::size_t count_words(std::string_view text);

/// Identifier of the k-th region of a record, "<image_id>#<k>".
[[nodiscard]] std::string region_id(const AnnotationRecord& record, std::size_t index);

} // namespace retouch
