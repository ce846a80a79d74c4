// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <retouch/category.hpp>
#include <retouch/dataset.hpp>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace retouch
{

/// Region-level judgment produced by a reasoning provider.
struct Diagnosis
{
    std::string region_id;
    DistortionCategory category = DistortionCategory::HandDeformity;
    std::string description;
    double severity = 0.0;

    void validate() const;

    friend bool operator==(const Diagnosis&, const Diagnosis&) = default;
};

/// A ground-truth region addressed by id, used to pair predictions with labels.
struct LabeledRegion
{
    std::string region_id;
    RegionAnnotation annotation;
};

struct ReasoningReport
{
    double accuracy = 0.0;
    double rouge_l = 0.0;
    double meteor_lite = 0.0;
};

/// Embedding-based similarity hook (Word2Vec/SimCSE style). Not implemented
/// here; present so callers can plug a scorer in alongside the lexical metrics.
class EmbeddingProvider
{
  public:
    virtual ~EmbeddingProvider() = default;
    [[nodiscard]] virtual double similarity(std::string_view candidate, std::string_view reference) const = 0;
};

/// Lowercased alphanumeric runs; bytes >= 0x80 are kept inside tokens so UTF-8
/// words stay intact.
[[nodiscard]] std::vector<std::string> tokenize(std::string_view text);

[[nodiscard]] std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// ROUGE-L F-measure over tokens.
[[nodiscard]] double rouge_l(std::string_view candidate, std::string_view reference);

/// Exact-match METEOR without stemming or synonyms.
[[nodiscard]] double meteor_lite(std::string_view candidate, std::string_view reference);

/// Every truth region of every record, with ids from region_id().
[[nodiscard]] std::vector<LabeledRegion> label_regions(std::span<const AnnotationRecord> records);

[[nodiscard]] double category_accuracy(std::span<const Diagnosis> predictions, std::span<const LabeledRegion> truth);

[[nodiscard]] ReasoningReport evaluate_reasoning(std::span<const Diagnosis> predictions,
                                                 std::span<const LabeledRegion> truth);

/// JSON-lines predictions: {region_id, category, description, severity}.
[[nodiscard]] std::vector<Diagnosis> parse_diagnoses(std::string_view text);

} // namespace retouch
