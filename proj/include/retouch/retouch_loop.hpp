// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <retouch/providers.hpp>

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace retouch
{

struct LoopConfig
{
    /// Saliency threshold: the loop stops once the map maximum drops below it.
    double tau_s = 0.5;
    std::size_t max_iterations = 3;
    std::size_t dilation_radius = 2;
    std::size_t min_area = 4;
    ToolPolicy tool_policy;
    double epsilon = 1e-7;

    void validate() const;
};

struct LoopAction
{
    std::string region_id;
    std::string tool;
    std::optional<std::string> instruction;

    friend bool operator==(const LoopAction&, const LoopAction&) = default;
};

/// Everything observed and done in one perceive step and its follow-up edits.
struct IterationRecord
{
    std::size_t t = 0;
    /// Absent only when perception itself failed.
    std::optional<double> max_saliency;
    std::vector<RegionProposal> regions;
    std::vector<Diagnosis> diagnoses;
    std::vector<LoopAction> actions;
    ImageBuffer image_after;
    /// Set when a provider failure ended the run during this iteration.
    std::optional<std::string> error;
};

enum class StopReason
{
    Converged,
    MaxIterations,
    ProviderError,
};

[[nodiscard]] std::string_view stop_reason_code(StopReason reason) noexcept;

struct LoopTrace
{
    std::vector<IterationRecord> records;
    StopReason stop_reason = StopReason::Converged;
    ImageBuffer final_image;
    std::optional<std::string> error;
};

/// Perceive, and while the maximum saliency is at least tau_s: propose
/// regions, diagnose them, then edit each region (highest peak first) with the
/// tool chosen by the policy. Mask-guided tools receive the region mask;
/// instruction-driven tools receive "fix <category>: <description>". A
/// provider failure ends the run with the last good image; a region with no
/// admissible tool is skipped.
[[nodiscard]] LoopTrace run_loop(const ImageBuffer& image,
                                 std::string_view prompt,
                                 const Providers& providers,
                                 const LoopConfig& cfg);

struct LoopJob
{
    ImageBuffer image;
    std::string prompt;
};

/// Builds the providers for the job at the given index.
using ProviderFactory = std::function<Providers(std::size_t)>;

/// Runs jobs on up to `parallelism` worker threads and returns traces in job
/// order. A job whose setup throws yields a ProviderError trace with no
/// records instead of aborting the batch.
[[nodiscard]] std::vector<LoopTrace> run_batch(std::span<const LoopJob> jobs,
                                               const ProviderFactory& factory,
                                               const LoopConfig& cfg,
                                               std::size_t parallelism);

/// Same as above with one provider set shared by every job.
[[nodiscard]] std::vector<LoopTrace> run_batch(std::span<const LoopJob> jobs,
                                               const Providers& providers,
                                               const LoopConfig& cfg,
                                               std::size_t parallelism);

struct LoopReport
{
    std::size_t iterations = 0;
    std::size_t actions_total = 0;
    std::optional<double> initial_max_saliency;
    std::optional<double> final_max_saliency;
    bool converged = false;
    StopReason stop_reason = StopReason::Converged;
};

[[nodiscard]] LoopReport trace_to_report(const LoopTrace& trace);
[[nodiscard]] std::string report_to_json(const LoopReport& report);

/// Maps an iteration image to the reference written into the trace (for
/// example a file name). `t` is the iteration index; the final image uses
/// std::nullopt.
using ImageRef = std::function<std::string(const ImageBuffer&, std::optional<std::size_t> t)>;

/// Deterministic JSON rendering of the whole trace; masks are omitted and
/// regions are summarised by bounding box, area and peak.
[[nodiscard]] std::string trace_to_json(const LoopTrace& trace, const ImageRef& image_ref);

} // namespace retouch
