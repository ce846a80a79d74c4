// SPDX-License-Identifier: Apache-2.0
#include <retouch/error.hpp>
#include <retouch/retouch_loop.hpp>

#include <fmt/format.h>
#include <json.hpp>

#include <atomic>
#include <thread>

namespace retouch
{

namespace
{

using nlohmann::ordered_json;

std::string editInstruction(const Diagnosis& diagnosis)
{
    return fmt::format("fix {}: {}", category_code(diagnosis.category), diagnosis.description);
}

ordered_json optionalNumber(const std::optional<double>& value)
{
    return value ? ordered_json(*value) : ordered_json(nullptr);
}

ordered_json optionalText(const std::optional<std::string>& value)
{
    return value ? ordered_json(*value) : ordered_json(nullptr);
}

LoopTrace failedSetup(const ImageBuffer& image, const std::string& message)
{
    return LoopTrace { {}, StopReason::ProviderError, image, message };
}

} // namespace

void LoopConfig::validate() const
{
    if (!(tau_s >= 0.0 && tau_s <= 1.0))
        throw Error(ErrorKind::InvalidArgument, fmt::format("tau_s {} outside [0, 1]", tau_s));
    if (max_iterations < 1)
        throw Error(ErrorKind::InvalidArgument, "max_iterations must be at least 1");
    if (!(epsilon > 0.0))
        throw Error(ErrorKind::InvalidArgument, fmt::format("epsilon {} must be positive", epsilon));
}

std::string_view stop_reason_code(StopReason reason) noexcept
{
    switch (reason)
    {
        case StopReason::Converged: return "converged";
        case StopReason::MaxIterations: return "max_iterations";
        case StopReason::ProviderError: return "provider_error";
    }
    return "unknown";
}

LoopTrace run_loop(const ImageBuffer& image,
                   std::string_view prompt,
                   const Providers& providers,
                   const LoopConfig& cfg)
{
    cfg.validate();
    if (!providers.perception || !providers.reasoning)
        throw Error(ErrorKind::InvalidArgument, "perception and reasoning providers are required");

    auto const proposal = ProposalConfig { cfg.tau_s, cfg.dilation_radius, cfg.min_area };
    auto trace = LoopTrace { {}, StopReason::MaxIterations, image, std::nullopt };
    auto current = image;

    auto const fail = [&](IterationRecord record, const std::exception& e) {
        record.error = e.what();
        record.image_after = current;
        trace.records.push_back(std::move(record));
        trace.stop_reason = StopReason::ProviderError;
        trace.error = e.what();
        trace.final_image = current;
        return trace;
    };

    for (auto t = std::size_t { 0 }; t < cfg.max_iterations; ++t)
    {
        auto record = IterationRecord { t, std::nullopt, {}, {}, {}, current, std::nullopt };

        auto map = std::optional<SaliencyMap> {};
        try
        {
            map = providers.perception->perceive(current, prompt);
            if (map->width() != current.width() || map->height() != current.height())
                throw Error(ErrorKind::SchemaViolation, "saliency map does not match the image size");
        }
        catch (const std::exception& e)
        {
            return fail(std::move(record), e);
        }

        auto const peak = static_cast<double>(map->max());
        record.max_saliency = peak;
        if (peak < cfg.tau_s)
        {
            trace.records.push_back(std::move(record));
            trace.stop_reason = StopReason::Converged;
            trace.final_image = current;
            return trace;
        }

        record.regions = propose_masks(*map, proposal);
        try
        {
            record.diagnoses = providers.reasoning->diagnose(current, prompt, record.regions);
            if (record.diagnoses.size() != record.regions.size())
                throw Error(ErrorKind::SchemaViolation,
                            fmt::format("{} diagnoses for {} regions",
                                        record.diagnoses.size(),
                                        record.regions.size()));
        }
        catch (const std::exception& e)
        {
            return fail(std::move(record), e);
        }

        // Regions arrive sorted by descending peak saliency.
        for (auto i = std::size_t { 0 }; i < record.regions.size(); ++i)
        {
            auto const& diagnosis = record.diagnoses[i];
            auto tool = std::shared_ptr<InpaintTool> {};
            try
            {
                tool = select_tool(providers.tools, diagnosis, cfg.tool_policy);
            }
            catch (const Error& e)
            {
                if (e.kind() == ErrorKind::NoToolAvailable)
                    continue;
                throw;
            }

            auto action = LoopAction { std::to_string(i), tool->descriptor().name, std::nullopt };
            auto mask = std::optional<BinaryMask> {};
            if (tool->descriptor().kind == ToolKind::MaskGuided)
                mask = record.regions[i].mask;
            else
                action.instruction = editInstruction(diagnosis);

            try
            {
                auto edited = tool->inpaint(current, mask, action.instruction);
                if (edited.width() != current.width() || edited.height() != current.height())
                    throw Error(ErrorKind::SchemaViolation, "edited image does not match the input size");
                current = std::move(edited);
            }
            catch (const std::exception& e)
            {
                return fail(std::move(record), e);
            }
            record.actions.push_back(std::move(action));
        }

        record.image_after = current;
        trace.records.push_back(std::move(record));
    }

    trace.final_image = current;
    return trace;
}

std::vector<LoopTrace> run_batch(std::span<const LoopJob> jobs,
                                 const ProviderFactory& factory,
                                 const LoopConfig& cfg,
                                 std::size_t parallelism)
{
    if (parallelism < 1)
        throw Error(ErrorKind::InvalidArgument, "parallelism must be at least 1");
    cfg.validate();

    auto results = std::vector<std::optional<LoopTrace>>(jobs.size());
    auto next = std::atomic<std::size_t> { 0 };
    auto const worker = [&] {
        for (auto i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1))
        {
            try
            {
                results[i] = run_loop(jobs[i].image, jobs[i].prompt, factory(i), cfg);
            }
            catch (const std::exception& e)
            {
                results[i] = failedSetup(jobs[i].image, e.what());
            }
        }
    };

    auto const threads = std::min(parallelism, jobs.size());
    {
        auto pool = std::vector<std::jthread> {};
        for (auto k = std::size_t { 1 }; k < threads; ++k)
            pool.emplace_back(worker);
        worker();
    }

    auto traces = std::vector<LoopTrace> {};
    traces.reserve(results.size());
    for (auto& r: results)
        traces.push_back(std::move(*r));
    return traces;
}

std::vector<LoopTrace> run_batch(std::span<const LoopJob> jobs,
                                 const Providers& providers,
                                 const LoopConfig& cfg,
                                 std::size_t parallelism)
{
    return run_batch(jobs, [&](std::size_t) { return providers; }, cfg, parallelism);
}

LoopReport trace_to_report(const LoopTrace& trace)
{
    auto report = LoopReport {};
    report.iterations = trace.records.size();
    for (auto const& record: trace.records)
    {
        report.actions_total += record.actions.size();
        if (record.max_saliency)
        {
            if (!report.initial_max_saliency)
                report.initial_max_saliency = record.max_saliency;
            report.final_max_saliency = record.max_saliency;
        }
    }
    report.converged = trace.stop_reason == StopReason::Converged;
    report.stop_reason = trace.stop_reason;
    return report;
}

std::string report_to_json(const LoopReport& report)
{
    auto const j = ordered_json {
        { "iterations", report.iterations },
        { "actions_total", report.actions_total },
        { "initial_max_saliency", optionalNumber(report.initial_max_saliency) },
        { "final_max_saliency", optionalNumber(report.final_max_saliency) },
        { "converged", report.converged },
        { "stop_reason", stop_reason_code(report.stop_reason) },
    };
    return j.dump(2);
}

std::string trace_to_json(const LoopTrace& trace, const ImageRef& image_ref)
{
    auto records = ordered_json::array();
    for (auto const& record: trace.records)
    {
        auto regions = ordered_json::array();
        for (auto i = std::size_t { 0 }; i < record.regions.size(); ++i)
        {
            auto const& r = record.regions[i];
            regions.push_back({ { "id", std::to_string(i) },
                                { "bbox", { r.bbox.x0, r.bbox.y0, r.bbox.x1, r.bbox.y1 } },
                                { "area", r.area },
                                { "peak_saliency", r.peak_saliency } });
        }
        auto diagnoses = ordered_json::array();
        for (auto const& d: record.diagnoses)
            diagnoses.push_back({ { "region_id", d.region_id },
                                  { "category", category_code(d.category) },
                                  { "description", d.description },
                                  { "severity", d.severity } });
        auto actions = ordered_json::array();
        for (auto const& a: record.actions)
            actions.push_back(
                { { "region_id", a.region_id }, { "tool", a.tool }, { "instruction", optionalText(a.instruction) } });

        records.push_back({ { "t", record.t },
                            { "max_saliency", optionalNumber(record.max_saliency) },
                            { "regions", std::move(regions) },
                            { "diagnoses", std::move(diagnoses) },
                            { "actions", std::move(actions) },
                            { "image_after", image_ref(record.image_after, record.t) },
                            { "error", optionalText(record.error) } });
    }

    auto const j = ordered_json {
        { "stop_reason", stop_reason_code(trace.stop_reason) },
        { "final_image", image_ref(trace.final_image, std::nullopt) },
        { "error", optionalText(trace.error) },
        { "records", std::move(records) },
    };
    return j.dump(2);
}

} // namespace retouch
