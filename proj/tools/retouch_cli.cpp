// SPDX-License-Identifier: Apache-2.0
#include <retouch/alignment.hpp>
#include <retouch/dataset.hpp>
#include <retouch/error.hpp>
#include <retouch/http_provider.hpp>
#include <retouch/media_io.hpp>
#include <retouch/mock_provider.hpp>
#include <retouch/retouch_loop.hpp>
#include <retouch/saliency.hpp>
#include <retouch/saliency_metrics.hpp>
#include <retouch/text_metrics.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <map>

namespace
{

using namespace retouch;
namespace fs = std::filesystem;

constexpr int ExitDomainError = 1;
constexpr int ExitUsageError = 2;

std::string readText(const std::string& path)
{
    auto const bytes = read_file(path);
    return std::string(bytes.begin(), bytes.end());
}

void writeText(const std::string& path, std::string_view text)
{
    auto const* begin = reinterpret_cast<const std::uint8_t*>(text.data());
    write_file(path, std::span(begin, text.size()));
}

std::string fixed(double value)
{
    return fmt::format("{:.6f}", value);
}

// run-loop ------------------------------------------------------------------

struct RunLoopArgs
{
    std::string image;
    std::string prompt;
    double tau = 0.5;
    std::size_t max_iter = 3;
    std::size_t dilation = 2;
    std::size_t min_area = 4;
    std::string prefer = "auto";
    double max_cost = std::numeric_limits<double>::infinity();
    bool mock = false;
    std::string mock_field;
    double mock_bump = -1.0;
    double mock_decay = 0.5;
    std::uint64_t seed = 0;
    std::string backends;
    int timeout_ms = 30000;
    std::string output;
    std::string trace;
};

Providers loopProviders(const RunLoopArgs& args, const ImageBuffer& image)
{
    if (args.mock)
    {
        auto field = FloatGrid::zeros(image.width(), image.height());
        if (!args.mock_field.empty())
            field = read_float_grid(read_file(args.mock_field));
        else if (args.mock_bump >= 0.0)
            field = gaussian_bump(image.width(),
                                  image.height(),
                                  image.width() / 2,
                                  image.height() / 2,
                                  args.mock_bump,
                                  static_cast<double>(std::min(image.width(), image.height())) / 8.0);
        auto scene = SyntheticScene { image, std::move(field), args.mock_decay };
        return make_mock_providers(std::make_shared<MockBackend>(std::move(scene), args.seed));
    }
    return providers_from_env(args.timeout_ms);
}

int runLoop(const RunLoopArgs& args)
{
    auto const image = read_pnm(read_file(args.image));
    auto cfg = LoopConfig {};
    cfg.tau_s = args.tau;
    cfg.max_iterations = args.max_iter;
    cfg.dilation_radius = args.dilation;
    cfg.min_area = args.min_area;
    cfg.tool_policy.max_cost = args.max_cost;
    cfg.tool_policy.prefer = args.prefer == "mask"          ? ToolPreference::MaskGuided
                             : args.prefer == "instruction" ? ToolPreference::InstructionDriven
                                                            : ToolPreference::Auto;

    auto const trace = run_loop(image, args.prompt, loopProviders(args, image), cfg);

    if (!args.output.empty())
        write_file(args.output, write_pnm(trace.final_image));
    if (!args.trace.empty())
    {
        auto const tracePath = fs::path(args.trace);
        auto const stem = (tracePath.parent_path() / tracePath.stem()).string();
        auto const ref = [&](const ImageBuffer& img, std::optional<std::size_t> t) {
            if (!t && !args.output.empty())
                return fs::path(args.output).filename().string();
            auto const path = t ? fmt::format("{}.iter{}.pnm", stem, *t) : fmt::format("{}.final.pnm", stem);
            write_file(path, write_pnm(img));
            return fs::path(path).filename().string();
        };
        writeText(args.trace, trace_to_json(trace, ref) + "\n");
    }

    fmt::print("{}\n", report_to_json(trace_to_report(trace)));
    if (trace.error)
        fmt::print(stderr, "provider error: {}\n", *trace.error);
    return trace.stop_reason == StopReason::ProviderError ? ExitDomainError : 0;
}

// evaluate-saliency ---------------------------------------------------------

struct EvalSaliencyArgs
{
    std::string dataset;
    std::string pred_dir;
    double blur_sigma = 0.0;
    double epsilon = 1e-7;
};

std::string metricRow(std::string_view label, const MetricReport& r)
{
    return fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n",
                       label,
                       fixed(r.auc_judd),
                       fixed(r.nss),
                       fixed(r.cc),
                       fixed(r.sim),
                       fixed(r.kld));
}

int evaluateSaliency(const EvalSaliencyArgs& args)
{
    auto const records = parse_dataset(readText(args.dataset));
    auto reports = std::vector<MetricReport> {};
    auto out = std::string("image\tauc_judd\tnss\tcc\tsim\tkld\n");
    for (auto const& record: records)
    {
        auto const path = fs::path(args.pred_dir) / (record.image_id + ".fsal");
        if (!fs::exists(path))
        {
            fmt::print(stderr, "skipping {}: no prediction at {}\n", record.image_id, path.string());
            continue;
        }
        auto const pred = SaliencyMap(read_float_grid(read_file(path.string())));
        if (pred.width() != record.width || pred.height() != record.height)
        {
            fmt::print(stderr,
                       "skipping {}: prediction is {}x{}, image is {}x{}\n",
                       record.image_id,
                       pred.width(),
                       pred.height(),
                       record.width,
                       record.height);
            continue;
        }
        auto const truth = ground_truth_map(record, args.blur_sigma);
        reports.push_back(evaluate_all(pred, truth.map, truth.fixations, args.epsilon));
        out += metricRow(record.image_id, reports.back());
    }
    if (reports.empty())
        throw Error(ErrorKind::EmptyInput, "no images could be evaluated");
    out += metricRow("mean", mean_report(reports));
    fmt::print("{}", out);
    return 0;
}

// evaluate-reasoning --------------------------------------------------------

int evaluateReasoning(const std::string& predPath, const std::string& truthPath)
{
    auto const predictions = parse_diagnoses(readText(predPath));
    auto const records = parse_dataset(readText(truthPath));
    auto const truth = label_regions(records);
    auto const report = evaluate_reasoning(predictions, truth);
    fmt::print("accuracy\trouge_l\tmeteor_lite\n{}\t{}\t{}\n",
               fixed(report.accuracy),
               fixed(report.rouge_l),
               fixed(report.meteor_lite));
    return 0;
}

// dataset-stats -------------------------------------------------------------

int datasetStats(const std::string& path, bool asJson)
{
    auto const stats = compute_stats(parse_dataset(readText(path)));
    if (asJson)
    {
        auto categories = nlohmann::ordered_json::object();
        for (auto const& [category, count]: stats.category_counts)
            categories[std::string(category_code(category))] = {
                { "count", count }, { "share", stats.category_histogram.at(category) }
            };
        auto const j = nlohmann::ordered_json {
            { "image_count", stats.image_count },
            { "region_count", stats.region_count },
            { "regions_per_image", stats.regions_per_image },
            { "description_words", stats.description_words },
            { "mean_description_words", stats.mean_description_words },
            { "categories", categories },
        };
        fmt::print("{}\n", j.dump(2));
        return 0;
    }

    auto lines = std::vector<std::pair<std::string, std::string>> {
        { "image_count", std::to_string(stats.image_count) },
        { "region_count", std::to_string(stats.region_count) },
        { "regions_per_image", fixed(stats.regions_per_image) },
        { "description_words", std::to_string(stats.description_words) },
        { "mean_description_words", fixed(stats.mean_description_words) },
    };
    for (auto const& [category, count]: stats.category_counts)
        lines.emplace_back(fmt::format("category.{}", category_code(category)),
                           fmt::format("{} ({})", count, fixed(stats.category_histogram.at(category))));
    auto width = std::size_t { 0 };
    for (auto const& [key, value]: lines)
        width = std::max(width, key.size());
    for (auto const& [key, value]: lines)
        fmt::print("{:<{}} {}\n", key + ":", width + 1, value);
    return 0;
}

// grpo-check ----------------------------------------------------------------

int grpoCheck(std::uint64_t seed)
{
    auto allPassed = true;
    for (auto const& outcome: run_grpo_checks(seed))
    {
        allPassed = allPassed && outcome.passed;
        fmt::print("{} {} max_error={:.3e} tolerance={:.1e}\n",
                   outcome.passed ? "PASS" : "FAIL",
                   outcome.name,
                   outcome.max_error,
                   outcome.tolerance);
    }
    return allPassed ? 0 : ExitDomainError;
}

// rasterize -----------------------------------------------------------------

struct RasterizeArgs
{
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t width = 0;
    std::size_t height = 0;
    std::string output;
};

int rasterize(const RasterizeArgs& args)
{
    if (args.x >= args.width || args.y >= args.height)
        throw Error(ErrorKind::OutOfBounds,
                    fmt::format("center ({}, {}) outside {}x{}", args.x, args.y, args.width, args.height));
    auto const mask = rasterize_region(args.x, args.y, args.height, args.width);
    if (!args.output.empty())
        write_file(args.output, write_pnm(mask_to_image(mask)));
    fmt::print("radius\t{}\npixels\t{}\n", fixed(region_radius(args.height)), mask.count());
    return 0;
}

// propose-masks -------------------------------------------------------------

struct ProposeArgs
{
    std::string saliency;
    double tau = 0.5;
    std::size_t dilation = 2;
    std::size_t min_area = 4;
    std::string output_dir;
};

int proposeMasks(const ProposeArgs& args)
{
    auto const map = SaliencyMap(read_float_grid(read_file(args.saliency)));
    auto const regions = propose_masks(map, ProposalConfig { args.tau, args.dilation, args.min_area });
    fmt::print("id\tx0\ty0\tx1\ty1\tarea\tpeak\n");
    for (auto i = std::size_t { 0 }; i < regions.size(); ++i)
    {
        auto const& r = regions[i];
        fmt::print("{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                   i,
                   r.bbox.x0,
                   r.bbox.y0,
                   r.bbox.x1,
                   r.bbox.y1,
                   r.area,
                   fixed(r.peak_saliency));
        if (!args.output_dir.empty())
            write_file((fs::path(args.output_dir) / fmt::format("region{}.pnm", i)).string(),
                       write_pnm(mask_to_image(r.mask)));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    auto app = CLI::App { "Perception-reasoning-action retouching toolkit" };
    app.require_subcommand(1);

    auto loop = RunLoopArgs {};
    auto* runLoopCmd = app.add_subcommand("run-loop", "Run the closed retouching loop on one image");
    runLoopCmd->add_option("--image", loop.image, "Input PNM image")->required()->check(CLI::ExistingFile);
    runLoopCmd->add_option("--prompt", loop.prompt, "Generation prompt");
    runLoopCmd->add_option("--tau", loop.tau, "Saliency threshold")->capture_default_str();
    runLoopCmd->add_option("--max-iter", loop.max_iter, "Iteration cap")->capture_default_str();
    runLoopCmd->add_option("--dilation", loop.dilation, "Mask dilation radius")->capture_default_str();
    runLoopCmd->add_option("--min-area", loop.min_area, "Smallest region kept")->capture_default_str();
    runLoopCmd->add_option("--prefer", loop.prefer, "Tool preference")
        ->check(CLI::IsMember({ "auto", "mask", "instruction" }))
        ->capture_default_str();
    runLoopCmd->add_option("--max-cost", loop.max_cost, "Largest admissible tool cost");
    auto* mockFlag = runLoopCmd->add_flag("--mock", loop.mock, "Use the synthetic mock backend");
    auto* fieldOpt = runLoopCmd->add_option("--mock-field", loop.mock_field, "Hidden distortion field (FSAL1)")
                         ->check(CLI::ExistingFile)
                         ->needs(mockFlag);
    runLoopCmd->add_option("--mock-bump", loop.mock_bump, "Height of a centred Gaussian bump field")
        ->check(CLI::Range(0.0, 1.0))
        ->needs(mockFlag)
        ->excludes(fieldOpt);
    runLoopCmd->add_option("--mock-decay", loop.mock_decay, "Field attenuation per edit")
        ->needs(mockFlag)
        ->capture_default_str();
    runLoopCmd->add_option("--seed", loop.seed, "Mock diagnosis seed")->capture_default_str();
    runLoopCmd->add_option("--backends", loop.backends, "Provider source: 'env' reads RETOUCH_BACKEND_<ROLE>_URL")
        ->check(CLI::IsMember({ "env" }))
        ->excludes(mockFlag);
    runLoopCmd->add_option("--timeout-ms", loop.timeout_ms, "HTTP request timeout")->capture_default_str();
    runLoopCmd->add_option("--output", loop.output, "Final image path");
    runLoopCmd->add_option("--trace", loop.trace, "Trace JSON path; iteration images are written beside it");

    auto eval = EvalSaliencyArgs {};
    auto* evalSalCmd = app.add_subcommand("evaluate-saliency", "Score predicted saliency maps against a dataset (TSV)");
    evalSalCmd->add_option("--dataset", eval.dataset, "Dataset JSON lines")->required()->check(CLI::ExistingFile);
    evalSalCmd->add_option("--pred-dir", eval.pred_dir, "Directory of <image_id>.fsal predictions")
        ->required()
        ->check(CLI::ExistingDirectory);
    evalSalCmd->add_option("--blur-sigma", eval.blur_sigma, "Ground-truth blur std in pixels")->capture_default_str();
    evalSalCmd->add_option("--epsilon", eval.epsilon, "KLD regulariser")->capture_default_str();

    auto predPath = std::string {};
    auto truthPath = std::string {};
    auto* evalReasonCmd = app.add_subcommand("evaluate-reasoning", "Score region diagnoses against a dataset (TSV)");
    evalReasonCmd->add_option("predictions", predPath, "Diagnoses JSON lines")->required()->check(CLI::ExistingFile);
    evalReasonCmd->add_option("truth", truthPath, "Dataset JSON lines")->required()->check(CLI::ExistingFile);

    auto statsPath = std::string {};
    auto statsJson = false;
    auto* statsCmd = app.add_subcommand("dataset-stats", "Summarise a dataset");
    statsCmd->add_option("dataset", statsPath, "Dataset JSON lines")->required()->check(CLI::ExistingFile);
    statsCmd->add_flag("--json", statsJson, "Emit JSON instead of text");

    auto grpoSeed = std::uint64_t { 7 };
    auto* grpoCmd = app.add_subcommand("grpo-check", "Run the GRPO self-check suites");
    grpoCmd->add_option("--seed", grpoSeed, "Random seed")->capture_default_str();

    auto raster = RasterizeArgs {};
    auto* rasterCmd = app.add_subcommand("rasterize", "Rasterise one region annotation disc");
    rasterCmd->add_option("--x", raster.x, "Center column")->required();
    rasterCmd->add_option("--y", raster.y, "Center row")->required();
    rasterCmd->add_option("--width", raster.width, "Image width")->required()->check(CLI::PositiveNumber);
    rasterCmd->add_option("--height", raster.height, "Image height")->required()->check(CLI::PositiveNumber);
    rasterCmd->add_option("--output", raster.output, "Mask PNM path");

    auto propose = ProposeArgs {};
    auto* proposeCmd = app.add_subcommand("propose-masks", "Extract region proposals from a saliency map (TSV)");
    proposeCmd->add_option("--saliency", propose.saliency, "Saliency map (FSAL1)")
        ->required()
        ->check(CLI::ExistingFile);
    proposeCmd->add_option("--tau", propose.tau, "Binarisation threshold")->capture_default_str();
    proposeCmd->add_option("--dilation", propose.dilation, "Dilation radius")->capture_default_str();
    proposeCmd->add_option("--min-area", propose.min_area, "Smallest region kept")->capture_default_str();
    proposeCmd->add_option("--output-dir", propose.output_dir, "Write region masks here")
        ->check(CLI::ExistingDirectory);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        auto const code = app.exit(e);
        return code == 0 ? 0 : ExitUsageError;
    }

    try
    {
        if (runLoopCmd->parsed())
        {
            if (!loop.mock && loop.backends.empty())
            {
                fmt::print(stderr, "run-loop needs --mock or --backends env\n");
                return ExitUsageError;
            }
            return runLoop(loop);
        }
        if (evalSalCmd->parsed())
            return evaluateSaliency(eval);
        if (evalReasonCmd->parsed())
            return evaluateReasoning(predPath, truthPath);
        if (statsCmd->parsed())
            return datasetStats(statsPath, statsJson);
        if (grpoCmd->parsed())
            return grpoCheck(grpoSeed);
        if (rasterCmd->parsed())
            return rasterize(raster);
        if (proposeCmd->parsed())
            return proposeMasks(propose);
    }
    catch (const Error& e)
    {
        fmt::print(stderr, "error ({}): {}\n", to_string(e.kind()), e.what());
        return ExitDomainError;
    }
    catch (const std::exception& e)
    {
        fmt::print(stderr, "error: {}\n", e.what());
        return ExitDomainError;
    }
    return ExitUsageError;
}
