// SPDX-License-Identifier: Apache-2.0
#include <retouch/error.hpp>
#include <retouch/mock_provider.hpp>

#include <fmt/format.h>

#include <cmath>
#include <regex>

namespace retouch
{

namespace
{

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30U)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27U)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31U);
}

class MockPerception final: public PerceptionProvider
{
  public:
    explicit MockPerception(std::shared_ptr<MockBackend> backend): _backend(std::move(backend)) {}

    SaliencyMap perceive(const ImageBuffer& image, std::string_view /*prompt*/) override
    {
        return _backend->perceive(image);
    }

  private:
    std::shared_ptr<MockBackend> _backend;
};

class MockReasoning final: public ReasoningProvider
{
  public:
    explicit MockReasoning(std::shared_ptr<MockBackend> backend): _backend(std::move(backend)) {}

    std::vector<Diagnosis> diagnose(const ImageBuffer& /*image*/,
                                    std::string_view /*prompt*/,
                                    std::span<const RegionProposal> regions) override
    {
        return _backend->diagnose(regions);
    }

  private:
    std::shared_ptr<MockBackend> _backend;
};

class MockTool final: public InpaintTool
{
  public:
    MockTool(std::shared_ptr<MockBackend> backend, ToolDescriptor descriptor):
        _backend(std::move(backend)), _descriptor(std::move(descriptor))
    {
    }

    const ToolDescriptor& descriptor() const noexcept override { return _descriptor; }

    ImageBuffer inpaint(const ImageBuffer& image,
                        const std::optional<BinaryMask>& mask,
                        const std::optional<std::string>& instruction) override
    {
        check_tool_inputs(_descriptor, image, mask, instruction);
        if (_descriptor.kind == ToolKind::MaskGuided)
            return _backend->inpaint(image, *mask);

        auto region = parse_bbox_mask(*instruction, image.width(), image.height());
        if (!region)
        {
            region = BinaryMask(image.width(), image.height());
            std::ranges::fill(region->cells, std::uint8_t { 1 });
        }
        return _backend->inpaint(image, *region);
    }

  private:
    std::shared_ptr<MockBackend> _backend;
    ToolDescriptor _descriptor;
};

} // namespace

void SyntheticScene::validate() const
{
    if (field.width() != image.width() || field.height() != image.height())
        throw Error(ErrorKind::DimensionMismatch,
                    fmt::format("field {}x{} does not match image {}x{}",
                                field.width(),
                                field.height(),
                                image.width(),
                                image.height()));
    for (auto const v: field.data())
        if (v < 0.0F || v > 1.0F)
            throw Error(ErrorKind::InvalidArgument, fmt::format("field value {} outside [0, 1]", v));
    if (!(decay > 0.0 && decay < 1.0))
        throw Error(ErrorKind::InvalidArgument, fmt::format("decay {} outside (0, 1)", decay));
}

FloatGrid gaussian_bump(std::size_t width,
                        std::size_t height,
                        std::size_t cx,
                        std::size_t cy,
                        double peak,
                        double sigma)
{
    if (cx >= width || cy >= height)
        throw Error(ErrorKind::OutOfBounds, fmt::format("bump centre ({}, {}) outside {}x{}", cx, cy, width, height));
    if (!(peak >= 0.0 && peak <= 1.0) || !(sigma > 0.0))
        throw Error(ErrorKind::InvalidArgument, fmt::format("bump peak {} or sigma {} invalid", peak, sigma));
    auto values = std::vector<float>(width * height);
    for (auto y = std::size_t { 0 }; y < height; ++y)
        for (auto x = std::size_t { 0 }; x < width; ++x)
        {
            auto const dx = static_cast<double>(x) - static_cast<double>(cx);
            auto const dy = static_cast<double>(y) - static_cast<double>(cy);
            values[y * width + x] = static_cast<float>(peak * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)));
        }
    return FloatGrid(width, height, std::move(values));
}

SaliencyMap mock_perceive(const SyntheticScene& scene)
{
    return SaliencyMap(scene.field);
}

std::vector<Diagnosis> mock_diagnose(std::span<const RegionProposal> regions, std::uint64_t seed)
{
    auto diagnoses = std::vector<Diagnosis> {};
    diagnoses.reserve(regions.size());
    for (auto i = std::size_t { 0 }; i < regions.size(); ++i)
    {
        auto const& b = regions[i].bbox;
        auto h = splitmix64(seed);
        for (auto const v: { b.x0, b.y0, b.x1, b.y1 })
            h = splitmix64(h ^ static_cast<std::uint64_t>(v));
        auto const category = AllCategories[h % CategoryCount];
        diagnoses.push_back(Diagnosis {
            .region_id = std::to_string(i),
            .category = category,
            .description = fmt::format("{} at ({},{})-({},{})", category_code(category), b.x0, b.y0, b.x1, b.y1),
            .severity = static_cast<double>(regions[i].peak_saliency),
        });
    }
    return diagnoses;
}

SyntheticScene mock_inpaint(const SyntheticScene& scene, const BinaryMask& mask)
{
    auto const width = scene.image.width();
    auto const height = scene.image.height();
    if (mask.width != width || mask.height != height)
        throw Error(ErrorKind::DimensionMismatch,
                    fmt::format("mask {}x{} does not match scene {}x{}", mask.width, mask.height, width, height));

    auto const channels = scene.image.channels();
    auto sums = std::vector<std::uint64_t>(channels, 0);
    auto count = std::uint64_t { 0 };
    auto field = std::vector<float>(scene.field.data().begin(), scene.field.data().end());
    for (auto y = std::size_t { 0 }; y < height; ++y)
        for (auto x = std::size_t { 0 }; x < width; ++x)
        {
            if (!mask.test(x, y))
                continue;
            ++count;
            for (auto c = std::size_t { 0 }; c < channels; ++c)
                sums[c] += scene.image.at(x, y, c);
            auto& v = field[y * width + x];
            v = static_cast<float>(static_cast<double>(v) * scene.decay);
        }

    auto updated = scene;
    updated.field = FloatGrid(width, height, std::move(field));
    if (count == 0)
        return updated;
    for (auto y = std::size_t { 0 }; y < height; ++y)
        for (auto x = std::size_t { 0 }; x < width; ++x)
            if (mask.test(x, y))
                for (auto c = std::size_t { 0 }; c < channels; ++c)
                    updated.image.at(x, y, c) = static_cast<std::uint8_t>((sums[c] + count / 2) / count);
    return updated;
}

MockBackend::MockBackend(SyntheticScene scene, std::uint64_t seed): _scene(std::move(scene)), _seed(seed)
{
    _scene.validate();
}

SaliencyMap MockBackend::perceive(const ImageBuffer& image) const
{
    auto const lock = std::lock_guard(_mutex);
    if (image.width() != _scene.image.width() || image.height() != _scene.image.height())
        throw Error(ErrorKind::DimensionMismatch, "image does not match the mock scene");
    return mock_perceive(_scene);
}

std::vector<Diagnosis> MockBackend::diagnose(std::span<const RegionProposal> regions) const
{
    return mock_diagnose(regions, _seed);
}

ImageBuffer MockBackend::inpaint(const ImageBuffer& image, const BinaryMask& mask)
{
    auto const lock = std::lock_guard(_mutex);
    if (image.width() != _scene.image.width() || image.height() != _scene.image.height()
        || image.channels() != _scene.image.channels())
        throw Error(ErrorKind::DimensionMismatch, "image does not match the mock scene");
    _scene.image = image;
    _scene = mock_inpaint(_scene, mask);
    return _scene.image;
}

SyntheticScene MockBackend::scene() const
{
    auto const lock = std::lock_guard(_mutex);
    return _scene;
}

Providers make_mock_providers(std::shared_ptr<MockBackend> backend)
{
    auto providers = Providers {};
    providers.perception = std::make_shared<MockPerception>(backend);
    providers.reasoning = std::make_shared<MockReasoning>(backend);
    providers.tools.push_back(
        std::make_shared<MockTool>(backend, ToolDescriptor { "mock-mask", ToolKind::MaskGuided, 1.0 }));
    providers.tools.push_back(
        std::make_shared<MockTool>(backend, ToolDescriptor { "mock-instruct", ToolKind::InstructionDriven, 2.0 }));
    return providers;
}

std::optional<BinaryMask> parse_bbox_mask(std::string_view text, std::size_t width, std::size_t height)
{
    static const auto pattern = std::regex(R"(\((\d+),(\d+)\)-\((\d+),(\d+)\))");
    auto match = std::match_results<std::string_view::const_iterator> {};
    if (!std::regex_search(text.begin(), text.end(), match, pattern))
        return std::nullopt;

    auto coords = std::array<std::size_t, 4> {};
    for (auto i = std::size_t { 0 }; i < coords.size(); ++i)
    {
        auto const digits = match[static_cast<int>(i) + 1].str();
        if (digits.size() > 9)
            return std::nullopt;
        coords[i] = std::stoul(digits);
    }
    auto const [x0, y0, x1, y1] = coords;
    if (x0 > x1 || y0 > y1 || x1 >= width || y1 >= height)
        return std::nullopt;

    auto mask = BinaryMask(width, height);
    for (auto y = y0; y <= y1; ++y)
        for (auto x = x0; x <= x1; ++x)
            mask.set(x, y);
    return mask;
}

} // namespace retouch
