// SPDX-License-Identifier: Apache-2.0
#include <retouch/dataset.hpp>
#include <retouch/error.hpp>

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <tuple>

namespace retouch
{

namespace
{

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

template <typename T>
T requireField(const json& object, const char* key, std::size_t line)
{
    if (!object.contains(key))
        throw Error(ErrorKind::MalformedJson, fmt::format("line {}: missing field '{}'", line, key), line);
    try
    {
        return object.at(key).get<T>();
    }
    catch (const json::exception&)
    {
        throw Error(ErrorKind::MalformedJson, fmt::format("line {}: field '{}' has the wrong type", line, key), line);
    }
}

std::size_t requireCount(const json& object, const char* key, std::size_t line)
{
    if (!object.contains(key) || !object.at(key).is_number_integer())
        throw Error(ErrorKind::MalformedJson,
                    fmt::format("line {}: field '{}' must be a non-negative integer", line, key), line);
    auto const value = object.at(key).get<std::int64_t>();
    if (value < 0)
        throw Error(ErrorKind::MalformedJson,
                    fmt::format("line {}: field '{}' must be a non-negative integer", line, key), line);
    return static_cast<std::size_t>(value);
}

AnnotationRecord parseRecord(const json& object, std::size_t line)
{
    if (!object.is_object())
        throw Error(ErrorKind::MalformedJson, fmt::format("line {}: record is not a JSON object", line), line);

    auto record = AnnotationRecord {
        .image_id = requireField<std::string>(object, "image_id", line),
        .image = requireField<std::string>(object, "image", line),
        .prompt = requireField<std::string>(object, "prompt", line),
        .width = requireCount(object, "width", line),
        .height = requireCount(object, "height", line),
        .regions = {},
    };
    if (record.width == 0 || record.height == 0)
        throw Error(ErrorKind::MalformedJson, fmt::format("line {}: width and height must be positive", line), line);

    if (!object.contains("regions") || !object.at("regions").is_array())
        throw Error(ErrorKind::MalformedJson, fmt::format("line {}: 'regions' must be an array", line), line);

    for (auto const& item: object.at("regions"))
    {
        if (!item.is_object())
            throw Error(ErrorKind::MalformedJson, fmt::format("line {}: region is not an object", line), line);
        auto const code = requireField<std::string>(item, "category", line);
        auto const category = parse_category(code);
        if (!category)
            throw Error(ErrorKind::UnknownCategory, fmt::format("line {}: unknown category '{}'", line, code), line);

        auto region = RegionAnnotation {
            .x = requireCount(item, "x", line),
            .y = requireCount(item, "y", line),
            .category = *category,
            .description = requireField<std::string>(item, "description", line),
            .annotator = item.contains("annotator") ? requireField<std::string>(item, "annotator", line) : "",
        };
        if (region.x >= record.width || region.y >= record.height)
            throw Error(ErrorKind::OutOfBounds,
                        fmt::format("line {}: region center ({}, {}) outside {}x{} image",
                                    line,
                                    region.x,
                                    region.y,
                                    record.width,
                                    record.height),
                        line);
        if (region.description.empty())
            throw Error(ErrorKind::MalformedJson, fmt::format("line {}: empty region description", line), line);
        record.regions.push_back(std::move(region));
    }
    return record;
}

class DisjointSets
{
  public:
    explicit DisjointSets(std::size_t n): _parent(n)
    {
        std::iota(_parent.begin(), _parent.end(), std::size_t { 0 });
    }

    std::size_t find(std::size_t i)
    {
        while (_parent[i] != i)
        {
            _parent[i] = _parent[_parent[i]];
            i = _parent[i];
        }
        return i;
    }

    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b)
            _parent[std::max(a, b)] = std::min(a, b);
    }

  private:
    std::vector<std::size_t> _parent;
};

std::size_t lowerMedian(std::vector<std::size_t> values)
{
    std::ranges::sort(values);
    return values[(values.size() - 1) / 2];
}

std::vector<double> gaussianKernel(double sigma)
{
    auto const radius = static_cast<std::size_t>(std::ceil(3.0 * sigma));
    auto kernel = std::vector<double>(2 * radius + 1);
    for (auto i = std::size_t { 0 }; i < kernel.size(); ++i)
    {
        auto const d = static_cast<double>(i) - static_cast<double>(radius);
        kernel[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    }
    return kernel;
}

} // namespace

std::vector<AnnotationRecord> parse_dataset(std::string_view text)
{
    auto records = std::vector<AnnotationRecord> {};
    auto line = std::size_t { 0 };
    auto start = std::size_t { 0 };
    while (start < text.size())
    {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        auto const content = text.substr(start, end - start);
        ++line;
        start = end + 1;

        if (std::ranges::all_of(content, [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }))
            continue;

        auto object = json {};
        try
        {
            object = json::parse(content);
        }
        catch (const json::parse_error& e)
        {
            throw Error(ErrorKind::MalformedJson, fmt::format("line {}: {}", line, e.what()), line);
        }
        records.push_back(parseRecord(object, line));
    }
    return records;
}

std::string serialize_dataset(std::span<const AnnotationRecord> records)
{
    auto out = std::string {};
    for (auto const& record: records)
    {
        auto regions = ordered_json::array();
        for (auto const& r: record.regions)
            regions.push_back(ordered_json {
                { "x", r.x },
                { "y", r.y },
                { "category", category_code(r.category) },
                { "description", r.description },
                { "annotator", r.annotator },
            });
        auto const object = ordered_json {
            { "image_id", record.image_id }, { "image", record.image },   { "prompt", record.prompt },
            { "width", record.width },       { "height", record.height }, { "regions", std::move(regions) },
        };
        out += object.dump();
        out += '\n';
    }
    return out;
}

BinaryMask rasterize_region(std::size_t center_x,
                            std::size_t center_y,
                            std::size_t image_height,
                            std::size_t image_width)
{
    if (center_x >= image_width || center_y >= image_height)
        throw Error(ErrorKind::OutOfBounds, "region center outside the image");

    auto mask = BinaryMask(image_width, image_height);
    auto const r = region_radius(image_height);
    auto const r2 = r * r;
    auto const reach = static_cast<std::size_t>(std::floor(r));
    auto const x0 = center_x >= reach ? center_x - reach : 0;
    auto const y0 = center_y >= reach ? center_y - reach : 0;
    auto const x1 = std::min(image_width - 1, center_x + reach);
    auto const y1 = std::min(image_height - 1, center_y + reach);
    for (auto y = y0; y <= y1; ++y)
        for (auto x = x0; x <= x1; ++x)
        {
            auto const dx = static_cast<double>(x) - static_cast<double>(center_x);
            auto const dy = static_cast<double>(y) - static_cast<double>(center_y);
            if (dx * dx + dy * dy <= r2)
                mask.set(x, y);
        }
    return mask;
}

std::vector<RegionAnnotation> reconcile_majority(std::span<const std::vector<RegionAnnotation>> per_annotator,
                                                 double match_radius)
{
    if (per_annotator.size() < 2)
        throw Error(ErrorKind::InvalidArgument, "majority voting needs at least two annotators");

    struct Mark
    {
        const RegionAnnotation* region;
        std::size_t annotator;
    };
    auto marks = std::vector<Mark> {};
    for (auto a = std::size_t { 0 }; a < per_annotator.size(); ++a)
        for (auto const& region: per_annotator[a])
            marks.push_back(Mark { &region, a });

    auto sets = DisjointSets(marks.size());
    auto const r2 = match_radius * match_radius;
    for (auto i = std::size_t { 0 }; i < marks.size(); ++i)
        for (auto j = i + 1; j < marks.size(); ++j)
        {
            if (marks[i].annotator == marks[j].annotator)
                continue;
            auto const dx = static_cast<double>(marks[i].region->x) - static_cast<double>(marks[j].region->x);
            auto const dy = static_cast<double>(marks[i].region->y) - static_cast<double>(marks[j].region->y);
            if (dx * dx + dy * dy <= r2)
                sets.unite(i, j);
        }

    auto clusters = std::map<std::size_t, std::vector<std::size_t>> {};
    for (auto i = std::size_t { 0 }; i < marks.size(); ++i)
        clusters[sets.find(i)].push_back(i);

    auto result = std::vector<RegionAnnotation> {};
    for (auto const& [root, members]: clusters)
    {
        auto annotators = std::vector<bool>(per_annotator.size(), false);
        auto votes = std::array<std::size_t, CategoryCount> {};
        auto xs = std::vector<std::size_t> {};
        auto ys = std::vector<std::size_t> {};
        auto description = std::string {};
        for (auto const i: members)
        {
            auto const& region = *marks[i].region;
            annotators[marks[i].annotator] = true;
            ++votes[category_index(region.category)];
            xs.push_back(region.x);
            ys.push_back(region.y);
            if (region.description.size() > description.size()
                || (region.description.size() == description.size() && region.description < description))
                description = region.description;
        }
        auto const supporters = static_cast<std::size_t>(std::ranges::count(annotators, true));
        if (2 * supporters <= per_annotator.size())
            continue;

        // max_element returns the first maximum, i.e. the lowest category code.
        auto const modal = static_cast<std::size_t>(std::ranges::max_element(votes) - votes.begin());
        result.push_back(RegionAnnotation {
            .x = lowerMedian(std::move(xs)),
            .y = lowerMedian(std::move(ys)),
            .category = AllCategories[modal],
            .description = std::move(description),
            .annotator = std::string(ConsensusAnnotator),
        });
    }

    std::ranges::sort(result, [](const RegionAnnotation& a, const RegionAnnotation& b) {
        return std::tie(a.y, a.x, a.category, a.description) < std::tie(b.y, b.x, b.category, b.description);
    });
    return result;
}

std::vector<std::vector<RegionAnnotation>> group_by_annotator(const AnnotationRecord& record)
{
    auto order = std::vector<std::string> {};
    auto groups = std::vector<std::vector<RegionAnnotation>> {};
    for (auto const& region: record.regions)
    {
        auto const it = std::ranges::find(order, region.annotator);
        if (it == order.end())
        {
            order.push_back(region.annotator);
            groups.push_back({ region });
        }
        else
            groups[static_cast<std::size_t>(it - order.begin())].push_back(region);
    }
    return groups;
}

std::size_t count_words(std::string_view text)
{
    auto words = std::size_t { 0 };
    auto inWord = false;
    for (auto const c: text)
    {
        auto const space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !inWord)
            ++words;
        inWord = !space;
    }
    return words;
}

DatasetStats compute_stats(std::span<const AnnotationRecord> records)
{
    if (records.empty())
        throw Error(ErrorKind::EmptyInput, "empty dataset");

    auto stats = DatasetStats {};
    stats.image_count = records.size();
    for (auto const& record: records)
        for (auto const& region: record.regions)
        {
            ++stats.region_count;
            stats.description_words += count_words(region.description);
            ++stats.category_counts[region.category];
        }

    stats.regions_per_image = static_cast<double>(stats.region_count) / static_cast<double>(stats.image_count);
    if (stats.region_count > 0)
    {
        auto const total = static_cast<double>(stats.region_count);
        stats.mean_description_words = static_cast<double>(stats.description_words) / total;
        for (auto const& [category, count]: stats.category_counts)
            stats.category_histogram[category] = static_cast<double>(count) / total;
    }
    return stats;
}

SaliencyMap gaussian_blur(const SaliencyMap& map, double sigma)
{
    if (!(sigma > 0.0))
        return map;

    auto const kernel = gaussianKernel(sigma);
    auto const radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    auto const w = static_cast<std::ptrdiff_t>(map.width());
    auto const h = static_cast<std::ptrdiff_t>(map.height());
    auto const source = map.to_doubles();

    auto pass = [&](const std::vector<double>& in, bool horizontal) {
        auto out = std::vector<double>(in.size(), 0.0);
        for (auto y = std::ptrdiff_t { 0 }; y < h; ++y)
            for (auto x = std::ptrdiff_t { 0 }; x < w; ++x)
            {
                auto acc = 0.0;
                auto weight = 0.0;
                for (auto k = -radius; k <= radius; ++k)
                {
                    auto const sx = horizontal ? x + k : x;
                    auto const sy = horizontal ? y : y + k;
                    if (sx < 0 || sy < 0 || sx >= w || sy >= h)
                        continue;
                    auto const wk = kernel[static_cast<std::size_t>(k + radius)];
                    acc += wk * in[static_cast<std::size_t>(sy * w + sx)];
                    weight += wk;
                }
                out[static_cast<std::size_t>(y * w + x)] = acc / weight;
            }
        return out;
    };

    auto const blurred = pass(pass(source, true), false);
    auto values = std::vector<float>(blurred.size());
    std::ranges::transform(blurred, values.begin(), [](double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); });
    return SaliencyMap(map.width(), map.height(), std::move(values));
}

GroundTruth ground_truth_map(const AnnotationRecord& record, double blur_sigma)
{
    auto values = std::vector<float>(record.width * record.height, 0.0F);
    auto fixations = FixationSet {};
    for (auto const& region: record.regions)
    {
        auto const disc = rasterize_region(region.x, region.y, record.height, record.width);
        for (auto i = std::size_t { 0 }; i < values.size(); ++i)
            if (disc.cells[i])
                values[i] = 1.0F;
        fixations.push_back(Fixation { region.x, region.y });
    }
    auto map = SaliencyMap(record.width, record.height, std::move(values));
    return GroundTruth { gaussian_blur(map, blur_sigma), std::move(fixations) };
}

std::string region_id(const AnnotationRecord& record, std::size_t index)
{
    return fmt::format("{}#{}", record.image_id, index);
}

} // namespace retouch
