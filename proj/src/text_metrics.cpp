// SPDX-License-Identifier: Apache-2.0
#include <retouch/error.hpp>
#include <retouch/text_metrics.hpp>

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

namespace retouch
{

namespace
{

std::vector<std::string> requireTokens(std::string_view text, const char* role)
{
    auto tokens = tokenize(text);
    if (tokens.empty())
        throw Error(ErrorKind::EmptyInput, fmt::format("{} text has no tokens", role));
    return tokens;
}

std::unordered_map<std::string_view, const RegionAnnotation*> indexTruth(std::span<const LabeledRegion> truth)
{
    auto index = std::unordered_map<std::string_view, const RegionAnnotation*> {};
    for (auto const& t: truth)
        index.emplace(t.region_id, &t.annotation);
    return index;
}

const RegionAnnotation& lookup(const std::unordered_map<std::string_view, const RegionAnnotation*>& index,
                               const Diagnosis& prediction)
{
    auto const it = index.find(prediction.region_id);
    if (it == index.end())
        throw Error(ErrorKind::UnmatchedRegion, fmt::format("no ground truth for region '{}'", prediction.region_id));
    return *it->second;
}

} // namespace

void Diagnosis::validate() const
{
    if (description.empty())
        throw Error(ErrorKind::InvalidArgument, "diagnosis description is empty");
    if (!(severity >= 0.0 && severity <= 1.0))
        throw Error(ErrorKind::InvalidArgument, fmt::format("diagnosis severity {} outside [0, 1]", severity));
}

std::vector<std::string> tokenize(std::string_view text)
{
    auto tokens = std::vector<std::string> {};
    auto current = std::string {};
    for (auto const ch: text)
    {
        auto const c = static_cast<unsigned char>(ch);
        if (c >= 0x80 || std::isalnum(c))
            current += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
        else if (!current.empty())
            tokens.push_back(std::exchange(current, {}));
    }
    if (!current.empty())
        tokens.push_back(std::move(current));
    return tokens;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b)
{
    auto previous = std::vector<std::size_t>(b.size() + 1, 0);
    auto current = std::vector<std::size_t>(b.size() + 1, 0);
    for (auto i = std::size_t { 1 }; i <= a.size(); ++i)
    {
        for (auto j = std::size_t { 1 }; j <= b.size(); ++j)
            current[j] = a[i - 1] == b[j - 1] ? previous[j - 1] + 1 : std::max(previous[j], current[j - 1]);
        std::swap(previous, current);
    }
    return previous[b.size()];
}

double rouge_l(std::string_view candidate, std::string_view reference)
{
    auto const cand = requireTokens(candidate, "candidate");
    auto const ref = requireTokens(reference, "reference");
    auto const lcs = static_cast<double>(lcs_length(cand, ref));
    if (lcs == 0.0)
        return 0.0;
    auto const precision = lcs / static_cast<double>(cand.size());
    auto const recall = lcs / static_cast<double>(ref.size());
    return 2.0 * precision * recall / (precision + recall);
}

double meteor_lite(std::string_view candidate, std::string_view reference)
{
    auto const cand = requireTokens(candidate, "candidate");
    auto const ref = requireTokens(reference, "reference");

    // Greedy left-to-right unigram alignment; each reference token used once.
    auto used = std::vector<bool>(ref.size(), false);
    auto alignment = std::vector<std::pair<std::size_t, std::size_t>> {};
    for (auto i = std::size_t { 0 }; i < cand.size(); ++i)
        for (auto j = std::size_t { 0 }; j < ref.size(); ++j)
            if (!used[j] && cand[i] == ref[j])
            {
                used[j] = true;
                alignment.emplace_back(i, j);
                break;
            }

    if (alignment.empty())
        return 0.0;

    auto chunks = std::size_t { 1 };
    for (auto k = std::size_t { 1 }; k < alignment.size(); ++k)
    {
        auto const [pc, pr] = alignment[k - 1];
        auto const [c, r] = alignment[k];
        if (c != pc + 1 || r != pr + 1)
            ++chunks;
    }

    auto const matches = static_cast<double>(alignment.size());
    auto const precision = matches / static_cast<double>(cand.size());
    auto const recall = matches / static_cast<double>(ref.size());
    auto const fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
    auto const penalty = 0.5 * std::pow(static_cast<double>(chunks) / matches, 3.0);
    return fmean * (1.0 - penalty);
}

std::vector<LabeledRegion> label_regions(std::span<const AnnotationRecord> records)
{
    auto labeled = std::vector<LabeledRegion> {};
    for (auto const& record: records)
        for (auto k = std::size_t { 0 }; k < record.regions.size(); ++k)
            labeled.push_back(LabeledRegion { region_id(record, k), record.regions[k] });
    return labeled;
}

double category_accuracy(std::span<const Diagnosis> predictions, std::span<const LabeledRegion> truth)
{
    if (predictions.empty())
        throw Error(ErrorKind::EmptyInput, "no predictions to score");
    auto const index = indexTruth(truth);
    auto correct = std::size_t { 0 };
    for (auto const& p: predictions)
        if (lookup(index, p).category == p.category)
            ++correct;
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

ReasoningReport evaluate_reasoning(std::span<const Diagnosis> predictions, std::span<const LabeledRegion> truth)
{
    if (predictions.empty())
        throw Error(ErrorKind::EmptyInput, "no matched prediction/truth pairs");
    auto const index = indexTruth(truth);
    auto report = ReasoningReport {};
    auto correct = std::size_t { 0 };
    for (auto const& p: predictions)
    {
        auto const& t = lookup(index, p);
        if (t.category == p.category)
            ++correct;
        report.rouge_l += rouge_l(p.description, t.description);
        report.meteor_lite += meteor_lite(p.description, t.description);
    }
    auto const n = static_cast<double>(predictions.size());
    report.accuracy = static_cast<double>(correct) / n;
    report.rouge_l /= n;
    report.meteor_lite /= n;
    return report;
}

std::vector<Diagnosis> parse_diagnoses(std::string_view text)
{
    using nlohmann::json;
    auto diagnoses = std::vector<Diagnosis> {};
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

        try
        {
            auto const object = json::parse(content);
            auto const code = object.at("category").get<std::string>();
            auto const category = parse_category(code);
            if (!category)
                throw Error(ErrorKind::UnknownCategory, fmt::format("line {}: unknown category '{}'", line, code), line);
            auto diagnosis = Diagnosis {
                .region_id = object.at("region_id").get<std::string>(),
                .category = *category,
                .description = object.at("description").get<std::string>(),
                .severity = object.value("severity", 0.0),
            };
            diagnosis.validate();
            diagnoses.push_back(std::move(diagnosis));
        }
        catch (const json::exception& e)
        {
            throw Error(ErrorKind::MalformedJson, fmt::format("line {}: {}", line, e.what()), line);
        }
        catch (const Error& e)
        {
            if (e.line())
                throw;
            throw Error(e.kind(), fmt::format("line {}: {}", line, e.what()), line);
        }
    }
    return diagnoses;
}

} // namespace retouch
