// SPDX-License-Identifier: Apache-2.0
#include <retouch/error.hpp>
#include <retouch/http_provider.hpp>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <regex>
#include <semaphore>
#include <thread>

namespace retouch
{

namespace
{

using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Endpoint
{
    std::string origin;
    std::string base_path;
};

Endpoint parseUrl(const std::string& url)
{
    static const auto pattern = std::regex(R"(^(http://[^/?#]+)(/[^?#]*)?$)");
    auto match = std::smatch {};
    if (!std::regex_match(url, match, pattern))
        throw Error(ErrorKind::InvalidArgument, fmt::format("unsupported backend url '{}'", url));
    auto path = match[2].str();
    while (!path.empty() && path.back() == '/')
        path.pop_back();
    return Endpoint { match[1].str(), path };
}

bool retryableStatus(int status)
{
    return status == 429 || (status >= 500 && status <= 599);
}

/// Issues JSON POSTs with retries, backoff and a bound on concurrent requests.
class JsonClient
{
  public:
    explicit JsonClient(HttpOptions options):
        _options(std::move(options)),
        _endpoint(parseUrl(_options.base_url)),
        _slots(static_cast<std::ptrdiff_t>(_options.max_in_flight))
    {
    }

    json post(std::string_view route, const json& body)
    {
        auto const path = _endpoint.base_path + std::string(route);
        auto const payload = body.dump();
        auto delay = std::chrono::milliseconds(_options.backoff_initial_ms);
        for (auto attempt = 0;; ++attempt)
        {
            auto outcome = attemptOnce(path, payload);
            if (outcome.body)
                return std::move(*outcome.body);
            if (!outcome.retryable || attempt >= _options.max_retries)
                throw *outcome.error;
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
    }

  private:
    struct Attempt
    {
        std::optional<json> body;
        std::optional<Error> error;
        bool retryable = false;
    };

    static Attempt failed(ErrorKind kind, std::string message, bool retryable)
    {
        return Attempt { std::nullopt, Error(kind, std::move(message)), retryable };
    }

    Attempt attemptOnce(const std::string& path, const std::string& payload)
    {
        auto response = std::optional<httplib::Result> {};
        auto const started = Clock::now();
        {
            _slots.acquire();
            struct Release
            {
                std::counting_semaphore<>& slots;
                ~Release() { slots.release(); }
            } const release { _slots };

            auto client = httplib::Client(_endpoint.origin);
            auto const timeout = std::chrono::milliseconds(_options.timeout_ms);
            client.set_connection_timeout(timeout);
            client.set_read_timeout(timeout);
            client.set_write_timeout(timeout);
            response.emplace(client.Post(path, payload, "application/json"));
        }

        auto& result = *response;
        if (!result)
        {
            auto const err = result.error();
            auto const elapsed = Clock::now() - started;
            if (err == httplib::Error::ConnectionTimeout
                || (err == httplib::Error::Read && elapsed >= std::chrono::milliseconds(_options.timeout_ms)))
                return failed(ErrorKind::Timeout, fmt::format("{} timed out after {} ms", path, _options.timeout_ms), true);
            return failed(ErrorKind::Transport, fmt::format("{}: {}", path, httplib::to_string(err)), true);
        }
        if (result->status != 200)
            return failed(ErrorKind::HttpStatus,
                          fmt::format("{} returned HTTP {}", path, result->status),
                          retryableStatus(result->status));
        try
        {
            return Attempt { json::parse(result->body), std::nullopt, false };
        }
        catch (const json::exception& e)
        {
            return failed(ErrorKind::SchemaViolation, fmt::format("{} returned invalid JSON: {}", path, e.what()), false);
        }
    }

    HttpOptions _options;
    Endpoint _endpoint;
    std::counting_semaphore<> _slots;
};

/// Runs `decode`, reclassifying malformed-response failures as SchemaViolation.
template <typename F>
auto decodeResponse(std::string_view route, F&& decode)
{
    try
    {
        return decode();
    }
    catch (const json::exception& e)
    {
        throw Error(ErrorKind::SchemaViolation, fmt::format("{}: {}", route, e.what()));
    }
    catch (const Error& e)
    {
        if (e.kind() == ErrorKind::SchemaViolation)
            throw;
        throw Error(ErrorKind::SchemaViolation, fmt::format("{}: {}", route, e.what()));
    }
}

std::string imageB64(const ImageBuffer& image)
{
    return encode_base64(write_pnm(image));
}

std::string maskB64(const BinaryMask& mask)
{
    return encode_base64(write_pnm(mask_to_image(mask)));
}

class HttpPerception final: public PerceptionProvider
{
  public:
    explicit HttpPerception(HttpOptions options): _client(std::move(options)) {}

    SaliencyMap perceive(const ImageBuffer& image, std::string_view prompt) override
    {
        auto const reply = _client.post("/v1/perceive",
                                        { { "image_b64", imageB64(image) },
                                          { "format", "pnm" },
                                          { "prompt", std::string(prompt) } });
        return decodeResponse("/v1/perceive", [&] {
            auto grid = read_float_grid(decode_base64(reply.at("saliency_b64").get<std::string>()));
            auto const width = reply.at("width").get<std::size_t>();
            auto const height = reply.at("height").get<std::size_t>();
            if (grid.width() != width || grid.height() != height || width != image.width()
                || height != image.height())
                throw Error(ErrorKind::SchemaViolation,
                            fmt::format("saliency {}x{} (declared {}x{}) does not match image {}x{}",
                                        grid.width(),
                                        grid.height(),
                                        width,
                                        height,
                                        image.width(),
                                        image.height()));
            return SaliencyMap(std::move(grid));
        });
    }

  private:
    JsonClient _client;
};

class HttpReasoning final: public ReasoningProvider
{
  public:
    explicit HttpReasoning(HttpOptions options): _client(std::move(options)) {}

    std::vector<Diagnosis> diagnose(const ImageBuffer& image,
                                    std::string_view prompt,
                                    std::span<const RegionProposal> regions) override
    {
        auto requested = json::array();
        for (auto i = std::size_t { 0 }; i < regions.size(); ++i)
        {
            auto const& b = regions[i].bbox;
            requested.push_back({ { "id", std::to_string(i) },
                                  { "bbox", { b.x0, b.y0, b.x1, b.y1 } },
                                  { "mask_b64", maskB64(regions[i].mask) } });
        }
        auto const reply = _client.post(
            "/v1/diagnose",
            { { "image_b64", imageB64(image) }, { "prompt", std::string(prompt) }, { "regions", requested } });

        return decodeResponse("/v1/diagnose", [&] {
            auto diagnoses = std::vector<std::optional<Diagnosis>>(regions.size());
            for (auto const& item: reply.at("diagnoses"))
            {
                auto const id = item.at("id").get<std::string>();
                auto index = std::size_t { 0 };
                auto const [end, ec] = std::from_chars(id.data(), id.data() + id.size(), index);
                if (ec != std::errc {} || end != id.data() + id.size() || index >= regions.size() || diagnoses[index])
                    throw Error(ErrorKind::SchemaViolation, fmt::format("unexpected region id '{}'", id));
                auto const code = item.at("category").get<std::string>();
                auto const category = parse_category(code);
                if (!category)
                    throw Error(ErrorKind::SchemaViolation, fmt::format("unknown category '{}'", code));
                auto diagnosis = Diagnosis {
                    .region_id = id,
                    .category = *category,
                    .description = item.at("description").get<std::string>(),
                    .severity = item.at("severity").get<double>(),
                };
                diagnosis.validate();
                diagnoses[index] = std::move(diagnosis);
            }
            auto ordered = std::vector<Diagnosis> {};
            for (auto& d: diagnoses)
            {
                if (!d)
                    throw Error(ErrorKind::SchemaViolation, "response is missing a diagnosis");
                ordered.push_back(std::move(*d));
            }
            return ordered;
        });
    }

  private:
    JsonClient _client;
};

class HttpTool final: public InpaintTool
{
  public:
    HttpTool(HttpOptions options, ToolDescriptor descriptor):
        _client(std::move(options)), _descriptor(std::move(descriptor))
    {
    }

    const ToolDescriptor& descriptor() const noexcept override { return _descriptor; }

    ImageBuffer inpaint(const ImageBuffer& image,
                        const std::optional<BinaryMask>& mask,
                        const std::optional<std::string>& instruction) override
    {
        check_tool_inputs(_descriptor, image, mask, instruction);
        auto request = json { { "image_b64", imageB64(image) } };
        if (mask)
            request["mask_b64"] = maskB64(*mask);
        if (instruction)
            request["instruction"] = *instruction;
        auto const reply = _client.post("/v1/inpaint", request);
        return decodeResponse("/v1/inpaint", [&] {
            auto edited = read_pnm(decode_base64(reply.at("image_b64").get<std::string>()));
            if (edited.width() != image.width() || edited.height() != image.height())
                throw Error(ErrorKind::SchemaViolation,
                            fmt::format("edited image {}x{} does not match input {}x{}",
                                        edited.width(),
                                        edited.height(),
                                        image.width(),
                                        image.height()));
            return edited;
        });
    }

  private:
    JsonClient _client;
    ToolDescriptor _descriptor;
};

std::optional<std::string> environment(const char* name)
{
    auto const* value = std::getenv(name);
    if (value == nullptr || *value == '\0')
        return std::nullopt;
    return std::string(value);
}

} // namespace

void HttpOptions::validate() const
{
    parseUrl(base_url);
    if (timeout_ms <= 0)
        throw Error(ErrorKind::InvalidArgument, fmt::format("timeout {} ms must be positive", timeout_ms));
    if (max_retries < 0 || backoff_initial_ms < 0)
        throw Error(ErrorKind::InvalidArgument, "retry count and backoff must be non-negative");
    if (max_in_flight < 1)
        throw Error(ErrorKind::InvalidArgument, "max_in_flight must be at least 1");
}

std::shared_ptr<PerceptionProvider> make_http_perception(HttpOptions options)
{
    options.validate();
    return std::make_shared<HttpPerception>(std::move(options));
}

std::shared_ptr<ReasoningProvider> make_http_reasoning(HttpOptions options)
{
    options.validate();
    return std::make_shared<HttpReasoning>(std::move(options));
}

std::shared_ptr<InpaintTool> make_http_tool(HttpOptions options, ToolDescriptor descriptor)
{
    options.validate();
    return std::make_shared<HttpTool>(std::move(options), std::move(descriptor));
}

Providers providers_from_env(int timeout_ms)
{
    auto const required = [](const char* name) {
        auto value = environment(name);
        if (!value)
            throw Error(ErrorKind::InvalidArgument, fmt::format("{} is not set", name));
        return *value;
    };
    auto const options = [&](std::string url) {
        auto o = HttpOptions {};
        o.base_url = std::move(url);
        o.timeout_ms = timeout_ms;
        return o;
    };

    auto providers = Providers {};
    providers.perception = make_http_perception(options(required("RETOUCH_BACKEND_PERCEPTION_URL")));
    providers.reasoning = make_http_reasoning(options(required("RETOUCH_BACKEND_REASONING_URL")));
    if (auto url = environment("RETOUCH_BACKEND_INPAINT_URL"))
        providers.tools.push_back(
            make_http_tool(options(*url), ToolDescriptor { "http-inpaint", ToolKind::MaskGuided, 1.0 }));
    if (auto url = environment("RETOUCH_BACKEND_EDIT_URL"))
        providers.tools.push_back(
            make_http_tool(options(*url), ToolDescriptor { "http-edit", ToolKind::InstructionDriven, 2.0 }));
    if (providers.tools.empty())
        throw Error(ErrorKind::InvalidArgument,
                    "set RETOUCH_BACKEND_INPAINT_URL or RETOUCH_BACKEND_EDIT_URL to configure an editing tool");
    return providers;
}

} // namespace retouch
