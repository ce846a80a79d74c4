// SPDX-License-Identifier: Apache-2.0
#include <retouch/error.hpp>
#include <retouch/http_provider.hpp>
#include <retouch/mock_provider.hpp>
#include <retouch/providers.hpp>

#include <catch_amalgamated.hpp>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <thread>

using namespace retouch;
using Catch::Matchers::WithinAbs;

namespace
{

class FixedTool final: public InpaintTool
{
  public:
    FixedTool(std::string name, ToolKind kind, double cost): _descriptor { std::move(name), kind, cost } {}

    [[nodiscard]] const ToolDescriptor& descriptor() const noexcept override { return _descriptor; }

    [[nodiscard]] ImageBuffer inpaint(const ImageBuffer& image,
                                      const std::optional<BinaryMask>&,
                                      const std::optional<std::string>&) override
    {
        return image;
    }

  private:
    ToolDescriptor _descriptor;
};

Diagnosis diagnosisOf(DistortionCategory category)
{
    return Diagnosis { "0", category, "something off", 0.5 };
}

/// Local HTTP server on an ephemeral port, stopped on destruction.
class TestServer
{
  public:
    TestServer()
    {
        _port = _server.bind_to_any_port("127.0.0.1");
    }

    ~TestServer()
    {
        _server.stop();
        if (_thread.joinable())
            _thread.join();
    }

    httplib::Server& server() { return _server; }

    void start()
    {
        _thread = std::thread([this] { _server.listen_after_bind(); });
        _server.wait_until_ready();
    }

    [[nodiscard]] HttpOptions options() const
    {
        auto opts = HttpOptions {};
        opts.base_url = "http://127.0.0.1:" + std::to_string(_port);
        opts.timeout_ms = 2000;
        opts.backoff_initial_ms = 1;
        return opts;
    }

  private:
    httplib::Server _server;
    std::thread _thread;
    int _port = 0;
};

std::string saliencyReply(std::size_t width, std::size_t height)
{
    auto const grid = FloatGrid::zeros(width, height);
    return nlohmann::json { { "saliency_b64", encode_base64(write_float_grid(grid)) },
                            { "width", width },
                            { "height", height } }
        .dump();
}

} // namespace

TEST_CASE("tool selection by preference and cost")
{
    using C = DistortionCategory;
    auto const cheapMask = std::make_shared<FixedTool>("mask-1", ToolKind::MaskGuided, 1.0);
    auto const dearMask = std::make_shared<FixedTool>("mask-2", ToolKind::MaskGuided, 2.0);
    auto const edit = std::make_shared<FixedTool>("edit", ToolKind::InstructionDriven, 3.0);
    auto const registry = ToolRegistry { dearMask, cheapMask, edit };

    CHECK(select_tool(registry, diagnosisOf(C::HandDeformity), { ToolPreference::MaskGuided }) == cheapMask);
    CHECK(select_tool(registry, diagnosisOf(C::TextAnomaly), {}) == edit);
    CHECK(select_tool(registry, diagnosisOf(C::FaceDistortion), {}) == cheapMask);
    CHECK_THROWS_AS(select_tool(registry, diagnosisOf(C::HandDeformity), { ToolPreference::Auto, 0.5 }), Error);
    CHECK_THROWS_AS(select_tool(ToolRegistry {}, diagnosisOf(C::HandDeformity), {}), Error);

    auto const twin = std::make_shared<FixedTool>("mask-1b", ToolKind::MaskGuided, 1.0);
    auto const tied = ToolRegistry { cheapMask, twin };
    CHECK(select_tool(tied, diagnosisOf(C::HandDeformity), {}) == cheapMask);
}

TEST_CASE("tool inputs follow the tool kind")
{
    auto const image = ImageBuffer::blank(4, 4, 1);
    auto const maskTool = ToolDescriptor { "m", ToolKind::MaskGuided, 1.0 };
    auto const editTool = ToolDescriptor { "e", ToolKind::InstructionDriven, 1.0 };
    CHECK_THROWS_AS(check_tool_inputs(maskTool, image, std::nullopt, std::nullopt), Error);
    CHECK_THROWS_AS(check_tool_inputs(maskTool, image, BinaryMask(3, 4), std::nullopt), Error);
    CHECK_NOTHROW(check_tool_inputs(maskTool, image, BinaryMask(4, 4), std::nullopt));
    CHECK_THROWS_AS(check_tool_inputs(editTool, image, std::nullopt, std::nullopt), Error);
    CHECK_NOTHROW(check_tool_inputs(editTool, image, std::nullopt, std::string("fix it")));
}

TEST_CASE("mock perception returns the hidden field")
{
    auto const field = gaussian_bump(16, 16, 8.0, 8.0, 0.8, 2.0);
    auto const scene = SyntheticScene { ImageBuffer::blank(16, 16, 3), field, 0.5 };
    auto const map = mock_perceive(scene);
    CHECK(map.grid() == field);
    CHECK_THAT(map.max(), WithinAbs(0.8, 1e-6));
    CHECK(mock_perceive(scene) == map);

    auto const zero = SyntheticScene { ImageBuffer::blank(4, 4, 1), FloatGrid::zeros(4, 4), 0.5 };
    CHECK(mock_perceive(zero).max() == 0.0F);
    CHECK_THROWS_AS((SyntheticScene { ImageBuffer::blank(4, 4, 1), FloatGrid::zeros(3, 4), 0.5 }).validate(), Error);
    CHECK_THROWS_AS((SyntheticScene { ImageBuffer::blank(4, 4, 1), FloatGrid::zeros(4, 4), 1.0 }).validate(), Error);
}

TEST_CASE("mock diagnosis is deterministic")
{
    CHECK(mock_diagnose({}, 1).empty());
    auto const field = gaussian_bump(16, 16, 8.0, 8.0, 0.8, 2.0);
    auto const regions = propose_masks(SaliencyMap(field), ProposalConfig {});
    REQUIRE(regions.size() == 1);
    auto const first = mock_diagnose(regions, 3);
    CHECK(first == mock_diagnose(regions, 3));
    CHECK(first[0].severity == static_cast<double>(regions[0].peak_saliency));
    CHECK(first[0].description.find(" at (") != std::string::npos);
}

TEST_CASE("mock inpainting decays the field inside the mask")
{
    auto field = std::vector<float> { 0.8F, 0.8F };
    auto image = ImageBuffer(2, 1, 1, { 10, 200 });
    auto const scene = SyntheticScene { image, FloatGrid(2, 1, field), 0.5 };
    auto mask = BinaryMask(2, 1);
    mask.set(0, 0);
    auto const once = mock_inpaint(scene, mask);
    CHECK(once.field.at(0, 0) == 0.4F);
    CHECK(once.field.at(1, 0) == 0.8F);
    auto const twice = mock_inpaint(once, mask);
    CHECK(twice.field.at(0, 0) == 0.2F);
    CHECK(twice.image.at(1, 0) == 200);
}

TEST_CASE("mock providers expose both tool kinds")
{
    auto const scene = SyntheticScene { ImageBuffer::blank(8, 8, 1), gaussian_bump(8, 8, 4.0, 4.0, 0.8, 1.5), 0.5 };
    auto const providers = make_mock_providers(std::make_shared<MockBackend>(scene, 1));
    REQUIRE(providers.tools.size() == 2);
    CHECK(providers.tools[0]->descriptor().kind == ToolKind::MaskGuided);
    CHECK(providers.tools[1]->descriptor().kind == ToolKind::InstructionDriven);
    CHECK(parse_bbox_mask("fix hand at (1,2)-(3,4)", 8, 8)->count() == 9);
    CHECK(!parse_bbox_mask("nothing here", 8, 8));
}

TEST_CASE("HTTP perception retries server errors")
{
    auto server = TestServer {};
    auto calls = std::atomic<int> { 0 };
    server.server().Post("/v1/perceive", [&](const httplib::Request&, httplib::Response& res) {
        if (calls.fetch_add(1) < 2)
        {
            res.status = 500;
            return;
        }
        res.set_content(saliencyReply(3, 2), "application/json");
    });
    server.start();

    auto const provider = make_http_perception(server.options());
    auto const map = provider->perceive(ImageBuffer::blank(3, 2, 1), "p");
    CHECK(map.width() == 3);
    CHECK(calls.load() == 3);
}

TEST_CASE("HTTP failures are classified")
{
    auto server = TestServer {};
    server.server().Post("/v1/perceive", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(saliencyReply(2, 2), "application/json");
    });
    server.server().Post("/v1/diagnose", [&](const httplib::Request&, httplib::Response& res) {
        res.status = 404;
    });
    server.start();

    auto const kindOf = [](auto&& call) {
        try
        {
            call();
        }
        catch (const Error& e)
        {
            return e.kind();
        }
        return ErrorKind::InvalidArgument;
    };

    auto const perception = make_http_perception(server.options());
    CHECK(kindOf([&] { (void)perception->perceive(ImageBuffer::blank(3, 2, 1), "p"); })
          == ErrorKind::SchemaViolation);

    auto const reasoning = make_http_reasoning(server.options());
    CHECK(kindOf([&] { (void)reasoning->diagnose(ImageBuffer::blank(3, 2, 1), "p", {}); }) == ErrorKind::HttpStatus);

    auto closed = HttpOptions {};
    closed.base_url = "http://127.0.0.1:1";
    closed.max_retries = 0;
    closed.timeout_ms = 500;
    CHECK(kindOf([&] { (void)make_http_perception(closed)->perceive(ImageBuffer::blank(2, 2, 1), "p"); })
          == ErrorKind::Transport);
}

TEST_CASE("HTTP in-flight requests are bounded")
{
    auto server = TestServer {};
    auto active = std::atomic<int> { 0 };
    auto peak = std::atomic<int> { 0 };
    server.server().new_task_queue = [] { return new httplib::ThreadPool(8); };
    server.server().Post("/v1/perceive", [&](const httplib::Request&, httplib::Response& res) {
        auto const now = active.fetch_add(1) + 1;
        for (auto seen = peak.load(); now > seen && !peak.compare_exchange_weak(seen, now);)
        {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(30));
        active.fetch_sub(1);
        res.set_content(saliencyReply(2, 2), "application/json");
    });
    server.start();

    auto opts = server.options();
    opts.max_in_flight = 2;
    auto const provider = make_http_perception(opts);
    auto successes = std::atomic<int> { 0 };
    {
        auto callers = std::vector<std::jthread> {};
        for (auto i = 0; i < 4; ++i)
            callers.emplace_back([&] {
                if (provider->perceive(ImageBuffer::blank(2, 2, 1), "p").width() == 2)
                    successes.fetch_add(1);
            });
    }
    CHECK(successes.load() == 4);
    CHECK(peak.load() <= 2);
    CHECK(peak.load() >= 1);
}

TEST_CASE("HTTP options are validated")
{
    auto opts = HttpOptions {};
    opts.base_url = "https://example.invalid";
    CHECK_THROWS_AS(opts.validate(), Error);
    opts.base_url = "http://localhost:8080/api";
    CHECK_NOTHROW(opts.validate());
    opts.max_in_flight = 0;
    CHECK_THROWS_AS(opts.validate(), Error);
}
