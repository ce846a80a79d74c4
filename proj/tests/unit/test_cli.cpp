// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace
{

struct RunResult
{
    int exit_code = -1;
    std::string output;
};

RunResult run(const std::string& args)
{
    auto const command = std::string(RETOUCH_CLI_PATH) + " " + args + " 2>&1";
    auto* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    auto result = RunResult {};
    auto buffer = std::array<char, 4096> {};
    while (auto const n = std::fread(buffer.data(), 1, buffer.size(), pipe))
        result.output.append(buffer.data(), n);
    auto const status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::filesystem::path scratchDir()
{
    auto const dir = std::filesystem::temp_directory_path() / "retouch_cli_test";
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("unknown subcommands are usage errors")
{
    CHECK(run("no-such-command").exit_code == 2);
}

TEST_CASE("empty datasets are reported as domain errors")
{
    auto const path = scratchDir() / "empty.jsonl";
    std::ofstream(path).close();
    auto const result = run("dataset-stats " + path.string());
    CHECK(result.exit_code == 1);
    CHECK(result.output.find("empty dataset") != std::string::npos);
}

TEST_CASE("dataset statistics of the synthetic corpus")
{
    auto const result = run(std::string("dataset-stats ") + RETOUCH_TEST_DATA_DIR + "/synthetic50.jsonl");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("image_count") != std::string::npos);
}

TEST_CASE("grpo-check passes every suite")
{
    auto const result = run("grpo-check --seed 3");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("FAIL") == std::string::npos);
    CHECK(result.output.find("PASS gradient_finite_difference") != std::string::npos);
}

TEST_CASE("mock loop run reports convergence")
{
    auto const image = scratchDir() / "blank.pnm";
    {
        auto out = std::ofstream(image, std::ios::binary);
        out << "P6\n32 32\n255\n" << std::string(32 * 32 * 3, '\x40');
    }
    auto const result = run("run-loop --image " + image.string() + " --prompt scene --mock --mock-bump 0.8");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("\"iterations\": 2") != std::string::npos);
    CHECK(result.output.find("\"converged\": true") != std::string::npos);
}

TEST_CASE("rasterize prints the disc size")
{
    auto const result = run("rasterize --x 50 --y 50 --width 100 --height 100");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("81") != std::string::npos);
}
