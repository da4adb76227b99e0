#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "support/fixtures.hpp"
#include "support/tempdir.hpp"

using halluscan::testing::data_dir;
using halluscan::testing::TempDir;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

struct Result {
    int code = -1;
    std::string out;
};

Result run(const TempDir& tmp, const std::string& args, const std::string& prefix = "") {
    const auto out = tmp.path() / "stdout.txt";
    const auto cmd = prefix + quote(HALLUSCAN_CLI) + " " + args + " > " + quote(out) + " 2> " + quote(tmp.path() / "stderr.txt");
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out)};
}

std::string golden_prompt() {
    auto text = slurp(data_dir() / "golden" / "prompt.txt");
    while (!text.empty() && text.back() == '\n') text.pop_back();
    return text;
}

std::string golden_args(const TempDir& tmp) {
    return "detect " + quote(data_dir() / "golden" / "frames") + " -p '" + golden_prompt() + "' --config " +
           quote(data_dir() / "golden" / "config.json") + " --video-id golden --output-dir " + quote(tmp.path() / "out");
}

}  // namespace

TEST(Cli, DetectReplayWritesGoldenReport) {
    TempDir tmp;
    const auto r = run(tmp, golden_args(tmp));
    ASSERT_EQ(r.code, 0) << slurp(tmp.path() / "stderr.txt");
    EXPECT_NE(r.out.find("score 66 calls 18"), std::string::npos) << r.out;
    EXPECT_EQ(slurp(tmp.path() / "out" / "golden.report.json"),
              slurp(data_dir() / "golden" / "expected" / "golden.report.json"));
    EXPECT_EQ(slurp(tmp.path() / "out" / "golden.report.md"),
              slurp(data_dir() / "golden" / "expected" / "golden.report.md"));
}

TEST(Cli, FormatSelection) {
    TempDir tmp;
    ASSERT_EQ(run(tmp, golden_args(tmp) + " --format json").code, 0);
    EXPECT_TRUE(fs::exists(tmp.path() / "out" / "golden.report.json"));
    EXPECT_FALSE(fs::exists(tmp.path() / "out" / "golden.report.md"));
}

TEST(Cli, UsageErrors) {
    TempDir tmp;
    EXPECT_EQ(run(tmp, "").code, 2);
    EXPECT_EQ(run(tmp, "detect " + quote(data_dir() / "golden" / "frames")).code, 2);
    EXPECT_EQ(run(tmp, golden_args(tmp) + " --m 0").code, 2);
    EXPECT_EQ(run(tmp, golden_args(tmp) + " --ablation partial").code, 2);
    EXPECT_EQ(run(tmp, "detect " + quote(data_dir() / "golden" / "frames") + " -p x --backend replay").code, 2);
}

TEST(Cli, MissingSourceIsInputError) {
    TempDir tmp;
    EXPECT_EQ(run(tmp, "detect /definitely/not/here -p x --config " + quote(data_dir() / "golden" / "config.json")).code, 3);
    EXPECT_EQ(run(tmp, "bench /definitely/not/here --config " + quote(data_dir() / "minibench" / "config.json")).code, 3);
}

TEST(Cli, MissingFixtureIsGatewayErrorWithoutPartialReport) {
    TempDir tmp;
    fs::copy(data_dir() / "golden", tmp.path() / "g", fs::copy_options::recursive);
    fs::remove(fs::directory_iterator(tmp.path() / "g" / "fixtures")->path());
    const auto r = run(tmp, "detect " + quote(tmp.path() / "g" / "frames") + " -p '" + golden_prompt() + "' --config " +
                                quote(tmp.path() / "g" / "config.json") + " --output-dir " + quote(tmp.path() / "out"));
    EXPECT_EQ(r.code, 4);
    EXPECT_FALSE(fs::exists(tmp.path() / "out"));
}

TEST(Cli, LiveWithoutKeyIsGatewayError) {
    TempDir tmp;
    const auto r = run(tmp, "detect " + quote(data_dir() / "golden" / "frames") + " -p x --backend live --stride 1",
                       "env -u HALLUSCAN_API_KEY ");
    EXPECT_EQ(r.code, 4);
    EXPECT_NE(slurp(tmp.path() / "stderr.txt").find("HALLUSCAN_API_KEY"), std::string::npos);
}

TEST(Cli, BenchWritesLabelledTable) {
    TempDir tmp;
    const auto r = run(tmp, "bench " + quote(data_dir() / "minibench") + " --config " +
                                quote(data_dir() / "minibench" / "config.json") + " --ablation no_static_kg --output-dir " +
                                quote(tmp.path() / "b"));
    ASSERT_EQ(r.code, 0) << slurp(tmp.path() / "stderr.txt");
    EXPECT_NE(r.out.find("no_static_kg"), std::string::npos);
    EXPECT_EQ(slurp(tmp.path() / "b" / "metrics.no_static_kg.json"),
              slurp(data_dir() / "minibench" / "expected" / "metrics.no_static_kg.json"));
    EXPECT_TRUE(fs::exists(tmp.path() / "b" / "predictions.no_static_kg.jsonl"));
    EXPECT_TRUE(fs::is_directory(tmp.path() / "b" / "reports.no_static_kg"));
}

TEST(Cli, CostEstimates) {
    TempDir tmp;
    auto r = run(tmp, "cost --m 3.5");
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("calls 16"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("cost_usd 1.28"), std::string::npos) << r.out;

    r = run(tmp, "cost --m 1");
    EXPECT_NE(r.out.find("cost_usd 0.48"), std::string::npos) << r.out;

    r = run(tmp, "cost --m 4 --videos 10");
    EXPECT_NE(r.out.find("calls 180"), std::string::npos) << r.out;
}
