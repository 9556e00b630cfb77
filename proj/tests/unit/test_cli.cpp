#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "dvcseq/io.hpp"
#include "support.hpp"

using dvcseq::json;
using dvcseq::testing::data_path;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run(const std::string& args) {
    const std::string err_path = ::testing::TempDir() + "dvcseq_cli_stderr.txt";
    const std::string cmd = std::string(DVCSEQ_CLI) + " " + args + " 2>" + err_path;
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = read_file(err_path);
    return r;
}

std::string vocab() { return " --vocab " + data_path("vocab.txt"); }

}  // namespace

TEST(Cli, EncodeMatchesFixture) {
    const auto r = run("encode" + vocab() + " --annotations " + data_path("two_events.json"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(r.out), json::parse(read_file(data_path("two_events.tokens.json"))));
}

TEST(Cli, DecodeWritesEventSetAndDiagnostics) {
    const auto r = run("decode" + vocab() + " --tokens " + data_path("two_events.tokens.json") + " --duration 120");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto es = json::parse(r.out).get<dvcseq::EventSet>();
    ASSERT_EQ(es.events.size(), 2u);
    EXPECT_EQ(es.events[1].caption, "stir.");
    EXPECT_EQ(json::parse(r.err)["diagnostics"]["skipped_tokens"], 0);
}

TEST(Cli, EvalIdenticalPredictions) {
    const auto r = run("eval --preds " + data_path("eval_preds_identical.json") + " --refs " + data_path("eval_refs.json"));
    ASSERT_EQ(r.code, 0) << r.err;
    const json report = json::parse(r.out);
    EXPECT_EQ(report["corpus"]["f1"], 1.0);
    for (const auto& t : report["corpus"]["per_threshold"]) EXPECT_EQ(t["f1"], 1.0);
}

TEST(Cli, EvalMultipleReferenceFiles) {
    const auto r = run("eval --preds " + data_path("eval_preds_partial.json") + " --refs " + data_path("eval_refs.json") +
                       "," + data_path("eval_refs.json") + " --caption-metric meteor_lite --jobs 2");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(r.out)["num_reference_sets"], 2);
}

TEST(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("bogus").code, 1);
    const auto r = run("encode --annotations");
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(json::parse(r.err).contains("error"));
}

TEST(Cli, DataErrorsExitTwo) {
    auto r = run("encode" + vocab() + " --annotations /nonexistent.json");
    EXPECT_EQ(r.code, 2);
    const json err = json::parse(r.err);
    EXPECT_EQ(err["error"], "invalid_input");
    r = run("subset --corpus " + data_path("corpus200.json") + " --fraction 2");
    EXPECT_EQ(r.code, 2);
    r = run("decode" + vocab() + " --tokens " + data_path("two_events.json") + " --duration 10");
    EXPECT_EQ(r.code, 2);
}

TEST(Cli, SeededOutputsAreByteIdentical) {
    const std::string cmd = "--seed 17 corrupt" + vocab() + " --tokens " + data_path("two_events.tokens.json");
    const auto a = run(cmd);
    const auto b = run(cmd);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    const auto c = run("--seed 18 subset --corpus " + data_path("corpus200.json") + " --fraction 0.05");
    const auto d = run("--seed 18 subset --corpus " + data_path("corpus200.json") + " --fraction 0.05");
    EXPECT_EQ(c.out, d.out);
    EXPECT_EQ(json::parse(c.out).size(), 10u);
}

TEST(Cli, ConfigFileSuppliesDefaultsAndFlagsOverride) {
    const std::string cfg = ::testing::TempDir() + "dvcseq_cli.toml";
    std::ofstream(cfg) << "seed = 5\n";
    const std::string sub = " subset --corpus " + data_path("corpus200.json") + " --fraction 0.1";
    const auto from_config = run("--config " + cfg + sub);
    const auto from_flag = run("--seed 5" + sub);
    const auto overridden = run("--config " + cfg + " --seed 6" + sub);
    const auto flag6 = run("--seed 6" + sub);
    ASSERT_EQ(from_config.code, 0) << from_config.err;
    EXPECT_EQ(from_config.out, from_flag.out);
    EXPECT_EQ(overridden.out, flag6.out);
    EXPECT_NE(from_flag.out, flag6.out);
}

TEST(Cli, OutFileOption) {
    const std::string path = ::testing::TempDir() + "dvcseq_cli_out.json";
    const auto r = run("--out " + path + " encode" + vocab() + " --annotations " + data_path("two_events.json"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    EXPECT_EQ(json::parse(read_file(path)), json::parse(read_file(data_path("two_events.tokens.json"))));
}

TEST(Cli, Selftest) {
    const auto r = run("selftest");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(json::parse(r.out)["failed"].empty());
}
