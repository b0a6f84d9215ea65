// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "saicl/tasks.hpp"

namespace saicl {
namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::string tmp(const std::string& name) { return ::testing::TempDir() + name; }

const std::vector<std::string> kTinyModel{"--vocab", "16", "--d-model", "8", "--heads", "2", "--d-ff", "8"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

TEST(Cli, VerifyQuickPasses) {
  const CliRun r = run({"verify", "--quick"});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_NE(r.out.find("all checks passed"), std::string::npos);
}

TEST(Cli, HelpExitsZero) {
  const CliRun r = run({"bench", "--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("--reps"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"bench", "--no-such-flag"}).code, kExitUsage);
  EXPECT_EQ(run({"eval", "--variant", "sparse"}).code, kExitUsage);
  EXPECT_EQ(run({"eval", "--scheme", "single", "--groups", "2"}).code, kExitUsage);
  EXPECT_EQ(run({"bench", "--reps", "2"}).code, kExitUsage);
  const CliRun missing = run({"train", "--config", "/nonexistent.cfg"});
  EXPECT_EQ(missing.code, kExitUsage);
  EXPECT_NE(missing.err.find("config"), std::string::npos);
}

std::string accuracy_lines(const std::string& out) { return out.substr(out.find('\n') + 1); }

TEST(Cli, EnsembleOfOneGroupMatchesSingle) {
  for (const char* format : {"direct", "channel"}) {
    const auto base = concat({"eval", "--seed", "3", "--test-k", "2,4", "--episodes", "20", "--format", format,
                              "--vocab", "16", "--d-model", "8", "--heads", "2", "--d-ff", "8"},
                             {});
    const CliRun e = run(concat(base, {"--scheme", "ensemble", "--groups", "1"}));
    const CliRun s = run(concat(base, {"--scheme", "single"}));
    ASSERT_EQ(e.code, kExitOk) << e.err;
    ASSERT_EQ(s.code, kExitOk) << s.err;
    EXPECT_EQ(accuracy_lines(e.out), accuracy_lines(s.out));
    EXPECT_EQ(lines(accuracy_lines(s.out)), 2u);
  }
}

TEST(Cli, AllSchemesRun) {
  for (const char* scheme : {"fid", "group-fid", "ensemble"}) {
    const CliRun r = run(concat({"eval", "--scheme", scheme, "--groups", "2", "--test-k", "4", "--episodes", "3"}, kTinyModel));
    EXPECT_EQ(r.code, kExitOk) << scheme << r.err;
    EXPECT_NE(r.out.find("test_k=4 accuracy="), std::string::npos);
  }
}

TEST(Cli, GenDataThenEvalOnIt) {
  const std::string path = tmp("cli_data.jsonl");
  const CliRun g = run({"gen-data", "--family", "classify", "--episodes", "4", "--k", "3", "--vocab", "16", "--out", path});
  ASSERT_EQ(g.code, kExitOk) << g.err;
  EXPECT_EQ(read_dataset(path).size(), 16u);
  const CliRun e = run(concat({"eval", "--data", path}, kTinyModel));
  ASSERT_EQ(e.code, kExitOk) << e.err;
  EXPECT_NE(e.out.find("episodes=4 accuracy="), std::string::npos);
}

TEST(Cli, SeedEnvAndConfigPrecedence) {
  const CliRun flag = run({"gen-data", "--episodes", "1", "--k", "2", "--seed", "5"});
  ::setenv("SAICL_SEED", "5", 1);
  const CliRun env = run({"gen-data", "--episodes", "1", "--k", "2"});
  const CliRun both = run({"gen-data", "--episodes", "1", "--k", "2", "--seed", "6"});
  ::unsetenv("SAICL_SEED");
  const CliRun six = run({"gen-data", "--episodes", "1", "--k", "2", "--seed", "6"});
  EXPECT_EQ(flag.out, env.out);
  EXPECT_EQ(both.out, six.out);
  EXPECT_NE(flag.out, six.out);

  const std::string cfg = tmp("cli.cfg");
  std::ofstream(cfg) << "# sizes\nepisodes = 3\nk=1\nlr=0.5\n";
  EXPECT_EQ(lines(run({"gen-data", "--config", cfg}).out), 6u);
  EXPECT_EQ(lines(run({"gen-data", "--config", cfg, "--episodes", "2"}).out), 4u);
  std::ofstream(cfg) << "seed=5\n";
  EXPECT_EQ(run({"gen-data", "--episodes", "1", "--k", "2", "--config", cfg}).out, flag.out);
}

TEST(Cli, TrainWritesCheckpointAndLog) {
  const std::string ckpt = tmp("cli_model.ckpt"), log = tmp("cli_train.csv");
  const CliRun t = run(concat({"train", "--steps", "4", "--batch", "2", "--train-k", "2", "--test-k", "2",
                            "--eval-episodes", "3", "--checkpoint", ckpt, "--log", log},
                           kTinyModel));
  ASSERT_EQ(t.code, kExitOk) << t.err;
  EXPECT_NE(t.out.find("test_k=2 accuracy="), std::string::npos);
  std::ifstream in(log);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "step,loss,lr");
  const CliRun e = run({"eval", "--checkpoint", ckpt, "--test-k", "2", "--episodes", "3"});
  EXPECT_EQ(e.code, kExitOk) << e.err;
  EXPECT_EQ(run({"eval", "--checkpoint", tmp("missing.ckpt")}).code, kExitUsage);
}

TEST(Cli, BenchWritesCsv) {
  const std::string path = tmp("cli_bench.csv");
  const CliRun r = run({"bench", "--k", "1,2", "--L", "2", "--reps", "3", "--warmup", "0", "--out", path});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  EXPECT_EQ(lines(s.str()), 5u);
  EXPECT_EQ(s.str().rfind("variant,k,L,mean_ms,median_ms,std_ms,score_storage\n", 0), 0u);
}

}  // namespace
}  // namespace saicl
