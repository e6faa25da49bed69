// tests/cli_test.cc

// Copyright 2026  The lrcnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"
#include "lrc/cli.h"
#include "lrc/tensor_io.h"
#include "test_util.h"

namespace lrc {
namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json ReadJson(const std::filesystem::path& p) {
  const auto bytes = ReadFileBytes(p);
  return nlohmann::json::parse(bytes.begin(), bytes.end());
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir("cli");
    ASSERT_EQ(Cli({"gen-data", "--out", D("train.toyd"), "--n", "400", "--classes", "4"}).code,
              0);
    ASSERT_EQ(Cli({"--seed", "9", "gen-data", "--out", D("test.toyd"), "--n", "200",
                   "--classes", "4"})
                  .code,
              0);
    ASSERT_EQ(Cli({"train", "--data", D("train.toyd"), "--out", D("model"), "--epochs", "6"})
                  .code,
              0);
  }
  static void TearDownTestSuite() { delete dir_; }
  static std::string D(const std::string& name) { return (*dir_ / name).string(); }

  static testing::TempDir* dir_;
};
testing::TempDir* CliTest::dir_ = nullptr;

TEST(CliParseTest, UnknownFlagAndMissingSubcommand) {
  EXPECT_EQ(Cli({}).code, kExitValidation);
  EXPECT_EQ(Cli({"gen-data", "--out", "x", "--bogus", "1"}).code, kExitValidation);
  EXPECT_EQ(Cli({"frobnicate"}).code, kExitValidation);
  const CliRun help = Cli({"--help"});
  EXPECT_EQ(help.code, kExitOk);
  EXPECT_NE(help.out.find("compress"), std::string::npos);
}

TEST(CliParseTest, FlagsValidatedBeforeFiles) {
  const CliRun r = Cli({"train", "--data", "/nonexistent/x.toyd", "--out", "/nonexistent/m",
                     "--epochs", "-1"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("--epochs"), std::string::npos) << r.err;
  const CliRun s = Cli({"spectra", "--model", "/nonexistent", "--data", "/nonexistent",
                     "--out", "/nonexistent/s.json", "--images", "0"});
  EXPECT_EQ(s.code, kExitValidation);
  EXPECT_NE(s.err.find("--images"), std::string::npos) << s.err;
  const CliRun c = Cli({"compress", "--model", "/nonexistent", "--data", "/nonexistent", "--out",
                     "/nonexistent/o", "--mode", "cubic", "--ranks", "full"});
  EXPECT_EQ(c.code, kExitValidation);
  EXPECT_NE(c.err.find("cubic"), std::string::npos) << c.err;
}

TEST(CliParseTest, MissingFileIsNamed) {
  const CliRun r = Cli({"train", "--data", "/nonexistent/x.toyd", "--out", "/tmp/unused"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("/nonexistent/x.toyd"), std::string::npos) << r.err;
}

TEST(CliParseTest, BadGenDataArguments) {
  testing::TempDir dir("cli_gen");
  EXPECT_EQ(Cli({"gen-data", "--out", (dir / "a").string(), "--classes", "40"}).code,
            kExitValidation);
  EXPECT_EQ(Cli({"gen-data", "--out", (dir / "a").string(), "--hw", "20"}).code,
            kExitValidation);
}

TEST_F(CliTest, NumericalFailureExitCode) {
  const CliRun r = Cli({"train", "--data", D("train.toyd"), "--out", D("diverged"), "--lr",
                     "1e30", "--epochs", "3"});
  EXPECT_EQ(r.code, kExitNumerical) << r.err;
}

TEST_F(CliTest, IdentityPlanAtUnitTarget) {
  ASSERT_EQ(Cli({"spectra", "--model", D("model"), "--data", D("train.toyd"), "--out",
                 D("spectra.json"), "--images", "100"})
                .code,
            0);
  const CliRun r = Cli({"plan", "--spectra", D("spectra.json"), "--out", D("identity.json"),
                     "--target-speedup", "1.0", "--no-restore-cost"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto plan = ReadJson(D("identity.json"));
  const auto spectra = ReadJson(D("spectra.json"));
  for (const auto& l : spectra.at("layers"))
    EXPECT_EQ(plan.at("ranks").at(std::to_string(l.at("layer_idx").get<int>())), l.at("d"));
  EXPECT_EQ(plan.at("predicted_speedup"), 1.0);
  EXPECT_EQ(plan.at("energy_objective"), 1.0);
}

TEST_F(CliTest, PlanPinsAndInfeasibility) {
  ASSERT_EQ(Cli({"spectra", "--model", D("model"), "--data", D("train.toyd"), "--out",
                 D("spectra2.json"), "--images", "100"})
                .code,
            0);
  CliRun r = Cli({"plan", "--spectra", D("spectra2.json"), "--out", D("p.json"),
               "--target-speedup", "2", "--pin", "5=20"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(ReadJson(D("p.json")).at("ranks").at("5"), 20);
  r = Cli({"plan", "--spectra", D("spectra2.json"), "--out", D("p.json"), "--target-speedup",
           "500"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("infeasible"), std::string::npos) << r.err;
  r = Cli({"plan", "--spectra", D("spectra2.json"), "--out", D("p.json"), "--target-speedup",
           "2", "--pin", "two=3"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("--pin"), std::string::npos) << r.err;
}

TEST_F(CliTest, FullRanksThenEvalIsLossless) {
  CliRun r = Cli({"compress", "--model", D("model"), "--data", D("train.toyd"), "--out",
               D("full"), "--ranks", "full", "--images", "50"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = Cli({"eval", "--original", D("model"), "--compressed", D("full"), "--data",
           D("test.toyd"), "--out", D("full_report.json"), "--images", "50"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = ReadJson(D("full_report.json"));
  EXPECT_EQ(rep.at("accuracy_before"), rep.at("accuracy_after"));
  for (const auto& l : rep.at("layers")) EXPECT_LE(l.at("reconstruction_error"), 1e-5);
}

TEST_F(CliTest, CompressNeedsExactlyOneRankSource) {
  EXPECT_EQ(Cli({"compress", "--model", D("model"), "--data", D("train.toyd"), "--out",
                 D("x")})
                .code,
            kExitValidation);
  EXPECT_EQ(Cli({"compress", "--model", D("model"), "--data", D("train.toyd"), "--out", D("x"),
                 "--ranks", "full", "--target-speedup", "2"})
                .code,
            kExitValidation);
  const CliRun r = Cli({"compress", "--model", D("model"), "--data", D("train.toyd"), "--out",
                     D("x"), "--ranks", "0=99"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("layer 0"), std::string::npos) << r.err;
}

TEST_F(CliTest, PipelineIsByteDeterministic) {
  std::string files[2][3];
  for (int run = 0; run < 2; ++run) {
    const std::string tag = "det" + std::to_string(run);
    ASSERT_EQ(Cli({"--seed", "3", "spectra", "--model", D("model"), "--data", D("train.toyd"),
                   "--out", D(tag + "_s.json"), "--images", "100"})
                  .code,
              0);
    ASSERT_EQ(Cli({"plan", "--spectra", D(tag + "_s.json"), "--out", D(tag + "_p.json"),
                   "--target-speedup", "2"})
                  .code,
              0);
    const CliRun c = Cli({"--seed", "3", "compress", "--model", D("model"), "--data",
                       D("train.toyd"), "--out", D(tag + "_m"), "--plan", D(tag + "_p.json"),
                       "--mode", "asymmetric", "--images", "100", "--report",
                       D(tag + "_r.json")});
    ASSERT_EQ(c.code, 0) << c.err;
    const auto read = [&](const std::string& name) {
      const auto b = ReadFileBytes(D(name));
      return std::string(b.begin(), b.end());
    };
    files[run][0] = read(tag + "_p.json");
    files[run][1] = read(tag + "_r.json");
    std::string model;
    for (const auto& e : std::filesystem::directory_iterator(D(tag + "_m")))
      model += e.path().filename().string() + read(tag + "_m/" + e.path().filename().string());
    files[run][2] = model;
  }
  for (int k = 0; k < 3; ++k) EXPECT_EQ(files[0][k], files[1][k]) << "artifact " << k;
}

TEST_F(CliTest, BenchRuns) {
  const CliRun r = Cli({"bench", "--model", D("model"), "--data", D("test.toyd"), "--reps", "3"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("median"), std::string::npos);
  EXPECT_EQ(Cli({"bench", "--model", D("model"), "--data", D("test.toyd"), "--reps", "1"}).code,
            kExitValidation);
}

}  // namespace
}  // namespace lrc
