// Copyright 2026 The xmrs Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "test_util.hpp"

namespace xmrs {
namespace {

using testing::TempDir;

int run_cli(const std::string& args, const std::filesystem::path& log) {
  std::string cmd = std::string("XMRS_THREADS=0 ") + XMRS_CLI_PATH + " " + args +
                    " >" + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

const char* kDims = "text=2x6,visual=2x5,acoustic=2x4";
const char* kTinyModel =
    "--d-model 8 --d-shared 6 --prompt-len 3 --ffn-mult 2 --lr 0.001";

struct CliFixture : public ::testing::Test {
  TempDir dir{"cli"};
  std::filesystem::path data() const { return dir.path() / "data"; }
  std::filesystem::path log() const { return dir.path() / "log.txt"; }

  void make_data() {
    std::ostringstream gen;
    gen << "gen-synthetic --n 20 --dims " << kDims
        << " --signal 2.0 --seed 1 --out " << data();
    ASSERT_EQ(run_cli(gen.str(), log()), 0);
    std::ostringstream genv;
    genv << "gen-synthetic --n 8 --dims " << kDims
         << " --signal 2.0 --seed 2 --split valid --out " << data();
    ASSERT_EQ(run_cli(genv.str(), log()), 0);
    std::ostringstream gent;
    gent << "gen-synthetic --n 8 --dims " << kDims
         << " --signal 2.0 --seed 3 --split test --out " << data();
    ASSERT_EQ(run_cli(gent.str(), log()), 0);
  }
};

TEST_F(CliFixture, UnknownCommandAndFlagExitCode2) {
  EXPECT_EQ(run_cli("definitely-not-a-command", log()), 2);
  EXPECT_EQ(run_cli("train --no-such-flag", log()), 2);
  EXPECT_EQ(run_cli("", log()), 2);  // a subcommand is required
}

TEST_F(CliFixture, HelpExitsZeroAndDocumentsSchemas) {
  ASSERT_EQ(run_cli("--help", log()), 0);
  ASSERT_EQ(run_cli("sweep-lambda --help", log()), 0);
  std::string help = testing::read_file(log());
  EXPECT_NE(help.find("swept_value,acc2,f1,mae,corr,acc7,initial_abs_gap"),
            std::string::npos);
}

TEST_F(CliFixture, TrainEvalPipeline) {
  make_data();
  auto out = dir.path() / "run";
  std::ostringstream tr;
  tr << "train --data " << data() << " --out " << out << " " << kTinyModel
     << " --epochs 2 --seed 7";
  ASSERT_EQ(run_cli(tr.str(), log()), 0);
  EXPECT_TRUE(std::filesystem::exists(out / "train_log.csv"));
  EXPECT_TRUE(std::filesystem::exists(out / "checkpoint.json"));

  std::ostringstream ev;
  ev << "eval --data " << data() << " --checkpoint " << out / "checkpoint.json"
     << " --split test --append-csv " << dir.path() / "results.csv";
  ASSERT_EQ(run_cli(ev.str(), log()), 0);
  nlohmann::json report = nlohmann::json::parse(testing::read_file(log()));
  EXPECT_TRUE(report.contains("acc2"));
  EXPECT_TRUE(report.contains("mae"));
  auto res = lines_of(dir.path() / "results.csv");
  ASSERT_EQ(res.size(), 2u);
  EXPECT_EQ(res[0], "split,acc2,f1,mae,corr,acc7,n_eval");
}

TEST_F(CliFixture, RerunProducesIdenticalArtifacts) {
  make_data();
  auto out1 = dir.path() / "r1";
  auto out2 = dir.path() / "r2";
  for (const auto& out : {out1, out2}) {
    std::ostringstream tr;
    tr << "train --data " << data() << " --out " << out << " " << kTinyModel
       << " --epochs 2 --seed 9";
    ASSERT_EQ(run_cli(tr.str(), log()), 0);
  }
  EXPECT_EQ(testing::read_file(out1 / "train_log.csv"),
            testing::read_file(out2 / "train_log.csv"));
  EXPECT_EQ(testing::read_file(out1 / "checkpoint.json"),
            testing::read_file(out2 / "checkpoint.json"));
}

TEST_F(CliFixture, CommandsDoNotMutateInputData) {
  make_data();
  std::string before = testing::read_file(data() / "train.jsonl") +
                       testing::read_file(data() / "manifest.json");
  auto out = dir.path() / "run";
  std::ostringstream tr;
  tr << "train --data " << data() << " --out " << out << " " << kTinyModel
     << " --epochs 1 --seed 7";
  ASSERT_EQ(run_cli(tr.str(), log()), 0);
  std::string after = testing::read_file(data() / "train.jsonl") +
                      testing::read_file(data() / "manifest.json");
  EXPECT_EQ(before, after);
}

TEST_F(CliFixture, SweepPromptLenRowCount) {
  make_data();
  auto csv = dir.path() / "sweep.csv";
  std::ostringstream sw;
  sw << "sweep-prompt-len --data " << data() << " --values 2,4 --out " << csv
     << " " << kTinyModel << " --epochs 1 --seed 3";
  ASSERT_EQ(run_cli(sw.str(), log()), 0);
  auto rows = lines_of(csv);
  ASSERT_EQ(rows.size(), 3u);  // header + 2 values
  EXPECT_EQ(rows[0], "swept_value,acc2,f1,mae,corr,acc7");
  EXPECT_EQ(rows[1].substr(0, 2), "2,");
  EXPECT_EQ(rows[2].substr(0, 2), "4,");
}

TEST_F(CliFixture, SweepLambdaEmitsInitialGap) {
  make_data();
  auto csv = dir.path() / "lambda.csv";
  std::ostringstream sw;
  sw << "sweep-lambda --data " << data() << " --values 0.0002,0.001 --out "
     << csv << " " << kTinyModel << " --epochs 1 --seed 3";
  ASSERT_EQ(run_cli(sw.str(), log()), 0);
  auto rows = lines_of(csv);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "swept_value,acc2,f1,mae,corr,acc7,initial_abs_gap");
}

TEST_F(CliFixture, TraceRetrievalWritesTraceCsv) {
  make_data();
  auto out = dir.path() / "traced";
  std::ostringstream tr;
  tr << "trace-retrieval --data " << data() << " --out " << out << " "
     << kTinyModel << " --epochs 1 --seed 4";
  ASSERT_EQ(run_cli(tr.str(), log()), 0);
  auto rows = lines_of(out / "trace.csv");
  ASSERT_GT(rows.size(), 1u);
  EXPECT_EQ(rows[0],
            "step,sample_id,target_modality,retrieved_modality,pos_id,pos_sim,"
            "neg_id,neg_sim");
}

TEST_F(CliFixture, AblateSuiteProducesFiveRows) {
  make_data();
  auto csv = dir.path() / "ablate.csv";
  std::ostringstream ab;
  ab << "ablate-suite --data " << data() << " --out " << csv << " " << kTinyModel
     << " --epochs 1 --seed 3";
  ASSERT_EQ(run_cli(ab.str(), log()), 0);
  auto rows = lines_of(csv);
  ASSERT_EQ(rows.size(), 6u);  // header + full + 4 ablations
  EXPECT_EQ(rows[0], "model,acc2,f1,mae,corr,acc7,trainable_params");
  EXPECT_EQ(rows[1].substr(0, 5), "full,");
}

TEST_F(CliFixture, CompareContrastiveRows) {
  make_data();
  auto csv = dir.path() / "cc.csv";
  std::ostringstream cc;
  cc << "compare-contrastive --data " << data() << " --out " << csv << " "
     << kTinyModel << " --epochs 1 --seed 3";
  ASSERT_EQ(run_cli(cc.str(), log()), 0);
  auto rows = lines_of(csv);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].substr(0, 5), "ccrl,");
  EXPECT_EQ(rows[2].substr(0, 8), "infonce,");
}

TEST_F(CliFixture, RepeatsReportMeanAndBest) {
  make_data();
  auto out = dir.path() / "rep";
  std::ostringstream tr;
  tr << "train --data " << data() << " --out " << out << " " << kTinyModel
     << " --epochs 1 --seed 21 --repeats 2";
  ASSERT_EQ(run_cli(tr.str(), log()), 0);
  nlohmann::json summary = nlohmann::json::parse(testing::read_file(log()));
  ASSERT_EQ(summary["runs"].size(), 2u);
  EXPECT_EQ(summary["runs"][0]["seed"].get<int>(), 21);
  EXPECT_EQ(summary["runs"][1]["seed"].get<int>(), 22);
  EXPECT_TRUE(summary["mean"].contains("acc2"));
  EXPECT_TRUE(summary["best"].contains("mae"));
  EXPECT_GE(summary["best"]["acc2"].get<double>(),
            summary["runs"][0]["acc2"].get<double>() - 1e-12);
  EXPECT_TRUE(std::filesystem::exists(out / "checkpoint.json"));
}

TEST_F(CliFixture, MissingDataIsRuntimeErrorExit1) {
  auto out = dir.path() / "run";
  std::ostringstream tr;
  tr << "train --data " << dir.path() / "nope" << " --out " << out;
  EXPECT_EQ(run_cli(tr.str(), log()), 1);
  std::string msg = testing::read_file(log());
  EXPECT_NE(msg.find("error"), std::string::npos);
}

TEST_F(CliFixture, ConfigFileWithFlagOverride) {
  make_data();
  auto cfg_path = dir.path() / "config.json";
  {
    std::ofstream f(cfg_path);
    f << R"({"d_model": 8, "d_shared": 6, "prompt_len": 3, "ffn_mult": 2,
             "learning_rate": 0.001, "epochs": 1, "seed": 11})";
  }
  auto out = dir.path() / "cfgrun";
  std::ostringstream tr;
  tr << "train --data " << data() << " --config " << cfg_path << " --out " << out
     << " --epochs 2";  // flag overrides file
  ASSERT_EQ(run_cli(tr.str(), log()), 0);
  nlohmann::json summary = nlohmann::json::parse(testing::read_file(log()));
  EXPECT_EQ(summary["epochs_done"].get<int>(), 2);

  // unknown config key is a runtime config error
  {
    std::ofstream f(cfg_path);
    f << R"({"d_modle": 8})";
  }
  std::ostringstream bad;
  bad << "train --data " << data() << " --config " << cfg_path << " --out " << out;
  EXPECT_EQ(run_cli(bad.str(), log()), 1);
}

}  // namespace
}  // namespace xmrs
