// tests/cli-test.cc

// Copyright 2026  The asem authors

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

#include "asem/cli.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "asem/experiment.h"

namespace asem {
namespace {

namespace fs = std::filesystem;

const char *kTinyConfig = R"({
  "seed": 3,
  "synth": {"num_source_speakers": 4, "num_target_speakers": 3,
            "recordings_per_speaker": 3, "frames_min": 40, "frames_max": 50},
  "network": {"encoder_hidden": [8], "post_pool_widths": [16, 16],
              "embedding_dim": 8, "disc_widths": [8], "attention_hidden": 4},
  "trainer": {"pretrain_epochs": 2, "max_epochs": 2, "chunk_frames_min": 10,
              "chunk_frames_max": 20, "samples_per_recording": 2},
  "probe": {"epochs": 50}
})";

struct Result {
  int code;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("asem-cli-test-" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    WriteTextFile(P("tiny.json"), kTinyConfig);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string P(const std::string &name) const { return (dir_ / name).string(); }

  Result Run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = RunCli(args, out, err);
    return {code, out.str(), err.str()};
  }

  void MustRun(std::vector<std::string> args) {
    const Result r = Run(args);
    ASSERT_EQ(r.code, 0) << args[0] << ": " << r.err;
  }

  // gen-data, pretrain, train, extract, score into `tag`-prefixed paths.
  void Pipeline(const std::string &tag, const std::string &variant = "sgan") {
    const std::string cfg = P("tiny.json");
    MustRun({"gen-data", "--config", cfg, "--out", P(tag + "data")});
    MustRun({"pretrain", "--config", cfg, "--data", P(tag + "data"), "--out",
             P(tag + "pre")});
    MustRun({"train", "--config", cfg, "--data", P(tag + "data"), "--init",
             P(tag + "pre/model.asem"), "--variant", variant, "--out", P(tag + "run")});
    MustRun({"extract", "--model", P(tag + "run/model.asem"), "--corpus",
             P(tag + "data/test-target.asec"), "--out", P(tag + "emb")});
    MustRun({"score", "--trials", P(tag + "data/test-target.trials"), "--embeddings",
             P(tag + "emb"), "--out", P(tag + "scores")});
  }

  fs::path dir_;
};

TEST_F(CliTest, EerOnSeparatedFixture) {
  WriteTextFile(P("t.trials"), "a\tb\ttarget\nc\td\ttarget\ne\tf\tnontarget\n"
                               "g\th\tnontarget\n");
  WriteTextFile(P("s.scores"), "# polarity=similarity\na\tb\t0.9\nc\td\t0.8\n"
                               "e\tf\t0.1\ng\th\t0.2\n");
  const Result r = Run({"eer", "--trials", P("t.trials"), "--scores", P("s.scores")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "0.0000\n");
}

TEST_F(CliTest, PipelineIsByteDeterministic) {
  Pipeline("a-");
  Pipeline("b-");
  for (const char *file : {"data/train-source.asec", "data/test-pooled.trials",
                           "pre/model.asem", "pre/history.txt", "run/model.asem",
                           "run/history.txt", "run/config.json", "emb", "scores"})
    EXPECT_EQ(ReadTextFile(P(std::string("a-") + file)),
              ReadTextFile(P(std::string("b-") + file)))
        << file;
}

TEST_F(CliTest, VariantsGiveDistinctRuns) {
  Pipeline("g-", "gradrev");
  const std::string cfg = P("tiny.json");
  MustRun({"train", "--config", cfg, "--data", P("g-data"), "--init",
           P("g-pre/model.asem"), "--variant", "sgan", "--out", P("s-run")});
  EXPECT_NE(ReadTextFile(P("g-run/model.asem")), ReadTextFile(P("s-run/model.asem")));
  EXPECT_NE(ReadTextFile(P("g-run/history.txt")), ReadTextFile(P("s-run/history.txt")));
  EXPECT_EQ(ReadTextFile(P("g-run/variant.txt")), "GRADREV\n");
  EXPECT_EQ(ReadTextFile(P("s-run/variant.txt")), "SGAN\n");
}

TEST_F(CliTest, FuseOfIdenticalFilesIsIdentity) {
  Pipeline("f-");
  const std::string s = P("f-scores");
  MustRun({"fuse", s, s, s, "--out", P("fused")});
  EXPECT_EQ(ReadTextFile(P("fused")), ReadTextFile(s));
}

TEST_F(CliTest, ReportAgreesWithEerCommand) {
  Pipeline("r-", "lsgan");
  const Result rep = Run({"report", "--config", P("tiny.json"), "--data", P("r-data"),
                          "--model", "base=" + P("r-pre/model.asem"), "--model",
                          "ls=" + P("r-run/model.asem"), "--fuse", "both=base,ls",
                          "--out", P("rep")});
  ASSERT_EQ(rep.code, 0) << rep.err;
  EXPECT_EQ(rep.out, ReadTextFile(P("rep/report.txt")));
  std::istringstream csv(ReadTextFile(P("rep/report.csv")));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "model,classifier,source_eer,target_eer,pooled_eer,probe");
  int rows = 0;
  const char *conditions[3] = {"source", "target", "pooled"};
  while (std::getline(csv, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    ASSERT_GE(f.size(), 5u) << line;
    EXPECT_EQ(f[1], "COSINE");
    for (int c = 0; c < 3; ++c) {
      const Result e = Run({"eer", "--trials",
                            P(std::string("r-data/test-") + conditions[c] + ".trials"),
                            "--scores", P("rep/" + f[0] + "." + conditions[c] + ".scores")});
      EXPECT_EQ(e.out, f[2 + c] + "\n") << f[0] << " " << conditions[c];
    }
    ++rows;
  }
  EXPECT_EQ(rows, 3);
  // Scores written by report match a manual extract + score.
  MustRun({"extract", "--model", P("r-run/model.asem"), "--corpus",
           P("r-data/test-source.asec"), "--corpus", P("r-data/test-target.asec"),
           "--out", P("pooled.emb")});
  MustRun({"score", "--trials", P("r-data/test-pooled.trials"), "--embeddings",
           P("pooled.emb"), "--out", P("pooled.scores")});
  EXPECT_EQ(ReadTextFile(P("pooled.scores")), ReadTextFile(P("rep/ls.pooled.scores")));
}

TEST_F(CliTest, ProbeCommandIsDeterministic) {
  Pipeline("p-");
  MustRun({"extract", "--model", P("p-run/model.asem"), "--corpus",
           P("p-data/probe-source.asec"), "--out", P("ps.emb")});
  MustRun({"extract", "--model", P("p-run/model.asem"), "--corpus",
           P("p-data/probe-target.asec"), "--out", P("pt.emb")});
  const std::vector<std::string> args{"probe", "--config", P("tiny.json"), "--source",
                                      P("ps.emb"), "--target", P("pt.emb")};
  const Result a = Run(args), b = Run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const double acc = std::stod(a.out);
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(Run({}).code, kExitUsage);
  EXPECT_EQ(Run({"nonsense"}).code, kExitUsage);
  EXPECT_EQ(Run({"eer", "--trials", P("x")}).code, kExitUsage);
  EXPECT_EQ(Run({"--help"}).code, kExitOk);
  EXPECT_EQ(Run({"train", "--data", P("d"), "--init", P("m"), "--variant", "wgan",
                 "--out", P("o")})
                .code,
            kExitUsage);
  const Result missing = Run({"eer", "--trials", P("none"), "--scores", P("none")});
  EXPECT_EQ(missing.code, kExitData);
  EXPECT_NE(missing.err.find("asem eer"), std::string::npos);

  WriteTextFile(P("bad.json"), R"({"trainer": {"learning_rate": 0.1}})");
  const Result unknown = Run({"gen-data", "--config", P("bad.json"), "--out", P("o")});
  EXPECT_EQ(unknown.code, kExitData);
  EXPECT_NE(unknown.err.find("learning_rate"), std::string::npos);
  EXPECT_FALSE(fs::exists(P("o")));

  // A pretraining rate this large overflows on the first update.
  WriteTextFile(P("blowup.json"), R"({"synth": {"num_source_speakers": 4,
      "num_target_speakers": 3, "recordings_per_speaker": 3, "frames_min": 40,
      "frames_max": 50}, "network": {"encoder_hidden": [8], "post_pool_widths": [16, 16],
      "embedding_dim": 8, "disc_widths": [8], "attention_hidden": 4},
      "trainer": {"pretrain_lr": 1e300, "pretrain_epochs": 3,
      "chunk_frames_min": 10, "chunk_frames_max": 20}})");
  MustRun({"gen-data", "--config", P("blowup.json"), "--out", P("bd")});
  const Result blow = Run({"pretrain", "--config", P("blowup.json"), "--data", P("bd"),
                           "--out", P("bp")});
  EXPECT_EQ(blow.code, kExitNumeric) << blow.err;
  EXPECT_NE(blow.err.find("pretrain"), std::string::npos);
  EXPECT_FALSE(fs::exists(P("bp")));

  // An aux variant needs a checkpoint with an aux head.
  WriteTextFile(P("noaux.json"), R"({"synth": {"num_source_speakers": 4,
      "num_target_speakers": 3, "recordings_per_speaker": 3, "frames_min": 40,
      "frames_max": 50}, "network": {"encoder_hidden": [8], "post_pool_widths": [16, 16],
      "embedding_dim": 8, "disc_widths": [8], "attention_hidden": 4, "aux_head": false},
      "trainer": {"pretrain_epochs": 1, "chunk_frames_min": 10, "chunk_frames_max": 20}})");
  MustRun({"gen-data", "--config", P("noaux.json"), "--out", P("nd")});
  MustRun({"pretrain", "--config", P("noaux.json"), "--data", P("nd"), "--out", P("np")});
  EXPECT_EQ(Run({"train", "--config", P("noaux.json"), "--data", P("nd"), "--init",
                 P("np/model.asem"), "--variant", "sgan", "--aux", "--out", P("nt")})
                .code,
            kExitData);
}

TEST(RunConfigTest, JsonRoundTrip) {
  RunConfig c;
  EXPECT_EQ(RunConfigFromJson(RunConfigToJson(c), "c"), c);
  c.seed = 17;
  c.synth.channel_noise = 0.1 + 0.2;
  c.network.encoder_hidden = {5, 6, 7};
  c.network.use_batchnorm = false;
  c.trainer.adv_lr = 1.0 / 3.0;
  c.probe.epochs = 9;
  c.Resolve();
  EXPECT_EQ(RunConfigFromJson(RunConfigToJson(c), "c"), c);
  EXPECT_EQ(c.trainer.seed, 17u);
  EXPECT_EQ(c.synth.seed, 17u);
}

TEST(RunConfigTest, DefaultsAndDerivedFields) {
  const RunConfig c = RunConfigFromJson("{}", "empty");
  EXPECT_EQ(c, RunConfig());
  const RunConfig d =
      RunConfigFromJson(R"({"synth": {"frame_dim": 5, "num_source_speakers": 3}})", "d");
  EXPECT_EQ(d.network.frame_dim, 5u);
  EXPECT_EQ(d.network.num_speakers, 3u);
}

TEST(RunConfigTest, RejectsBadFiles) {
  for (const char *text :
       {"[1, 2]", "{\"seed\": -1}", "{\"extra\": {}}", "{\"synth\": 3}",
        "{\"synth\": {\"frame_dim\": 2.5}}", "{\"network\": {\"use_batchnorm\": 1}}",
        "{\"trainer\": {\"adv_lr\": \"fast\"}}", "{\"network\": {\"disc_widths\": [-1]}}",
        "{\"probe\": {\"train_fraction\": 1.5}}", "{\"trainer\": {\"batch_size\": 0}}",
        "{not json"}) {
    try {
      RunConfigFromJson(text, "bad.json");
      ADD_FAILURE() << text;
    } catch (const Error &e) {
      EXPECT_EQ(e.kind(), ErrorKind::kData) << text;
      EXPECT_NE(std::string(e.what()).find("bad.json"), std::string::npos) << text;
    }
  }
}

TEST(ExperimentTest, DataLayout) {
  SynthSpec spec;
  spec.num_source_speakers = 3;
  spec.num_target_speakers = 2;
  spec.recordings_per_speaker = 2;
  const ExperimentData d = BuildExperimentData(spec);
  EXPECT_EQ(d.source.size(), 6u);
  EXPECT_EQ(d.validation.corpus.size(), 10u);
  EXPECT_EQ(d.test_source.size(), 128u);
  EXPECT_EQ(d.probe_source.size(), 200u);
  EXPECT_EQ(d.probe_target.size(), 200u);
  // Validation and test trials never cross domains.
  for (const TrialList *list : {&d.validation.trials, &d.source_trials, &d.target_trials})
    for (const Trial &t : list->trials)
      EXPECT_EQ(t.enroll.substr(0, 3), t.test.substr(0, 3)) << t.enroll << " " << t.test;
  EXPECT_EQ(PooledTrials(d).trials.size(),
            d.source_trials.trials.size() + d.target_trials.trials.size());
  EXPECT_EQ(AllVariants().size(), 8u);
}

}  // namespace
}  // namespace asem
