// tests/eval-test.cc

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

#include "asem/eval.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "asem/error.h"
#include "eer-oracle.h"
#include "grad-cases.h"

namespace asem {
namespace {

using testing::RandomTensor;

std::string Message(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.what();
  }
  return "";
}

TEST(EerTest, WorkedExamples) {
  EXPECT_EQ(ComputeEer(std::vector<double>{0.9, 0.8}, std::vector<double>{0.1, 0.2}), 0.0);
  EXPECT_EQ(ComputeEer(std::vector<double>{0.8, 0.4}, std::vector<double>{0.6, 0.2}), 0.5);
  EXPECT_EQ(ComputeEer(std::vector<double>{0.1, 0.2}, std::vector<double>{0.9, 0.8}), 1.0);
  // All scores tied: the only crossing is interpolated halfway.
  EXPECT_DOUBLE_EQ(ComputeEer(std::vector<double>{0.5}, std::vector<double>{0.5}), 0.5);
}

TEST(EerTest, InterpolatesBetweenRocPoints) {
  // Targets {0.5, 0.9}, nontargets {0.1, 0.2, 0.5}.  Just above 0.2 the rates
  // are FAR 1/3, FRR 0; just above 0.5 they are FAR 0, FRR 1/2.  On the
  // segment between them FAR - FRR falls from 1/3 to -1/2, so it vanishes
  // 2/5 of the way along, at FRR = 1/5.
  const std::vector<double> tar{0.5, 0.9}, non{0.1, 0.2, 0.5};
  const testing::EerOracleResult oracle = testing::BruteForceEer(tar, non);
  EXPECT_FALSE(oracle.exact);
  EXPECT_NEAR(oracle.eer, 0.2, 1e-15);
  EXPECT_NEAR(ComputeEer(tar, non), 0.2, 1e-15);
}

TEST(EerTest, MatchesBruteForceOracle) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> count(1, 60);
  std::uniform_int_distribution<int> coarse(0, 12);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> tar(count(rng)), non(count(rng));
    const bool ties = trial % 3 == 0;
    std::normal_distribution<double> nt(1.0, 1.0), nn(0.0, 1.0);
    for (double &s : tar) s = ties ? coarse(rng) / 4.0 : nt(rng);
    for (double &s : non) s = ties ? coarse(rng) / 5.0 : nn(rng);
    const testing::EerOracleResult oracle = testing::BruteForceEer(tar, non);
    const double eer = ComputeEer(tar, non);
    if (oracle.exact)
      EXPECT_EQ(eer, oracle.eer) << "trial " << trial;
    else
      EXPECT_NEAR(eer, oracle.eer, 1e-12) << "trial " << trial;
  }
}

TEST(EerTest, InvariantUnderMonotoneTransforms) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> tar(30), non(40);
    for (double &s : tar) s = n(rng) + 0.8;
    for (double &s : non) s = n(rng);
    const double base = ComputeEer(tar, non);
    auto mapped = [](std::vector<double> v, double (*f)(double)) {
      for (double &x : v) x = f(x);
      return v;
    };
    double (*affine)(double) = [](double x) { return 3.0 * x - 7.0; };
    double (*cubic)(double) = [](double x) { return x * x * x + x; };
    EXPECT_NEAR(ComputeEer(mapped(tar, affine), mapped(non, affine)), base, 1e-12);
    EXPECT_NEAR(ComputeEer(mapped(tar, cubic), mapped(non, cubic)), base, 1e-12);
  }
}

TEST(EerTest, Errors) {
  EXPECT_THROW(ComputeEer(std::vector<double>{}, std::vector<double>{0.1}), Error);
  EXPECT_THROW(ComputeEer(std::vector<double>{0.2}, std::vector<double>{}), Error);
  EXPECT_THROW(ComputeEer(std::vector<double>{NAN}, std::vector<double>{0.1}), Error);
  TrialList trials{{{"a", "b", true}, {"a", "c", false}}};
  ScoreSet scores{{{"a", "b", 0.9}, {"a", "d", 0.1}}};
  EXPECT_THROW(ComputeEer(scores, trials), Error);
}

TEST(ScoringTest, CosineExamples) {
  EmbeddingTable table;
  table.Insert("x", {2.0, 0.0});
  table.Insert("y", {0.5, 0.0});
  table.Insert("z", {0.0, -3.0});
  table.Insert("w", {-1.0, 0.0});
  TrialList trials{{{"x", "y", true}, {"x", "z", false}, {"x", "w", false}}};
  ScoreSet s = ScoreTrials(trials, table);
  EXPECT_DOUBLE_EQ(s.scores[0].score, 1.0);
  EXPECT_DOUBLE_EQ(s.scores[1].score, 0.0);
  EXPECT_DOUBLE_EQ(s.scores[2].score, -1.0);
  EXPECT_THROW(table.Insert("x", {1.0, 1.0}), Error);
  EXPECT_THROW(table.Insert("zero", {0.0, 0.0}), Error);
}

TEST(ScoringTest, MissingIdsAreAllListed) {
  EmbeddingTable table;
  table.Insert("a", {1.0});
  TrialList trials{{{"a", "m1", true}, {"m2", "a", false}}};
  const std::string msg = Message([&] { ScoreTrials(trials, table); });
  EXPECT_NE(msg.find("m1"), std::string::npos);
  EXPECT_NE(msg.find("m2"), std::string::npos);
}

TEST(ExtractTest, OneUnitEmbeddingPerRecording) {
  ModelState model = InitModel(testing::TinyConfig(true, false), 3);
  std::mt19937_64 rng(2);
  Corpus corpus;
  for (int i = 0; i < 24; ++i)
    corpus.recordings.push_back({"r" + std::to_string(i), 0, Domain::kSource,
                                 RandomTensor({static_cast<std::size_t>(5 + i), 3}, rng)});
  corpus.recordings.push_back(corpus.recordings[4]);
  corpus.recordings.back().id = "copy";
  EmbeddingTable table = Extract(corpus, model);
  EXPECT_EQ(table.size(), 25u);
  for (const auto &[id, v] : table.entries()) {
    double ss = 0.0;
    for (double x : v) ss += x * x;
    EXPECT_NEAR(std::sqrt(ss), 1.0, 1e-9) << id;
  }
  EXPECT_EQ(*table.Find("copy"), *table.Find("r4"));
  // Extraction leaves the model untouched.
  EXPECT_EQ(model, InitModel(testing::TinyConfig(true, false), 3));
}

TEST(FuseTest, MeanIdentityAndPermutation) {
  ScoreSet a{{{"p", "q", 0.2}, {"p", "r", -0.1}}};
  ScoreSet b{{{"p", "q", 0.4}, {"p", "r", 0.7}}};
  ScoreSet c{{{"p", "q", 0.1 + 0.2}, {"p", "r", 1e-17}}};
  EXPECT_EQ(Fuse({a}), a);
  EXPECT_EQ(Fuse({a, a, a}), a);
  EXPECT_DOUBLE_EQ(Fuse({a, b}).scores[0].score, 0.3);
  EXPECT_EQ(Fuse({a, b, c}), Fuse({c, a, b}));
  EXPECT_EQ(Fuse({a, b, c}), Fuse({b, c, a}));
  ScoreSet bad{{{"p", "q", 0.4}, {"p", "x", 0.7}}};
  const std::string msg = Message([&] { Fuse({a, bad}); });
  EXPECT_NE(msg.find("line 2"), std::string::npos);
  EXPECT_THROW(Fuse({}), Error);
}

TEST(FuseTest, RandomPermutationInvariance) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<ScoreSet> sets(5);
  for (ScoreSet &s : sets)
    for (int i = 0; i < 50; ++i) s.scores.push_back({"e" + std::to_string(i), "t", n(rng)});
  const ScoreSet ref = Fuse(sets);
  for (int k = 0; k < 20; ++k) {
    std::shuffle(sets.begin(), sets.end(), rng);
    EXPECT_EQ(Fuse(sets), ref);
  }
}

Tensor Gaussian(std::size_t n, std::size_t d, double shift, std::mt19937_64 &rng) {
  Tensor t = RandomTensor({n, d}, rng);
  for (std::size_t i = 0; i < n; ++i) t.at(i, 0) += shift;
  return t;
}

TEST(ProbeTest, NullDistributionIsChance) {
  double total = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    ProbeConfig cfg;
    cfg.seed = seed;
    total += DomainProbe(Gaussian(150, 6, 0.0, rng), Gaussian(150, 6, 0.0, rng), cfg);
  }
  EXPECT_NEAR(total / 5.0, 0.5, 0.07);
}

TEST(ProbeTest, SeparatedClustersAreFound) {
  std::mt19937_64 rng(8);
  EXPECT_GE(DomainProbe(Gaussian(60, 4, 6.0, rng), Gaussian(60, 4, -6.0, rng), {}), 0.95);
}

TEST(ProbeTest, SwappingDomainsIsSymmetric) {
  std::mt19937_64 rng(9);
  Tensor s = Gaussian(100, 5, 0.8, rng), t = Gaussian(100, 5, -0.8, rng);
  EXPECT_NEAR(DomainProbe(s, t, {}), DomainProbe(t, s, {}), 0.02);
}

TEST(ProbeTest, DeterministicAndValidated) {
  std::mt19937_64 rng(10);
  Tensor s = Gaussian(40, 3, 1.0, rng), t = Gaussian(30, 3, 0.0, rng);
  EXPECT_EQ(DomainProbe(s, t, {}), DomainProbe(s, t, {}));
  EXPECT_THROW(DomainProbe(s, Gaussian(19, 3, 0.0, rng), {}), Error);
  EXPECT_THROW(DomainProbe(Gaussian(250, 3, 0.0, rng), Gaussian(24, 3, 0.0, rng), {}),
               Error);
  EXPECT_THROW(DomainProbe(s, Gaussian(30, 4, 0.0, rng), {}), Error);
}

TEST(TextFormatTest, RoundTrips) {
  TrialList trials{{{"a", "b", true}, {"a", "c", false}}};
  EXPECT_EQ(TrialsFromText(TrialsToText(trials), "t"), trials);
  ScoreSet scores{{{"a", "b", 0.123456789012345}, {"a", "c", -1e-300}}};
  const std::string text = ScoresToText(scores);
  EXPECT_EQ(text.rfind("# polarity=similarity\n", 0), 0u);
  EXPECT_EQ(ScoresFromText(text, "s"), scores);
  EmbeddingTable table;
  table.Insert("a", {0.6f, 0.8f});
  EmbeddingTable back = EmbeddingsFromText(EmbeddingsToText(table), "e");
  ASSERT_NE(back.Find("a"), nullptr);
  EXPECT_NEAR((*back.Find("a"))[1], 0.8, 1e-7);
}

TEST(TextFormatTest, MalformedInputsNameTheLine) {
  const std::string msg =
      Message([] { TrialsFromText("a\tb\ttarget\nc\td\tmaybe\n", "trials.txt"); });
  EXPECT_NE(msg.find("trials.txt"), std::string::npos);
  EXPECT_NE(msg.find("2"), std::string::npos);
  EXPECT_THROW(TrialsFromText("a\tb\ttarget\na\tb\tnontarget\n", "t"), Error);
  EXPECT_THROW(ScoresFromText("# polarity=similarity\na\tb\tnan\n", "s"), Error);
  EXPECT_THROW(ScoresFromText("# polarity=distance\na\tb\t0.1\n", "s"), Error);
  EXPECT_THROW(EmbeddingsFromText("a\t1,x\n", "e"), Error);
}

TEST(MakeTrialsTest, AllPairsLabeledBySpeaker) {
  Corpus c;
  for (int i = 0; i < 4; ++i)
    c.recordings.push_back({"r" + std::to_string(i), static_cast<std::uint32_t>(i / 2),
                            Domain::kSource, Tensor({1, 1}, 1.0)});
  TrialList t = MakeTrials(c);
  ASSERT_EQ(t.trials.size(), 6u);
  int targets = 0;
  for (const Trial &tr : t.trials) targets += tr.target;
  EXPECT_EQ(targets, 2);
  EXPECT_NO_THROW(t.Validate());
}

}  // namespace
}  // namespace asem
