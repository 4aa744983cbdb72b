// tests/trainer-test.cc

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

#include "asem/trainer.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "asem/error.h"
#include "grad-cases.h"

namespace asem {
namespace {

using testing::RandomTensor;
using testing::TinyConfig;

SynthSpec SmallSpec(std::uint64_t seed) {
  SynthSpec spec;
  spec.num_source_speakers = 3;
  spec.num_target_speakers = 3;
  spec.recordings_per_speaker = 4;
  spec.frames_min = 20;
  spec.frames_max = 30;
  spec.frame_dim = 3;
  spec.seed = seed;
  return spec;
}

TrainerConfig SmallTrainer() {
  TrainerConfig cfg;
  cfg.batch_size = 6;
  cfg.chunk_frames_min = 8;
  cfg.chunk_frames_max = 15;
  cfg.samples_per_recording = 2;
  cfg.pretrain_epochs = 2;
  cfg.max_epochs = 3;
  cfg.patience = 5;
  return cfg;
}

ValidationSet SmallValidation(std::uint64_t seed) {
  auto [src, tgt] = Generate(SmallSpec(seed + 1000));
  ValidationSet v{src, MakeTrials(src)};
  for (const Recording &r : tgt.recordings) v.corpus.recordings.push_back(r);
  for (const Trial &t : MakeTrials(tgt).trials) v.trials.trials.push_back(t);
  return v;
}

std::pair<SpeakerBatch, SpeakerBatch> RandomBatches(std::mt19937_64 &rng, int speakers) {
  SpeakerBatch s{RandomTensor({3, 5, 3}, rng), testing::RandomLabels(3, speakers, rng),
                 Domain::kSource};
  SpeakerBatch t{RandomTensor({3, 5, 3}, rng, 1.5), {-1, -1, -1}, Domain::kTarget};
  for (double &v : t.frames.data()) v += 0.7;
  return {s, t};
}

bool Changed(const TensorMap &a, const TensorMap &b) { return !(a == b); }

TEST(EpochPlanTest, ChunkCountsAndLengths) {
  auto [src, tgt] = Generate(SmallSpec(1));
  TrainerConfig cfg = SmallTrainer();
  cfg.samples_per_recording = 10;
  EpochPlan plan = BuildEpochPlan(src, &tgt, cfg, 0);
  EXPECT_EQ(plan.num_source_chunks(), 120u);
  std::map<std::size_t, int> per_rec;
  for (const PlanBatch &b : plan.batches) {
    ASSERT_EQ(b.source.size(), b.target.size());
    EXPECT_LE(b.source.size(), cfg.batch_size);
    const std::size_t len = b.source[0].length;
    EXPECT_GE(len, cfg.chunk_frames_min);
    EXPECT_LE(len, cfg.chunk_frames_max);
    for (const Chunk &c : b.source) {
      EXPECT_EQ(c.length, len);
      EXPECT_LE(c.start + c.length, src.recordings[c.recording].frames.dim(0));
      EXPECT_EQ(c.id, src.recordings[c.recording].id);
      per_rec[c.recording]++;
    }
    for (const Chunk &c : b.target) {
      EXPECT_EQ(c.length, len);
      EXPECT_LE(c.start + c.length, tgt.recordings[c.recording].frames.dim(0));
    }
  }
  for (const auto &[rec, n] : per_rec) EXPECT_EQ(n, 10) << rec;
}

TEST(EpochPlanTest, DegenerateLengthAndDeterminism) {
  auto [src, tgt] = Generate(SmallSpec(1));
  TrainerConfig cfg = SmallTrainer();
  cfg.chunk_frames_min = cfg.chunk_frames_max = 11;
  for (const PlanBatch &b : BuildEpochPlan(src, nullptr, cfg, 3).batches) {
    EXPECT_TRUE(b.target.empty());
    for (const Chunk &c : b.source) EXPECT_EQ(c.length, 11u);
  }
  cfg = SmallTrainer();
  EXPECT_EQ(BuildEpochPlan(src, &tgt, cfg, 4), BuildEpochPlan(src, &tgt, cfg, 4));
  EXPECT_NE(BuildEpochPlan(src, &tgt, cfg, 4), BuildEpochPlan(src, &tgt, cfg, 5));
}

TEST(EpochPlanTest, ShortRecordingsAreListed) {
  auto [src, tgt] = Generate(SmallSpec(1));
  TrainerConfig cfg = SmallTrainer();
  cfg.chunk_frames_min = 25;
  cfg.chunk_frames_max = 40;
  try {
    BuildEpochPlan(src, nullptr, cfg, 0);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
    for (const Recording &r : src.recordings)
      if (r.frames.dim(0) < 25)
        EXPECT_NE(std::string(e.what()).find(r.id), std::string::npos) << r.id;
  }
}

TEST(BatchTest, LabelsAndTargetMasking) {
  auto [src, tgt] = Generate(SmallSpec(2));
  SpeakerIndex index(src);
  EXPECT_EQ(index.size(), 3u);
  EpochPlan plan = BuildEpochPlan(src, &tgt, SmallTrainer(), 0);
  SpeakerBatch s = MakeBatch(src, plan.batches[0].source, Domain::kSource, &index);
  SpeakerBatch t = MakeBatch(tgt, plan.batches[0].target, Domain::kTarget, &index);
  for (std::size_t i = 0; i < s.speaker_labels.size(); ++i)
    EXPECT_EQ(s.speaker_labels[i],
              index.Label(src.recordings[plan.batches[0].source[i].recording].speaker));
  for (int l : t.speaker_labels) EXPECT_EQ(l, -1);
  EXPECT_THROW(index.Label(99), Error);
}

TEST(PretrainTest, UpdatesEAndCOnly) {
  auto [src, tgt] = Generate(SmallSpec(3));
  ModelState model = InitModel(TinyConfig(true, true), 3);
  const ModelState before = model;
  TrainHistory h = Pretrain(model, src, SmallTrainer());
  EXPECT_EQ(model.discrim, before.discrim);
  EXPECT_TRUE(Changed(model.embed, before.embed));
  EXPECT_TRUE(Changed(model.classifier, before.classifier));
  EXPECT_TRUE(Changed(model.bn_running, before.bn_running));
  EXPECT_FALSE(h.steps.empty());
  for (std::size_t i = 0; i < h.steps.size(); ++i) {
    EXPECT_EQ(h.steps[i].step, i);
    EXPECT_TRUE(std::isfinite(h.steps[i].task));
    EXPECT_FALSE(h.steps[i].disc || h.steps[i].gen || h.steps[i].aux);
  }
}

TEST(PretrainTest, ZeroEpochsLeavesModelUnchanged) {
  auto [src, tgt] = Generate(SmallSpec(3));
  ModelState model = InitModel(TinyConfig(true, false), 3);
  const ModelState before = model;
  TrainerConfig cfg = SmallTrainer();
  cfg.pretrain_epochs = 0;
  EXPECT_TRUE(Pretrain(model, src, cfg).steps.empty());
  EXPECT_EQ(model, before);
}

TEST(PretrainTest, SpeakerCountMustMatch) {
  auto [src, tgt] = Generate(SmallSpec(3));
  NetworkConfig c = TinyConfig(false, false);
  c.num_speakers = 5;
  ModelState model = InitModel(c, 1);
  try {
    Pretrain(model, src, SmallTrainer());
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kState);
  }
}

TEST(PretrainTest, LearnsSeparatedSpeakers) {
  SynthSpec spec;
  spec.num_source_speakers = 4;
  spec.speaker_scatter = 3.0;
  spec.channel_noise = 0.5;
  auto [src, tgt] = Generate(spec);
  NetworkConfig nc;
  nc.encoder_hidden = {16};
  nc.residual_blocks = 1;
  nc.post_pool_widths = {32, 32};
  nc.embedding_dim = 16;
  nc.num_speakers = 4;
  nc.disc_widths = {16};
  nc.attention_hidden = 8;
  ModelState model = InitModel(nc, 1);
  TrainerConfig cfg;
  cfg.batch_size = 16;
  cfg.pretrain_epochs = 20;
  TrainHistory h = Pretrain(model, src, cfg);
  // Mean loss over the last epoch.
  const std::size_t per_epoch = h.steps.size() / cfg.pretrain_epochs;
  double last = 0.0;
  for (std::size_t i = h.steps.size() - per_epoch; i < h.steps.size(); ++i)
    last += h.steps[i].task;
  last /= static_cast<double>(per_epoch);
  EXPECT_LT(last, std::log(4.0) * 0.25);
}

struct StageCase {
  GanVariant variant;
  StageMask mask;
};

TEST(AdversarialStepTest, StageIsolationForEveryVariant) {
  for (GanKind kind : {GanKind::kSgan, GanKind::kLsgan, GanKind::kRelgan,
                       GanKind::kGradrev}) {
    for (bool aux : {false, true}) {
      const GanVariant v{kind, aux};
      std::mt19937_64 rng(static_cast<std::uint64_t>(kind) * 2 + aux);
      auto [s, t] = RandomBatches(rng, 3);
      const ModelState init = InitModel(TinyConfig(true, true), 4);
      TrainerConfig cfg = SmallTrainer();
      cfg.variant = v;
      auto run = [&](StageMask mask) {
        ModelState m = init;
        AdversarialOptimizers opts(cfg);
        StepRecord rec = AdversarialStep(m, s, t, cfg, opts, mask);
        return std::pair{m, rec};
      };
      const std::string name = VariantName(v);
      auto [m1, r1] = run({true, false, false});
      EXPECT_TRUE(Changed(m1.embed, init.embed)) << name;
      EXPECT_TRUE(Changed(m1.classifier, init.classifier)) << name;
      EXPECT_EQ(m1.discrim, init.discrim) << name;
      auto [m2, r2] = run({false, true, false});
      EXPECT_EQ(m2.embed, init.embed) << name;
      EXPECT_EQ(m2.classifier, init.classifier) << name;
      EXPECT_TRUE(Changed(m2.discrim, init.discrim)) << name;
      EXPECT_EQ(m2.bn_running, init.bn_running) << name;
      auto [m3, r3] = run({false, false, true});
      EXPECT_TRUE(Changed(m3.embed, init.embed)) << name;
      EXPECT_EQ(m3.classifier, init.classifier) << name;
      EXPECT_EQ(m3.discrim, init.discrim) << name;
      EXPECT_EQ(m3.bn_running, init.bn_running) << name;
      // Loss bookkeeping for the full step.
      auto [m, r] = run({});
      EXPECT_TRUE(r.disc && r.gen && std::isfinite(*r.disc) && std::isfinite(*r.gen));
      EXPECT_EQ(r.aux.has_value(), aux) << name;
    }
  }
}

TEST(AdversarialStepTest, ZeroAdversarialRateEqualsTaskStageAlone) {
  std::mt19937_64 rng(2);
  auto [s, t] = RandomBatches(rng, 3);
  const ModelState init = InitModel(TinyConfig(true, true), 5);
  TrainerConfig cfg = SmallTrainer();
  cfg.variant = {GanKind::kLsgan, true};
  cfg.adv_lr = 0.0;
  ModelState full = init, task = init;
  AdversarialOptimizers o1(cfg), o2(cfg);
  AdversarialStep(full, s, t, cfg, o1);
  AdversarialStep(task, s, t, cfg, o2, {true, false, false});
  EXPECT_EQ(full, task);
}

TEST(AdversarialStepTest, AuxVariantNeedsAuxHead) {
  std::mt19937_64 rng(3);
  auto [s, t] = RandomBatches(rng, 3);
  ModelState m = InitModel(TinyConfig(true, false), 5);
  TrainerConfig cfg = SmallTrainer();
  cfg.variant = {GanKind::kSgan, true};
  AdversarialOptimizers opts(cfg);
  try {
    AdversarialStep(m, s, t, cfg, opts);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kState);
  }
}

TEST(AdversarialStepTest, NonFiniteLossNamesTheStage) {
  std::mt19937_64 rng(3);
  auto [s, t] = RandomBatches(rng, 3);
  ModelState m = InitModel(TinyConfig(false, false), 5);
  m.discrim.at("out.W").Fill(std::nan(""));
  TrainerConfig cfg = SmallTrainer();
  AdversarialOptimizers opts(cfg);
  try {
    AdversarialStep(m, s, t, cfg, opts, {false, true, true});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
    EXPECT_NE(std::string(e.what()).find("stage 2"), std::string::npos) << e.what();
  }
}

// Stage-3 objective, assembled here from the public network and loss API.
ad::Var GeneratorObjective(const ModelState &model, const ad::VarMap &embed,
                           const SpeakerBatch &s, const SpeakerBatch &t,
                           const GanVariant &v, bool discriminator_loss = false) {
  const std::size_t ns = s.frames.dim(0), n = ns + t.frames.dim(0);
  ad::Var frames = ad::Concat({ad::Constant(s.frames), ad::Constant(t.frames)}, 0);
  ad::Var emb = EncodeGraph(frames, model.config, embed, Mode::kTrain,
                            model.bn_running, nullptr);
  DiscriminatorOutput out =
      Discriminate(emb, model.config, ad::Bind(model.discrim, false));
  ad::Var rs = ad::SliceRows(out.raw_score, 0, ns);
  ad::Var rt = ad::SliceRows(out.raw_score, ns, n);
  ad::Var loss = discriminator_loss ? DiscriminatorLoss(rs, rt, v) : GeneratorLoss(rt, rs, v);
  if (v.aux)
    loss = ad::Add(loss, AuxClassifierLoss(ad::SliceRows(*out.aux_logits, 0, ns),
                                           s.speaker_labels));
  return loss;
}

TEST(AdversarialStepTest, GeneratorGradientMatchesFiniteDifferences) {
  for (GanKind kind : {GanKind::kSgan, GanKind::kLsgan, GanKind::kRelgan,
                       GanKind::kGradrev}) {
    for (bool aux : {false, true}) {
      const GanVariant v{kind, aux};
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        std::mt19937_64 rng(seed + 100);
        auto [s, t] = RandomBatches(rng, 3);
        const ModelState model = InitModel(TinyConfig(true, true), seed);
        const TensorMap analytic = GeneratorGradients(model, s, t, v);
        // Finite differences of the independently assembled objective.
        const double h = 1e-5;
        TensorMap work = model.embed;
        for (const auto &[name, tensor] : model.embed) {
          double diff2 = 0, a2 = 0, n2 = 0;
          for (std::size_t i = 0; i < std::min<std::size_t>(tensor.size(), 6); ++i) {
            const double orig = work.at(name)[i];
            work.at(name)[i] = orig + h;
            const double up = GeneratorObjective(model, ad::Bind(work, false), s, t, v)
                                  .value().item();
            work.at(name)[i] = orig - h;
            const double down = GeneratorObjective(model, ad::Bind(work, false), s, t, v)
                                    .value().item();
            work.at(name)[i] = orig;
            const double num = (up - down) / (2 * h), a = analytic.at(name)[i];
            diff2 += (a - num) * (a - num);
            a2 += a * a;
            n2 += num * num;
          }
          const double err = std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(n2), 1e-5});
          EXPECT_LE(err, 1e-4) << VariantName(v) << " seed " << seed << " " << name;
        }
      }
    }
  }
}

TEST(AdversarialStepTest, GradientReversalNegatesDiscriminatorGradient) {
  std::mt19937_64 rng(7);
  auto [s, t] = RandomBatches(rng, 3);
  const ModelState model = InitModel(TinyConfig(true, false), 7);
  const GanVariant v{GanKind::kGradrev, false};
  const TensorMap gen = GeneratorGradients(model, s, t, v);
  ad::VarMap e = ad::Bind(model.embed, true);
  ad::Backward(GeneratorObjective(model, e, s, t, v, true));
  const TensorMap disc = ad::Gradients(e);
  for (const auto &[name, g] : gen)
    for (std::size_t i = 0; i < g.size(); ++i)
      EXPECT_LE(std::abs(g[i] + disc.at(name)[i]), 1e-10) << name;
}

class TrainTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::tie(src_, tgt_) = Generate(SmallSpec(5));
    validation_ = SmallValidation(5);
    cfg_ = SmallTrainer();
    cfg_.variant = {GanKind::kSgan, true};
    model_ = InitModel(TinyConfig(true, true), 5);
    Pretrain(model_, src_, cfg_);
  }
  Corpus src_, tgt_;
  ValidationSet validation_;
  TrainerConfig cfg_;
  ModelState model_;
};

TEST_F(TrainTest, BestCheckpointAndHistory) {
  TrainResult r = Train(model_, src_, tgt_, validation_, cfg_);
  ASSERT_EQ(r.history.epochs.size(), cfg_.max_epochs);
  double best = r.history.epochs[0].val_eer;
  for (const EpochRecord &e : r.history.epochs) best = std::min(best, e.val_eer);
  EXPECT_EQ(r.best_val_eer, best);
  EXPECT_EQ(r.history.epochs[r.best_epoch].val_eer, best);
  EXPECT_EQ(ValidationEer(r.best, validation_), best);
  for (std::size_t i = 0; i < r.history.steps.size(); ++i) {
    const StepRecord &s = r.history.steps[i];
    EXPECT_EQ(s.step, i);
    EXPECT_TRUE(s.disc && s.gen && s.aux);
  }
  EXPECT_EQ(TrainHistoryFromText(TrainHistoryToText(r.history), "h"), r.history);
}

TEST_F(TrainTest, PatienceZeroRunsOneEpoch) {
  cfg_.patience = 0;
  TrainResult r = Train(model_, src_, tgt_, validation_, cfg_);
  EXPECT_EQ(r.history.epochs.size(), 1u);
}

TEST_F(TrainTest, DeterministicAndBlindToTargetLabels) {
  cfg_.max_epochs = 2;
  const TrainResult a = Train(model_, src_, tgt_, validation_, cfg_);
  const TrainResult b = Train(model_, src_, tgt_, validation_, cfg_);
  EXPECT_EQ(TrainHistoryToText(a.history), TrainHistoryToText(b.history));
  EXPECT_EQ(a.best, b.best);
  Corpus scrambled = tgt_;
  std::mt19937_64 rng(1);
  for (Recording &r : scrambled.recordings) r.speaker = 1000 + rng() % 7;
  const TrainResult c = Train(model_, src_, scrambled, validation_, cfg_);
  EXPECT_EQ(TrainHistoryToText(c.history), TrainHistoryToText(a.history));
}

TEST_F(TrainTest, EmptyTargetIsAnError) {
  try {
    Train(model_, src_, Corpus(), validation_, cfg_);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
}

TEST(TrainHistoryTest, TextFormat) {
  TrainHistory h;
  h.steps.push_back({0, 1.5, {}, {}, {}});
  h.steps.push_back({1, 0.25, 1.386, -0.5, 0.1});
  h.epochs.push_back({0, 0.125, 2});
  const std::string text = TrainHistoryToText(h);
  EXPECT_EQ(text,
            "step 0 task 1.5 disc - gen - aux -\n"
            "step 1 task 0.25 disc 1.386 gen -0.5 aux 0.1\n"
            "epoch 0 val_eer 0.125\n");
  EXPECT_EQ(TrainHistoryFromText(text, "h"), h);
  EXPECT_THROW(TrainHistoryFromText("step 0 task x disc - gen - aux -\n", "h"), Error);
  EXPECT_THROW(TrainHistoryFromText("step 1 task 1 disc - gen - aux -\nstep 1 task 1 disc - gen - aux -\n", "h"), Error);
}

}  // namespace
}  // namespace asem
