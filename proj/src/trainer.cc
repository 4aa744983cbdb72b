// src/trainer.cc

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

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "asem/error.h"
#include "asem/format.h"

namespace asem {

void TrainerConfig::Validate() const {
  for (double lr : {pretrain_lr, classifier_lr, embed_lr, adv_lr})
    if (!(lr >= 0.0) || !std::isfinite(lr))
      Fail(ErrorKind::kUsage, "trainer: learning rates must be finite and >= 0");
  if (!(rms_rho >= 0.0 && rms_rho < 1.0) || !(rms_eps > 0.0))
    Fail(ErrorKind::kUsage, "trainer: need 0 <= rms_rho < 1 and rms_eps > 0");
  if (batch_size < 1) Fail(ErrorKind::kUsage, "trainer: batch_size must be >= 1");
  if (chunk_frames_min < 1 || chunk_frames_min > chunk_frames_max)
    Fail(ErrorKind::kUsage, "trainer: need 1 <= chunk_frames_min <= chunk_frames_max");
  if (samples_per_recording < 1)
    Fail(ErrorKind::kUsage, "trainer: samples_per_recording must be >= 1");
  if (!(am_cfg.s > 0.0) || !std::isfinite(am_cfg.m) || !std::isfinite(pretrain_margin))
    Fail(ErrorKind::kUsage, "trainer: invalid AM-softmax settings");
}

std::size_t EpochPlan::num_source_chunks() const {
  std::size_t n = 0;
  for (const PlanBatch &b : batches) n += b.source.size();
  return n;
}

namespace {

std::mt19937_64 SeededRng(std::uint64_t seed, std::uint32_t tag, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), tag,
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
  return std::mt19937_64(seq);
}

void RequireLongEnough(const Corpus &corpus, std::size_t min_frames,
                       const char *what) {
  std::vector<std::string> short_ids;
  for (const Recording &r : corpus.recordings)
    if (r.frames.dim(0) < min_frames) short_ids.push_back(r.id);
  if (short_ids.empty()) return;
  std::ostringstream os;
  for (const std::string &id : short_ids) os << ' ' << id;
  Fail(ErrorKind::kData, what, " recordings shorter than chunk_frames_min (",
       min_frames, "):", os.str());
}

}  // namespace

EpochPlan BuildEpochPlan(const Corpus &source, const Corpus *target,
                         const TrainerConfig &cfg, std::size_t epoch_index) {
  cfg.Validate();
  if (source.recordings.empty()) Fail(ErrorKind::kData, "epoch plan: empty source corpus");
  RequireLongEnough(source, cfg.chunk_frames_min, "source");
  if (target) {
    if (target->recordings.empty())
      Fail(ErrorKind::kData, "epoch plan: empty target corpus");
    RequireLongEnough(*target, cfg.chunk_frames_min, "target");
  }
  std::mt19937_64 rng = SeededRng(cfg.seed, 7, epoch_index);

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < source.size(); ++i)
    order.insert(order.end(), cfg.samples_per_recording, i);
  std::shuffle(order.begin(), order.end(), rng);

  EpochPlan plan;
  for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
    const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
    std::vector<std::size_t> tgt;
    if (target) {
      std::uniform_int_distribution<std::size_t> pick(0, target->size() - 1);
      for (std::size_t i = begin; i < end; ++i) tgt.push_back(pick(rng));
    }
    std::size_t shortest = cfg.chunk_frames_max;
    for (std::size_t i = begin; i < end; ++i)
      shortest = std::min(shortest, source.recordings[order[i]].frames.dim(0));
    for (std::size_t j : tgt)
      shortest = std::min(shortest, target->recordings[j].frames.dim(0));
    std::uniform_int_distribution<std::size_t> length_dist(cfg.chunk_frames_min,
                                                           shortest);
    const std::size_t length = length_dist(rng);

    auto chunk = [&](const Corpus &corpus, std::size_t rec) {
      const Recording &r = corpus.recordings[rec];
      std::uniform_int_distribution<std::size_t> start(0, r.frames.dim(0) - length);
      return Chunk{rec, r.id, start(rng), length};
    };
    PlanBatch batch;
    for (std::size_t i = begin; i < end; ++i)
      batch.source.push_back(chunk(source, order[i]));
    for (std::size_t j : tgt) batch.target.push_back(chunk(*target, j));
    plan.batches.push_back(std::move(batch));
  }
  return plan;
}

SpeakerIndex::SpeakerIndex(const Corpus &source) {
  for (const Recording &r : source.recordings) ids_.push_back(r.speaker);
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

int SpeakerIndex::Label(std::uint32_t speaker) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), speaker);
  if (it == ids_.end() || *it != speaker)
    Fail(ErrorKind::kData, "speaker ", speaker, " is not a source training speaker");
  return static_cast<int>(it - ids_.begin());
}

SpeakerBatch MakeBatch(const Corpus &corpus, const std::vector<Chunk> &chunks,
                       Domain domain, const SpeakerIndex *index) {
  if (chunks.empty()) Fail(ErrorKind::kData, "make batch: no chunks");
  const std::size_t length = chunks[0].length;
  const std::size_t d = corpus.recordings[chunks[0].recording].frames.dim(1);
  SpeakerBatch batch;
  batch.domain = domain;
  batch.frames = Tensor({chunks.size(), length, d});
  std::size_t out = 0;
  for (const Chunk &c : chunks) {
    const Recording &r = corpus.recordings.at(c.recording);
    if (c.length != length || c.start + c.length > r.frames.dim(0))
      Fail(ErrorKind::kData, "make batch: chunk of ", r.id, " does not fit");
    for (std::size_t t = 0; t < length; ++t)
      for (std::size_t k = 0; k < d; ++k) batch.frames[out++] = r.frames.at(c.start + t, k);
    if (domain == Domain::kSource && index)
      batch.speaker_labels.push_back(index->Label(r.speaker));
    else
      batch.speaker_labels.push_back(-1);
  }
  return batch;
}

namespace {

std::string LossField(const std::optional<double> &v) {
  return v ? FormatShortest(*v) : std::string("-");
}

}  // namespace

std::string TrainHistoryToText(const TrainHistory &history) {
  std::string out;
  std::size_t e = 0;
  auto flush_epochs = [&](std::size_t steps_done) {
    for (; e < history.epochs.size() && history.epochs[e].after_step <= steps_done; ++e)
      out += "epoch " + std::to_string(history.epochs[e].epoch) + " val_eer " +
             FormatShortest(history.epochs[e].val_eer) + '\n';
  };
  for (std::size_t i = 0; i < history.steps.size(); ++i) {
    flush_epochs(i);
    const StepRecord &s = history.steps[i];
    out += "step " + std::to_string(s.step) + " task " + FormatShortest(s.task) +
           " disc " + LossField(s.disc) + " gen " + LossField(s.gen) + " aux " +
           LossField(s.aux) + '\n';
  }
  flush_epochs(history.steps.size());
  return out;
}

TrainHistory TrainHistoryFromText(const std::string &text, const std::string &source) {
  TrainHistory history;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  auto bad = [&](const std::string &why) {
    Fail(ErrorKind::kData, source, ":", line_no, ": ", why);
  };
  auto loss = [&](std::string_view field) -> std::optional<double> {
    if (field == "-") return std::nullopt;
    return ParseDouble(field, "loss");
  };
  auto index = [&](std::string_view field) -> std::size_t {
    std::size_t v = 0;
    for (char c : field) {
      if (c < '0' || c > '9') bad("bad index '" + std::string(field) + "'");
      v = v * 10 + static_cast<std::size_t>(c - '0');
    }
    if (field.empty()) bad("empty index");
    return v;
  };
  while (std::getline(is, line)) {
    ++line_no;
    auto f = SplitOn(line, ' ');
    if (f.size() == 10 && f[0] == "step" && f[2] == "task" && f[4] == "disc" &&
        f[6] == "gen" && f[8] == "aux") {
      StepRecord s;
      s.step = index(f[1]);
      s.task = ParseDouble(f[3], "task loss");
      s.disc = loss(f[5]);
      s.gen = loss(f[7]);
      s.aux = loss(f[9]);
      if (!history.steps.empty() && s.step <= history.steps.back().step)
        bad("step indices must increase");
      history.steps.push_back(s);
    } else if (f.size() == 4 && f[0] == "epoch" && f[2] == "val_eer") {
      history.epochs.push_back(
          {index(f[1]), ParseDouble(f[3], "val_eer"), history.steps.size()});
    } else {
      bad("unrecognized history record");
    }
  }
  return history;
}

namespace {

void RequireFinite(double v, const char *stage) {
  if (!std::isfinite(v)) Fail(ErrorKind::kNumeric, stage, ": non-finite loss");
}

// Encodes source and target chunks as one batch; the first `n_source` rows
// of the result are the source embeddings.
ad::Var EncodeJoint(const SpeakerBatch &source, const SpeakerBatch &target,
                    const NetworkConfig &config, const ad::VarMap &embed,
                    TensorMap &running, TensorMap *running_update) {
  const Shape &ss = source.frames.shape(), &ts = target.frames.shape();
  if (ss.size() != 3 || ts.size() != 3 || ss[1] != ts[1] || ss[2] != ts[2])
    Fail(ErrorKind::kShape, "adversarial step: source ", ShapeString(ss),
         " and target ", ShapeString(ts), " batches must share time and dim");
  ad::Var frames = ad::Concat(
      {ad::Constant(source.frames), ad::Constant(target.frames)}, 0);
  return EncodeGraph(frames, config, embed, Mode::kTrain, running, running_update);
}

struct AdversarialLosses {
  ad::Var adv;
  std::optional<ad::Var> aux;
};

// Stage-2 (discriminator) or stage-3 (generator) objective.
AdversarialLosses AdversarialObjective(const ad::Var &embeddings,
                                       std::size_t n_source,
                                       const SpeakerBatch &source,
                                       const NetworkConfig &config,
                                       const ad::VarMap &discrim,
                                       const GanVariant &variant, bool generator) {
  const std::size_t n = embeddings.shape()[0];
  DiscriminatorOutput out = Discriminate(embeddings, config, discrim);
  ad::Var rs = ad::SliceRows(out.raw_score, 0, n_source);
  ad::Var rt = ad::SliceRows(out.raw_score, n_source, n);
  AdversarialLosses losses;
  losses.adv = generator ? GeneratorLoss(rt, rs, variant)
                         : DiscriminatorLoss(rs, rt, variant);
  if (variant.aux)
    losses.aux = AuxClassifierLoss(
        out.aux_logits ? std::optional<ad::Var>(ad::SliceRows(*out.aux_logits, 0,
                                                              n_source))
                       : std::nullopt,
        source.speaker_labels);
  return losses;
}

void RequireAuxHead(const ModelState &model, const GanVariant &variant) {
  if (variant.aux && !model.config.aux_head)
    Fail(ErrorKind::kState, "variant ", VariantName(variant),
         " needs a model with an auxiliary head");
}

}  // namespace

TrainHistory Pretrain(ModelState &model, const Corpus &source,
                      const TrainerConfig &cfg) {
  cfg.Validate();
  TrainHistory history;
  if (cfg.pretrain_epochs == 0) return history;
  const SpeakerIndex index(source);
  if (index.size() != model.config.num_speakers)
    Fail(ErrorKind::kState, "pretrain: corpus has ", index.size(),
         " speakers but the classifier has ", model.config.num_speakers);
  const OptimizerConfig rms{OptimizerKind::kRmsprop, cfg.pretrain_lr, cfg.rms_rho,
                            cfg.rms_eps};
  Optimizer opt_e(rms), opt_c(rms);
  const AmSoftmaxConfig am{cfg.am_cfg.s, cfg.pretrain_margin};
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    const EpochPlan plan = BuildEpochPlan(source, nullptr, cfg, epoch);
    for (const PlanBatch &pb : plan.batches) {
      const ModelState last_good = model;
      try {
        SpeakerBatch batch = MakeBatch(source, pb.source, Domain::kSource, &index);
        ad::VarMap e = ad::Bind(model.embed, true);
        ad::VarMap c = ad::Bind(model.classifier, true);
        TensorMap running = model.bn_running;
        ad::Var emb = EncodeGraph(ad::Constant(batch.frames), model.config, e,
                                  Mode::kTrain, running, &running);
        ad::Var loss = AmSoftmaxLoss(Classify(emb, c), batch.speaker_labels, am);
        RequireFinite(loss.value().item(), "pretrain");
        ad::Backward(loss);
        opt_e.Step(model.embed, ad::Gradients(e));
        opt_c.Step(model.classifier, ad::Gradients(c));
        model.bn_running = std::move(running);
        history.steps.push_back({step++, loss.value().item(), {}, {}, {}});
      } catch (const Error &err) {
        model = last_good;
        if (err.kind() != ErrorKind::kNumeric) throw;
        Fail(ErrorKind::kNumeric, "pretrain diverged at step ", step,
             "; model restored to the last good state: ", err.what());
      }
    }
  }
  return history;
}

AdversarialOptimizers::AdversarialOptimizers(const TrainerConfig &cfg)
    : classifier({OptimizerKind::kRmsprop, cfg.classifier_lr, cfg.rms_rho, cfg.rms_eps}),
      embed_task({OptimizerKind::kSgd, cfg.embed_lr}),
      discrim({OptimizerKind::kSgd, cfg.adv_lr}),
      embed_adv({OptimizerKind::kSgd, cfg.adv_lr}) {}

TensorMap GeneratorGradients(const ModelState &model, const SpeakerBatch &source,
                             const SpeakerBatch &target, const GanVariant &variant) {
  RequireAuxHead(model, variant);
  ad::VarMap e = ad::Bind(model.embed, true);
  ad::VarMap d = ad::Bind(model.discrim, false);
  TensorMap running = model.bn_running;
  ad::Var emb = EncodeJoint(source, target, model.config, e, running, nullptr);
  AdversarialLosses l = AdversarialObjective(emb, source.frames.dim(0), source,
                                             model.config, d, variant, true);
  ad::Var total = l.aux ? ad::Add(l.adv, *l.aux) : l.adv;
  ad::Backward(total);
  return ad::Gradients(e);
}

StepRecord AdversarialStep(ModelState &model, const SpeakerBatch &source,
                           const SpeakerBatch &target, const TrainerConfig &cfg,
                           AdversarialOptimizers &opts, const StageMask &mask) {
  const GanVariant &variant = cfg.variant;
  RequireAuxHead(model, variant);
  const std::size_t ns = source.frames.dim(0);
  StepRecord rec;
  const char *stage = "stage 1 (task)";
  try {
    if (mask.task) {
      ad::VarMap e = ad::Bind(model.embed, true);
      ad::VarMap c = ad::Bind(model.classifier, true);
      TensorMap running = model.bn_running;
      ad::Var emb = EncodeJoint(source, target, model.config, e, running, &running);
      ad::Var loss = AmSoftmaxLoss(Classify(ad::SliceRows(emb, 0, ns), c),
                                   source.speaker_labels, cfg.am_cfg);
      RequireFinite(loss.value().item(), stage);
      ad::Backward(loss);
      TensorMap ge = ad::Gradients(e), gc = ad::Gradients(c);
      opts.classifier.Step(model.classifier, gc);
      opts.embed_task.Step(model.embed, ge);
      model.bn_running = std::move(running);
      rec.task = loss.value().item();
    }
    stage = "stage 2 (discriminator)";
    if (mask.disc) {
      ad::VarMap e = ad::Bind(model.embed, false);
      ad::VarMap d = ad::Bind(model.discrim, true);
      TensorMap running = model.bn_running;
      ad::Var emb = EncodeJoint(source, target, model.config, e, running, nullptr);
      AdversarialLosses l =
          AdversarialObjective(emb, ns, source, model.config, d, variant, false);
      ad::Var total = l.aux ? ad::Add(l.adv, *l.aux) : l.adv;
      RequireFinite(total.value().item(), stage);
      ad::Backward(total);
      opts.discrim.Step(model.discrim, ad::Gradients(d));
      rec.disc = l.adv.value().item();
      if (l.aux) rec.aux = l.aux->value().item();
    }
    stage = "stage 3 (generator)";
    if (mask.gen) {
      ad::VarMap e = ad::Bind(model.embed, true);
      ad::VarMap d = ad::Bind(model.discrim, false);
      TensorMap running = model.bn_running;
      ad::Var emb = EncodeJoint(source, target, model.config, e, running, nullptr);
      AdversarialLosses l =
          AdversarialObjective(emb, ns, source, model.config, d, variant, true);
      ad::Var total = l.aux ? ad::Add(l.adv, *l.aux) : l.adv;
      RequireFinite(total.value().item(), stage);
      ad::Backward(total);
      opts.embed_adv.Step(model.embed, ad::Gradients(e));
      rec.gen = l.adv.value().item();
      if (l.aux && !rec.aux) rec.aux = l.aux->value().item();
    }
  } catch (const Error &err) {
    if (err.kind() != ErrorKind::kNumeric) throw;
    Fail(ErrorKind::kNumeric, "adversarial step ", stage, ": ", err.what());
  }
  return rec;
}

double ValidationEer(const ModelState &model, const ValidationSet &validation) {
  return ComputeEer(ScoreTrials(validation.trials, Extract(validation.corpus, model)),
                    validation.trials);
}

TrainResult Train(const ModelState &model, const Corpus &source,
                  const Corpus &target, const ValidationSet &validation,
                  const TrainerConfig &cfg) {
  cfg.Validate();
  if (target.recordings.empty())
    Fail(ErrorKind::kData, "train: target corpus is empty");
  if (cfg.max_epochs == 0) Fail(ErrorKind::kUsage, "train: max_epochs must be >= 1");
  const SpeakerIndex index(source);
  if (index.size() != model.config.num_speakers)
    Fail(ErrorKind::kState, "train: corpus has ", index.size(),
         " speakers but the classifier has ", model.config.num_speakers);
  RequireAuxHead(model, cfg.variant);

  TrainResult result;
  ModelState current = model;
  AdversarialOptimizers opts(cfg);
  std::size_t step = 0, since_improvement = 0;
  bool have_best = false;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const EpochPlan plan =
        BuildEpochPlan(source, &target, cfg, cfg.pretrain_epochs + epoch);
    for (const PlanBatch &pb : plan.batches) {
      SpeakerBatch s = MakeBatch(source, pb.source, Domain::kSource, &index);
      SpeakerBatch t = MakeBatch(target, pb.target, Domain::kTarget, nullptr);
      StepRecord rec = AdversarialStep(current, s, t, cfg, opts);
      rec.step = step++;
      result.history.steps.push_back(rec);
    }
    const double eer = ValidationEer(current, validation);
    result.history.epochs.push_back({epoch, eer, result.history.steps.size()});
    if (!have_best || eer < result.best_val_eer) {
      have_best = true;
      result.best = current;
      result.best_val_eer = eer;
      result.best_epoch = epoch;
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    if (since_improvement >= cfg.patience) break;
  }
  return result;
}

}  // namespace asem
