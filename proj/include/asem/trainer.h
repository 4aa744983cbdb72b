// asem/trainer.h

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

#ifndef ASEM_TRAINER_H_
#define ASEM_TRAINER_H_

// Pretraining, the per-batch adversarial update and the epoch loop.
//
// One adversarial step on a (source, target) mini-batch pair runs three
// updates in order, each on freshly computed embeddings:
//   1. task loss (AM-softmax on source) over E and C
//   2. discriminator loss (+ auxiliary speaker loss) over D
//   3. generator loss (+ auxiliary speaker loss) over E, D held fixed
// so E moves twice per batch.  In the adversarial phase source and target
// chunks go through E as one batch, so batch normalization sees both domains.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asem/eval.h"
#include "asem/losses.h"
#include "asem/network.h"
#include "asem/optim.h"
#include "asem/synthdata.h"

namespace asem {

struct TrainerConfig {
  double pretrain_lr = 0.001;    // RMSprop, E and C
  double classifier_lr = 0.003;  // RMSprop, C in stage 1
  double embed_lr = 0.001;       // SGD, E in stage 1
  double adv_lr = 0.001;         // SGD, D in stage 2 and E in stage 3
  double rms_rho = 0.9;
  double rms_eps = 1e-8;
  std::size_t batch_size = 64;
  std::size_t chunk_frames_min = 30;
  std::size_t chunk_frames_max = 80;
  std::size_t samples_per_recording = 10;
  std::size_t pretrain_epochs = 10;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  GanVariant variant;
  AmSoftmaxConfig am_cfg;
  double pretrain_margin = 0.0;
  std::uint64_t seed = 1;

  void Validate() const;
  bool operator==(const TrainerConfig &) const = default;
};

struct Chunk {
  std::size_t recording = 0;  // index into the corpus
  std::string id;
  std::size_t start = 0;
  std::size_t length = 0;
  bool operator==(const Chunk &) const = default;
};

struct PlanBatch {
  std::vector<Chunk> source;
  std::vector<Chunk> target;  // empty when no target corpus was given
  bool operator==(const PlanBatch &) const = default;
};

/// One epoch: every source recording contributes samples_per_recording
/// chunks, shuffled into mini-batches of batch_size (the last may be short).
/// All chunks of a mini-batch share one length, drawn uniformly from
/// [chunk_frames_min, chunk_frames_max] clipped to the shortest recording in
/// the batch.  Each source batch is paired with a target batch of the same
/// size drawn with replacement.
struct EpochPlan {
  std::vector<PlanBatch> batches;
  std::size_t num_source_chunks() const;
  bool operator==(const EpochPlan &) const = default;
};

/// Deterministic in (cfg.seed, epoch_index).  `target` may be null.
EpochPlan BuildEpochPlan(const Corpus &source, const Corpus *target,
                         const TrainerConfig &cfg, std::size_t epoch_index);

/// Contiguous class indices for the source speaker ids, in ascending id
/// order.  Used as AM-softmax labels.
class SpeakerIndex {
 public:
  explicit SpeakerIndex(const Corpus &source);
  int Label(std::uint32_t speaker) const;
  std::size_t size() const { return ids_.size(); }

 private:
  std::vector<std::uint32_t> ids_;
};

/// Materializes the chunks of `chunks` into a [batch, length, frame_dim]
/// batch.  Labels come from `index` for the source domain and are -1 for the
/// target domain.
SpeakerBatch MakeBatch(const Corpus &corpus, const std::vector<Chunk> &chunks,
                       Domain domain, const SpeakerIndex *index);

struct StepRecord {
  std::size_t step = 0;
  double task = 0.0;
  std::optional<double> disc;
  std::optional<double> gen;
  std::optional<double> aux;
  bool operator==(const StepRecord &) const = default;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double val_eer = 0.0;
  std::size_t after_step = 0;  // number of step records preceding this one
  bool operator==(const EpochRecord &) const = default;
};

struct TrainHistory {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  bool operator==(const TrainHistory &) const = default;
};

/// "step <i> task <v> disc <v> gen <v> aux <v>" and "epoch <e> val_eer <v>"
/// lines; losses that are inactive for the run are written as "-".
std::string TrainHistoryToText(const TrainHistory &history);
TrainHistory TrainHistoryFromText(const std::string &text,
                                  const std::string &source);

/// Supervised pretraining of E and C with AM-softmax at margin
/// cfg.pretrain_margin, RMSprop at cfg.pretrain_lr.  D is not touched.  On a
/// non-finite loss or update, `model` is restored to the last good state and
/// a numeric error is thrown.
TrainHistory Pretrain(ModelState &model, const Corpus &source,
                      const TrainerConfig &cfg);

/// Optimizer state carried across adversarial steps.
struct AdversarialOptimizers {
  explicit AdversarialOptimizers(const TrainerConfig &cfg);
  Optimizer classifier;  // RMSprop, stage 1
  Optimizer embed_task;  // SGD, stage 1
  Optimizer discrim;     // SGD, stage 2
  Optimizer embed_adv;   // SGD, stage 3
};

/// Lets tests run a subset of the three stages.
struct StageMask {
  bool task = true;
  bool disc = true;
  bool gen = true;
};

/// Runs the three updates on one batch pair.  A non-finite value at any
/// stage is a numeric error naming the stage.
StepRecord AdversarialStep(ModelState &model, const SpeakerBatch &source,
                           const SpeakerBatch &target, const TrainerConfig &cfg,
                           AdversarialOptimizers &opts,
                           const StageMask &mask = {});

/// Gradient of the stage-3 objective with respect to E at the current model.
TensorMap GeneratorGradients(const ModelState &model, const SpeakerBatch &source,
                             const SpeakerBatch &target, const GanVariant &variant);

struct ValidationSet {
  Corpus corpus;
  TrialList trials;
};

double ValidationEer(const ModelState &model, const ValidationSet &validation);

struct TrainResult {
  ModelState best;
  TrainHistory history;
  double best_val_eer = 0.0;
  std::size_t best_epoch = 0;
};

/// Adversarial epochs starting from `model` (already pretrained).  After each
/// epoch the validation EER is computed; the model with the lowest EER is
/// kept and training stops once `patience` epochs pass without improvement or
/// max_epochs is reached.
TrainResult Train(const ModelState &model, const Corpus &source,
                  const Corpus &target, const ValidationSet &validation,
                  const TrainerConfig &cfg);

}  // namespace asem

#endif  // ASEM_TRAINER_H_
