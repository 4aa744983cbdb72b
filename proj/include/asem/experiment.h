// asem/experiment.h

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

#ifndef ASEM_EXPERIMENT_H_
#define ASEM_EXPERIMENT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "asem/eval.h"
#include "asem/network.h"
#include "asem/synthdata.h"
#include "asem/trainer.h"

namespace asem {

/// Everything a run needs besides the variant.  The defaults form the
/// desk-scale profile used by the command-line tool and the acceptance run;
/// they differ from the plain struct defaults in the network widths and a
/// few trainer settings.
struct RunConfig {
  std::uint64_t seed = 1;
  SynthSpec synth;
  NetworkConfig network;
  TrainerConfig trainer;
  ProbeConfig probe;

  RunConfig();
  /// Copies `seed` into the synth, trainer and probe seeds and derives the
  /// network's frame_dim and num_speakers from the SynthSpec.  Idempotent.
  void Resolve();
  void Validate() const;
  bool operator==(const RunConfig &) const = default;
};

/// JSON text with sections "synth", "network", "trainer", "probe" and a
/// top-level "seed".  Every key is optional; unknown keys are errors.
/// The variant is not part of the file.  Output is in resolved form.
std::string RunConfigToJson(const RunConfig &config);
RunConfig RunConfigFromJson(const std::string &text, const std::string &source);

/// The corpora of one experiment, all derived from one SynthSpec.
///   train:      the SynthSpec as given (source labeled, target unlabeled);
///   validation: a fresh draw at seed + 1000, within-domain trials only;
///   test:       16 + 16 speakers x 8 recordings at seed + 2000;
///   probe:      200 + 200 speakers x 1 recording at seed + 3000.
/// The probe corpora have one recording per speaker so that a domain probe
/// cannot succeed by recognizing speakers it saw while fitting.
struct ExperimentData {
  Corpus source;
  Corpus target;
  ValidationSet validation;
  Corpus test_source;
  Corpus test_target;
  TrialList source_trials;
  TrialList target_trials;
  Corpus probe_source;
  Corpus probe_target;
};

ExperimentData BuildExperimentData(const SynthSpec &spec);

/// Trials of both test conditions, source first.
TrialList PooledTrials(const ExperimentData &data);

/// Both test corpora in one corpus, for extraction before pooled scoring.
Corpus PooledTestCorpus(const ExperimentData &data);

/// Held-out domain-probe accuracy on the model's embeddings of the probe
/// corpora.
double EmbeddingProbe(const ModelState &model, const Corpus &probe_source,
                      const Corpus &probe_target, const ProbeConfig &config);

struct Evaluation {
  ScoreSet source_scores;
  ScoreSet target_scores;
  ScoreSet pooled_scores;
  double source_eer = 0.0;
  double target_eer = 0.0;
  double pooled_eer = 0.0;
  double probe = 0.0;
};

Evaluation Evaluate(const ModelState &model, const ExperimentData &data,
                    const ProbeConfig &probe);

/// The 8 adversarial variants in a fixed order: each GAN kind without and
/// then with the auxiliary classifier.
std::vector<GanVariant> AllVariants();

}  // namespace asem

#endif  // ASEM_EXPERIMENT_H_
