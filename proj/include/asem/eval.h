// asem/eval.h

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

#ifndef ASEM_EVAL_H_
#define ASEM_EVAL_H_

// Verification back end: embedding extraction, cosine scoring, equal error
// rate, score-level fusion and the domain probe.  Scores are similarities:
// higher means "same speaker".

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "asem/network.h"
#include "asem/synthdata.h"
#include "asem/tensor.h"

namespace asem {

/// Unit-norm embeddings keyed by recording id.
class EmbeddingTable {
 public:
  /// L2-normalizes `embedding`; duplicate ids and zero vectors are errors.
  void Insert(const std::string &id, std::vector<double> embedding);
  const std::vector<double> *Find(const std::string &id) const;
  const std::map<std::string, std::vector<double>> &entries() const {
    return entries_;
  }
  std::size_t size() const { return entries_.size(); }
  bool operator==(const EmbeddingTable &) const = default;

 private:
  std::map<std::string, std::vector<double>> entries_;
};

/// EVAL-mode forward pass over each full recording; the discriminator is not
/// touched.
EmbeddingTable Extract(const Corpus &corpus, const ModelState &model);

/// Stacks the rows of `table` for the given ids, [ids, dim].
Tensor EmbeddingMatrix(const EmbeddingTable &table,
                       const std::vector<std::string> &ids);

struct Trial {
  std::string enroll;
  std::string test;
  bool target = false;
  bool operator==(const Trial &) const = default;
};

struct TrialList {
  std::vector<Trial> trials;
  /// Throws on duplicate (enroll, test) pairs.
  void Validate() const;
  bool operator==(const TrialList &) const = default;
};

/// Every unordered pair of recordings in corpus order; target iff same speaker.
TrialList MakeTrials(const Corpus &corpus);

struct ScoredTrial {
  std::string enroll;
  std::string test;
  double score = 0.0;
  bool operator==(const ScoredTrial &) const = default;
};

struct ScoreSet {
  std::vector<ScoredTrial> scores;
  bool operator==(const ScoreSet &) const = default;
};

/// Cosine similarity of the two unit embeddings.  All missing ids are listed
/// in a single error.
ScoreSet ScoreTrials(const TrialList &trials, const EmbeddingTable &table);

/// Equal error rate with "accept iff score >= t".  Thresholds sweep the
/// sorted unique scores; between the last ROC point with FRR < FAR and the
/// first with FRR >= FAR the crossing is linearly interpolated.
double ComputeEer(std::span<const double> target_scores,
                  std::span<const double> nontarget_scores);
/// `scores` must be aligned with `trials` entry by entry.
double ComputeEer(const ScoreSet &scores, const TrialList &trials);

/// Per-trial unweighted mean of aligned score sets.  The result does not
/// depend on the order of the inputs, and averaging identical sets returns
/// them unchanged.
ScoreSet Fuse(const std::vector<ScoreSet> &sets);

struct ProbeConfig {
  std::size_t hidden = 32;
  std::size_t epochs = 300;
  double lr = 0.01;
  double train_fraction = 0.7;
  std::uint64_t seed = 1;
  bool operator==(const ProbeConfig &) const = default;
};

/// Trains a fresh one-hidden-layer ELU classifier to tell source rows from
/// target rows (features z-scored on the training split, stratified split)
/// and returns held-out accuracy.
double DomainProbe(const Tensor &source, const Tensor &target,
                   const ProbeConfig &config);

// Text formats.
//   trials:      enroll<TAB>test<TAB>target|nontarget
//   scores:      "# polarity=similarity" header, then enroll<TAB>test<TAB>score
//   embeddings:  id<TAB>v1,v2,...,vd
std::string TrialsToText(const TrialList &trials);
TrialList TrialsFromText(const std::string &text, const std::string &source);
std::string ScoresToText(const ScoreSet &scores);
ScoreSet ScoresFromText(const std::string &text, const std::string &source);
std::string EmbeddingsToText(const EmbeddingTable &table);
EmbeddingTable EmbeddingsFromText(const std::string &text,
                                  const std::string &source);

void WriteTextFile(const std::string &path, const std::string &text);
std::string ReadTextFile(const std::string &path);

}  // namespace asem

#endif  // ASEM_EVAL_H_
