// asem/losses.h

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

#ifndef ASEM_LOSSES_H_
#define ASEM_LOSSES_H_

// Task and adversarial objectives.  Discriminator scores are raw
// (pre-activation); "source" is the discriminator's positive label.
//
//            discriminator                      generator (E)
//   SGAN     -E log s(r_s) - E log(1 - s(r_t))   -E log s(r_t)
//   LSGAN    1/2 E (r_s - 1)^2 + 1/2 E r_t^2     1/2 E (r_t - 1)^2
//   RELGAN   -E log s(r_s - r_t)  (paired)       -E log s(r_t - r_s)
//   GRADREV  same as SGAN                        -(SGAN discriminator loss)

#include <optional>
#include <span>
#include <string>

#include "asem/autodiff.h"

namespace asem {

struct AmSoftmaxConfig {
  double s = 30.0;
  double m = 0.6;
  bool operator==(const AmSoftmaxConfig &) const = default;
};

enum class GanKind { kSgan, kLsgan, kRelgan, kGradrev };

struct GanVariant {
  GanKind kind = GanKind::kSgan;
  bool aux = false;
  bool operator==(const GanVariant &) const = default;
};

std::string GanKindName(GanKind kind);  // "sgan", "lsgan", ...
GanKind ParseGanKind(const std::string &name);
/// Display name such as "LSGAN" or "SGAN+aux".
std::string VariantName(const GanVariant &variant);

/// Mean additive-margin softmax loss over cosines [n, K]:
///   -log( e^{s(cos_y - m)} / (e^{s(cos_y - m)} + sum_{j != y} e^{s cos_j}) )
ad::Var AmSoftmaxLoss(const ad::Var &cosines, std::span<const int> labels,
                      const AmSoftmaxConfig &config);

/// Mean softmax cross-entropy of logits [n, K].
ad::Var SoftmaxCrossEntropy(const ad::Var &logits, std::span<const int> labels);

ad::Var DiscriminatorLoss(const ad::Var &raw_source, const ad::Var &raw_target,
                          const GanVariant &variant);

/// Loss minimized by E.  Only E should be bound as trainable when it is
/// backpropagated; the discriminator acts as a fixed function.
ad::Var GeneratorLoss(const ad::Var &raw_target, const ad::Var &raw_source,
                      const GanVariant &variant);

/// Speaker cross-entropy of D's auxiliary head on source embeddings.
ad::Var AuxClassifierLoss(const std::optional<ad::Var> &aux_logits,
                          std::span<const int> labels);

}  // namespace asem

#endif  // ASEM_LOSSES_H_
