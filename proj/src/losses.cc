// src/losses.cc

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

#include "asem/losses.h"

#include <cctype>

#include "asem/error.h"

namespace asem {

using ad::Var;

std::string GanKindName(GanKind kind) {
  switch (kind) {
    case GanKind::kSgan: return "sgan";
    case GanKind::kLsgan: return "lsgan";
    case GanKind::kRelgan: return "relgan";
    case GanKind::kGradrev: return "gradrev";
  }
  return "?";
}

GanKind ParseGanKind(const std::string &name) {
  if (name == "sgan") return GanKind::kSgan;
  if (name == "lsgan") return GanKind::kLsgan;
  if (name == "relgan") return GanKind::kRelgan;
  if (name == "gradrev") return GanKind::kGradrev;
  Fail(ErrorKind::kUsage, "unknown GAN variant '", name,
       "' (expected sgan|lsgan|relgan|gradrev)");
}

std::string VariantName(const GanVariant &variant) {
  std::string name = GanKindName(variant.kind);
  for (char &c : name) c = static_cast<char>(std::toupper(c));
  return variant.aux ? name + "+aux" : name;
}

namespace {

// One-hot [n, K] mask of the labels.
Tensor OneHot(std::span<const int> labels, std::size_t n, std::size_t k,
              const char *op) {
  if (labels.size() != n)
    Fail(ErrorKind::kShape, op, ": ", labels.size(), " labels for ", n, " rows");
  Tensor mask({n, k});
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k)
      Fail(ErrorKind::kData, op, ": label ", labels[i], " out of range [0, ", k, ")");
    mask.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return mask;
}

void RequireMatrix(const char *op, const Var &x) {
  if (!x.defined() || x.value().rank() != 2)
    Fail(ErrorKind::kShape, op, ": expected [n, K] input");
  if (x.shape()[1] < 2)
    Fail(ErrorKind::kShape, op, ": need K >= 2 classes, got ", x.shape()[1]);
}

void RequireScores(const Var &raw_source, const Var &raw_target) {
  if (!raw_source.defined() || !raw_target.defined())
    Fail(ErrorKind::kShape, "adversarial loss: missing score batch");
  if (raw_source.value().rank() != 1 || raw_target.value().rank() != 1)
    Fail(ErrorKind::kShape, "adversarial loss: scores must be rank-1, got ",
         ShapeString(raw_source.shape()), " and ", ShapeString(raw_target.shape()));
}

void RequirePaired(const Var &a, const Var &b) {
  if (a.shape() != b.shape())
    Fail(ErrorKind::kShape, "relgan loss: paired batches must have equal size, got ",
         a.shape()[0], " and ", b.shape()[0]);
}

// Cross-entropy of already-scaled logits z [n, K] against a one-hot mask.
Var CrossEntropyFromLogits(const Var &z, const Tensor &mask) {
  Var lse = ad::LogSumExp(z, 1);
  Var target = ad::SumAxis(ad::Mul(z, ad::Constant(mask)), 1);
  return ad::Mean(ad::Sub(lse, target));
}

}  // namespace

Var AmSoftmaxLoss(const Var &cosines, std::span<const int> labels,
                  const AmSoftmaxConfig &config) {
  RequireMatrix("am_softmax_loss", cosines);
  if (!(config.s > 0.0)) Fail(ErrorKind::kUsage, "am_softmax_loss: s must be > 0");
  if (!(config.m >= 0.0 && config.m < 1.0))
    Fail(ErrorKind::kUsage, "am_softmax_loss: m must lie in [0, 1)");
  const std::size_t n = cosines.shape()[0], k = cosines.shape()[1];
  Tensor mask = OneHot(labels, n, k, "am_softmax_loss");
  Tensor margin = mask;
  for (double &v : margin.data()) v *= -config.m;
  Var z = ad::Scale(ad::Add(cosines, ad::Constant(std::move(margin))), config.s);
  return CrossEntropyFromLogits(z, mask);
}

Var SoftmaxCrossEntropy(const Var &logits, std::span<const int> labels) {
  RequireMatrix("softmax_cross_entropy", logits);
  Tensor mask = OneHot(labels, logits.shape()[0], logits.shape()[1],
                       "softmax_cross_entropy");
  return CrossEntropyFromLogits(logits, mask);
}

Var DiscriminatorLoss(const Var &raw_source, const Var &raw_target,
                      const GanVariant &variant) {
  RequireScores(raw_source, raw_target);
  switch (variant.kind) {
    case GanKind::kSgan:
    case GanKind::kGradrev:
      // log(1 - sigmoid(r)) == log sigmoid(-r)
      return ad::Neg(ad::Add(ad::Mean(ad::LogSigmoid(raw_source)),
                             ad::Mean(ad::LogSigmoid(ad::Neg(raw_target)))));
    case GanKind::kLsgan:
      return ad::Add(
          ad::Scale(ad::Mean(ad::Square(ad::AddScalar(raw_source, -1.0))), 0.5),
          ad::Scale(ad::Mean(ad::Square(raw_target)), 0.5));
    case GanKind::kRelgan:
      RequirePaired(raw_source, raw_target);
      return ad::Neg(ad::Mean(ad::LogSigmoid(ad::Sub(raw_source, raw_target))));
  }
  Fail(ErrorKind::kUsage, "unknown GAN variant");
}

Var GeneratorLoss(const Var &raw_target, const Var &raw_source,
                  const GanVariant &variant) {
  switch (variant.kind) {
    case GanKind::kSgan:
      if (!raw_target.defined() || raw_target.value().rank() != 1)
        Fail(ErrorKind::kShape, "generator loss: target scores must be rank-1");
      return ad::Neg(ad::Mean(ad::LogSigmoid(raw_target)));
    case GanKind::kLsgan:
      if (!raw_target.defined() || raw_target.value().rank() != 1)
        Fail(ErrorKind::kShape, "generator loss: target scores must be rank-1");
      return ad::Scale(ad::Mean(ad::Square(ad::AddScalar(raw_target, -1.0))), 0.5);
    case GanKind::kRelgan:
      RequireScores(raw_source, raw_target);
      RequirePaired(raw_source, raw_target);
      return ad::Neg(ad::Mean(ad::LogSigmoid(ad::Sub(raw_target, raw_source))));
    case GanKind::kGradrev:
      return ad::Neg(DiscriminatorLoss(raw_source, raw_target, variant));
  }
  Fail(ErrorKind::kUsage, "unknown GAN variant");
}

Var AuxClassifierLoss(const std::optional<Var> &aux_logits,
                      std::span<const int> labels) {
  if (!aux_logits)
    Fail(ErrorKind::kState, "aux_classifier_loss: discriminator has no aux head");
  return SoftmaxCrossEntropy(*aux_logits, labels);
}

}  // namespace asem
