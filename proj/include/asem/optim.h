// asem/optim.h

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

#ifndef ASEM_OPTIM_H_
#define ASEM_OPTIM_H_

#include "asem/tensor.h"

namespace asem {

enum class OptimizerKind { kSgd, kRmsprop };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgd;
  double lr = 0.001;
  double rho = 0.9;    // RMSprop decay
  double eps = 1e-8;   // RMSprop denominator floor
};

/// Plain (non-centered) RMSprop or vanilla SGD.
///
///   SGD:      p <- p - lr * g
///   RMSprop:  v <- rho * v + (1 - rho) * g^2
///             p <- p - lr * g / (sqrt(v) + eps)
///
/// The RMSprop accumulator is created at zero on first sight of a parameter.
/// Parameters are visited in sorted name order.
class Optimizer {
 public:
  Optimizer() = default;
  explicit Optimizer(OptimizerConfig config);

  /// Updates every entry of `params`; each must have a same-shaped gradient.
  /// Throws a numeric error naming the parameter on a non-finite update, in
  /// which case `params` is left untouched.
  void Step(TensorMap &params, const TensorMap &grads);

  const OptimizerConfig &config() const { return config_; }
  const TensorMap &second_moment() const { return second_moment_; }

 private:
  OptimizerConfig config_;
  TensorMap second_moment_;
};

}  // namespace asem

#endif  // ASEM_OPTIM_H_
