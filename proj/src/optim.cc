// src/optim.cc

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

#include "asem/optim.h"

#include <cmath>

#include "asem/error.h"

namespace asem {

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
  if (!(config_.lr >= 0.0) || !std::isfinite(config_.lr))
    Fail(ErrorKind::kUsage, "optimizer learning rate must be >= 0, got ",
         config_.lr);
  if (config_.kind == OptimizerKind::kRmsprop &&
      !(config_.rho > 0.0 && config_.rho < 1.0 && config_.eps > 0.0))
    Fail(ErrorKind::kUsage, "RMSprop needs rho in (0,1) and eps > 0");
}

void Optimizer::Step(TensorMap &params, const TensorMap &grads) {
  // Compute everything first so a failure leaves params unchanged.
  TensorMap new_params, new_moment;
  for (const auto &[name, p] : params) {
    auto it = grads.find(name);
    if (it == grads.end())
      Fail(ErrorKind::kState, "optimizer: missing gradient for parameter ",
           name);
    const Tensor &g = it->second;
    if (g.shape() != p.shape())
      Fail(ErrorKind::kShape, "optimizer: gradient for ", name, " has shape ",
           ShapeString(g.shape()), ", parameter has ", ShapeString(p.shape()));
    Tensor updated = p;
    if (config_.kind == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < p.size(); ++i) updated[i] -= config_.lr * g[i];
    } else {
      auto mit = second_moment_.find(name);
      Tensor v = mit != second_moment_.end() ? mit->second : Tensor(p.shape());
      for (std::size_t i = 0; i < p.size(); ++i) {
        v[i] = config_.rho * v[i] + (1.0 - config_.rho) * g[i] * g[i];
        updated[i] -= config_.lr * g[i] / (std::sqrt(v[i]) + config_.eps);
      }
      new_moment.emplace(name, std::move(v));
    }
    if (!updated.AllFinite())
      Fail(ErrorKind::kNumeric, "optimizer: non-finite update for parameter ",
           name);
    new_params.emplace(name, std::move(updated));
  }
  for (auto &[name, t] : new_params) params[name] = std::move(t);
  for (auto &[name, t] : new_moment) second_moment_[name] = std::move(t);
}

}  // namespace asem
