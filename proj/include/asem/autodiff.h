// asem/autodiff.h

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

#ifndef ASEM_AUTODIFF_H_
#define ASEM_AUTODIFF_H_

// Define-by-run reverse-mode differentiation.  Every operation computes its
// forward value immediately and records a closure that propagates gradients
// back to its inputs; Backward() replays the closures in reverse topological
// order.  Operations check shapes up front and reject non-finite results,
// naming the primitive in the error.

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "asem/tensor.h"

namespace asem {
namespace ad {

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  const char *op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads self.grad and accumulates into the grads of self.parents that
  // require them.
  std::function<void(Node &self)> backward;
};

/// Handle to a graph node.  Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Tensor &value() const;
  /// Gradient written by the last Backward() pass; zeros for a leaf that did
  /// not participate.
  const Tensor &grad() const;
  const Shape &shape() const { return value().shape(); }
  bool requires_grad() const;
  const std::shared_ptr<Node> &node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

using VarMap = std::map<std::string, Var>;

Var Constant(Tensor value);
/// Leaf whose gradient is tracked.
Var Parameter(Tensor value);
/// Same value, cut from the graph.
Var Detach(const Var &x);

/// Runs reverse accumulation from a scalar root.  Gradients of every node
/// reachable from `root` are reset before accumulation, so calling Backward
/// twice on the same graph gives the same result.
void Backward(const Var &root);

/// Wraps every tensor as a leaf; `trainable` selects Parameter vs Constant.
VarMap Bind(const TensorMap &tensors, bool trainable);
/// Collects grad() of every entry.
TensorMap Gradients(const VarMap &vars);

// Elementwise arithmetic over equal shapes.
Var Add(const Var &a, const Var &b);
Var Sub(const Var &a, const Var &b);
Var Mul(const Var &a, const Var &b);
Var Scale(const Var &a, double c);
Var AddScalar(const Var &a, double c);
Var Neg(const Var &a);

inline Var operator+(const Var &a, const Var &b) { return Add(a, b); }
inline Var operator-(const Var &a, const Var &b) { return Sub(a, b); }
inline Var operator*(const Var &a, const Var &b) { return Mul(a, b); }
inline Var operator*(double c, const Var &a) { return Scale(a, c); }
inline Var operator-(const Var &a) { return Neg(a); }

/// [m, k] x [k, n] -> [m, n].
Var MatMul(const Var &a, const Var &b);
/// Adds a rank-1 bias along the last axis of x.
Var AddBias(const Var &x, const Var &bias);

Var Elu(const Var &x);  // alpha = 1
Var Sigmoid(const Var &x);
/// log(sigmoid(x)) evaluated without overflow.
Var LogSigmoid(const Var &x);
Var Exp(const Var &x);
Var Log(const Var &x);
Var Square(const Var &x);
Var Sqrt(const Var &x);

// Reductions.  Axis reductions drop the axis from the shape.
Var Sum(const Var &x);
Var Mean(const Var &x);
Var SumAxis(const Var &x, std::size_t axis);
Var MeanAxis(const Var &x, std::size_t axis);
/// Population variance along an axis.
Var VarianceAxis(const Var &x, std::size_t axis);
/// Max-shifted log-sum-exp along an axis.
Var LogSumExp(const Var &x, std::size_t axis);
/// Max-shifted softmax; keeps the shape.
Var Softmax(const Var &x, std::size_t axis);
/// x / |x| along an axis; a zero-norm slice is a numeric error.
Var L2Normalize(const Var &x, std::size_t axis);

// Structural.
Var Reshape(const Var &x, Shape shape);
Var Concat(const std::vector<Var> &parts, std::size_t axis);
/// Rows [begin, end) along axis 0.
Var SliceRows(const Var &x, std::size_t begin, std::size_t end);
/// [..] -> [.., n], repeating each element n times.
Var ExpandLast(const Var &x, std::size_t n);

/// Batch normalization of x [N, F] with batch statistics.  The biased batch
/// mean and variance are written to the optional out-params so the caller can
/// maintain running statistics.
Var BatchNormTrain(const Var &x, const Var &gamma, const Var &beta, double eps,
                   Tensor *batch_mean = nullptr, Tensor *batch_var = nullptr);
/// Batch normalization of x [N, F] with fixed statistics.
Var BatchNormInfer(const Var &x, const Var &gamma, const Var &beta,
                   const Tensor &running_mean, const Tensor &running_var,
                   double eps);

}  // namespace ad
}  // namespace asem

#endif  // ASEM_AUTODIFF_H_
