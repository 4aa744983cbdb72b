// src/autodiff.cc

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

#include "asem/autodiff.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "asem/error.h"

namespace asem {
namespace ad {

namespace {

// Splits a shape around `axis` into (outer, extent, inner) so that element
// (o, k, i) lives at (o * extent + k) * inner + i.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit SplitAt(const Shape &shape, std::size_t axis, const char *op) {
  if (axis >= shape.size())
    Fail(ErrorKind::kShape, op, ": axis ", axis, " out of range for shape ",
         ShapeString(shape));
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Shape DropAxis(const Shape &shape, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i)
    if (i != axis) out.push_back(shape[i]);
  return out;
}

void RequireSameShape(const char *op, const Var &a, const Var &b) {
  if (a.shape() != b.shape())
    Fail(ErrorKind::kShape, op, ": shape mismatch ", ShapeString(a.shape()),
         " vs ", ShapeString(b.shape()));
}

void RequireDefined(const char *op, const Var &v) {
  if (!v.defined()) Fail(ErrorKind::kState, op, ": undefined input");
}

// Makes the output node; checks the forward value for NaN/Inf.
Var MakeNode(const char *op, Tensor value, std::vector<Var> inputs,
             std::function<void(Node &)> backward) {
  if (!value.AllFinite())
    Fail(ErrorKind::kNumeric, op, ": non-finite value in forward result");
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = op;
  bool needs = false;
  for (const Var &v : inputs) {
    needs = needs || v.requires_grad();
    node->parents.push_back(v.node());
  }
  node->requires_grad = needs;
  if (needs) node->backward = std::move(backward);
  else node->parents.clear();
  return Var(std::move(node));
}

// Gradient buffer of parent i, or nullptr when it is not tracked.
Tensor *ParentGrad(Node &self, std::size_t i) {
  Node &p = *self.parents[i];
  return p.requires_grad ? &p.grad : nullptr;
}

const Tensor &ParentValue(const Node &self, std::size_t i) {
  return self.parents[i]->value;
}

// Elementwise unary op given f(x) and f'(x, y).
template <typename F, typename DF>
Var Unary(const char *op, const Var &x, F f, DF df) {
  RequireDefined(op, x);
  Tensor out(x.shape());
  const Tensor &in = x.value();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return MakeNode(op, std::move(out), {x}, [df](Node &self) {
    Tensor *gx = ParentGrad(self, 0);
    if (!gx) return;
    const Tensor &in = ParentValue(self, 0);
    for (std::size_t i = 0; i < in.size(); ++i)
      (*gx)[i] += self.grad[i] * df(in[i], self.value[i]);
  });
}

}  // namespace

const Tensor &Var::value() const {
  if (!node_) Fail(ErrorKind::kState, "value() on an undefined Var");
  return node_->value;
}

const Tensor &Var::grad() const {
  if (!node_) Fail(ErrorKind::kState, "grad() on an undefined Var");
  if (node_->grad.size() != node_->value.size() ||
      node_->grad.shape() != node_->value.shape())
    node_->grad = Tensor(node_->value.shape());
  return node_->grad;
}

bool Var::requires_grad() const { return node_ && node_->requires_grad; }

Var Constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = "constant";
  return Var(std::move(node));
}

Var Parameter(Tensor value) {
  auto node = std::make_shared<Node>();
  node->grad = Tensor(value.shape());
  node->value = std::move(value);
  node->requires_grad = true;
  node->op = "parameter";
  return Var(std::move(node));
}

Var Detach(const Var &x) { return Constant(x.value()); }

void Backward(const Var &root) {
  if (!root.defined()) Fail(ErrorKind::kState, "Backward: undefined root");
  if (root.value().size() != 1)
    Fail(ErrorKind::kState, "Backward: root must be scalar, shape is ",
         ShapeString(root.shape()));
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node *> order;
  std::unordered_set<Node *> seen;
  std::vector<std::pair<Node *, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto &[node, next] = stack.back();
    if (next < node->parents.size()) {
      Node *p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node *n : order) {
    if (n->grad.size() != n->value.size() || n->grad.shape() != n->value.shape())
      n->grad = Tensor(n->value.shape());
    else n->grad.Fill(0.0);
  }
  root.node()->grad.Fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node *n = *it;
    if (n->backward) n->backward(*n);
  }
}

VarMap Bind(const TensorMap &tensors, bool trainable) {
  VarMap out;
  for (const auto &[name, t] : tensors)
    out.emplace(name, trainable ? Parameter(t) : Constant(t));
  return out;
}

TensorMap Gradients(const VarMap &vars) {
  TensorMap out;
  for (const auto &[name, v] : vars) out.emplace(name, v.grad());
  return out;
}

Var Add(const Var &a, const Var &b) {
  RequireDefined("add", a);
  RequireDefined("add", b);
  RequireSameShape("add", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.value()[i] + b.value()[i];
  return MakeNode("add", std::move(out), {a, b}, [](Node &self) {
    for (std::size_t p = 0; p < 2; ++p)
      if (Tensor *g = ParentGrad(self, p))
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

Var Sub(const Var &a, const Var &b) {
  RequireDefined("sub", a);
  RequireDefined("sub", b);
  RequireSameShape("sub", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.value()[i] - b.value()[i];
  return MakeNode("sub", std::move(out), {a, b}, [](Node &self) {
    if (Tensor *g = ParentGrad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    if (Tensor *g = ParentGrad(self, 1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= self.grad[i];
  });
}

Var Mul(const Var &a, const Var &b) {
  RequireDefined("mul", a);
  RequireDefined("mul", b);
  RequireSameShape("mul", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.value()[i] * b.value()[i];
  return MakeNode("mul", std::move(out), {a, b}, [](Node &self) {
    const Tensor &av = ParentValue(self, 0), &bv = ParentValue(self, 1);
    if (Tensor *g = ParentGrad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i)
        (*g)[i] += self.grad[i] * bv[i];
    if (Tensor *g = ParentGrad(self, 1))
      for (std::size_t i = 0; i < g->size(); ++i)
        (*g)[i] += self.grad[i] * av[i];
  });
}

Var Scale(const Var &a, double c) {
  return Unary(
      "scale", a, [c](double x) { return c * x; },
      [c](double, double) { return c; });
}

Var AddScalar(const Var &a, double c) {
  return Unary(
      "add_scalar", a, [c](double x) { return x + c; },
      [](double, double) { return 1.0; });
}

Var Neg(const Var &a) {
  return Unary(
      "neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var MatMul(const Var &a, const Var &b) {
  RequireDefined("matmul", a);
  RequireDefined("matmul", b);
  if (a.value().rank() != 2 || b.value().rank() != 2 ||
      a.shape()[1] != b.shape()[0])
    Fail(ErrorKind::kShape, "matmul: shape mismatch ", ShapeString(a.shape()),
         " x ", ShapeString(b.shape()));
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tensor out({m, n});
  const double *A = a.value().data().data(), *B = b.value().data().data();
  double *C = out.data().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      const double *brow = B + p * n;
      double *crow = C + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  return MakeNode("matmul", std::move(out), {a, b}, [m, k, n](Node &self) {
    const double *G = self.grad.data().data();
    if (Tensor *ga = ParentGrad(self, 0)) {
      // dA = G * B^T
      const double *B = ParentValue(self, 1).data().data();
      double *dA = ga->data().data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double *grow = G + i * n, *brow = B + p * n;
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
          dA[i * k + p] += s;
        }
    }
    if (Tensor *gb = ParentGrad(self, 1)) {
      // dB = A^T * G
      const double *A = ParentValue(self, 0).data().data();
      double *dB = gb->data().data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A[i * k + p];
          if (aip == 0.0) continue;
          const double *grow = G + i * n;
          double *drow = dB + p * n;
          for (std::size_t j = 0; j < n; ++j) drow[j] += aip * grow[j];
        }
    }
  });
}

Var AddBias(const Var &x, const Var &bias) {
  RequireDefined("add_bias", x);
  RequireDefined("add_bias", bias);
  if (x.value().rank() == 0 || bias.value().rank() != 1 ||
      bias.shape()[0] != x.shape().back())
    Fail(ErrorKind::kShape, "add_bias: shape mismatch ", ShapeString(x.shape()),
         " + ", ShapeString(bias.shape()));
  const std::size_t n = bias.shape()[0];
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bias.value()[i % n];
  return MakeNode("add_bias", std::move(out), {x, bias}, [n](Node &self) {
    if (Tensor *g = ParentGrad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    if (Tensor *g = ParentGrad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        (*g)[i % n] += self.grad[i];
  });
}

Var Elu(const Var &x) {
  return Unary(
      "elu", x, [](double v) { return v > 0.0 ? v : std::expm1(v); },
      [](double v, double y) { return v > 0.0 ? 1.0 : y + 1.0; });
}

Var Sigmoid(const Var &x) {
  return Unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var LogSigmoid(const Var &x) {
  return Unary(
      "log_sigmoid", x,
      [](double v) { return std::min(v, 0.0) - std::log1p(std::exp(-std::fabs(v))); },
      [](double v, double) {
        // d/dv log sigmoid(v) = sigmoid(-v)
        if (v <= 0.0) return 1.0 / (1.0 + std::exp(v));
        double e = std::exp(-v);
        return e / (1.0 + e);
      });
}

Var Exp(const Var &x) {
  return Unary(
      "exp", x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Var Log(const Var &x) {
  return Unary(
      "log", x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Var Square(const Var &x) {
  return Unary(
      "square", x, [](double v) { return v * v; },
      [](double v, double) { return 2.0 * v; });
}

Var Sqrt(const Var &x) {
  return Unary(
      "sqrt", x, [](double v) { return std::sqrt(v); },
      [](double, double y) { return 0.5 / y; });
}

Var Sum(const Var &x) {
  RequireDefined("sum", x);
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return MakeNode("sum", Tensor::Scalar(s), {x}, [](Node &self) {
    if (Tensor *g = ParentGrad(self, 0)) {
      const double gs = self.grad[0];
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += gs;
    }
  });
}

Var Mean(const Var &x) {
  RequireDefined("mean", x);
  return Scale(Sum(x), 1.0 / static_cast<double>(x.value().size()));
}

Var SumAxis(const Var &x, std::size_t axis) {
  RequireDefined("sum_axis", x);
  const AxisSplit s = SplitAt(x.shape(), axis, "sum_axis");
  Tensor out(DropAxis(x.shape(), axis));
  const Tensor &in = x.value();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t k = 0; k < s.extent; ++k)
      for (std::size_t i = 0; i < s.inner; ++i)
        out[o * s.inner + i] += in[(o * s.extent + k) * s.inner + i];
  return MakeNode("sum_axis", std::move(out), {x}, [s](Node &self) {
    Tensor *g = ParentGrad(self, 0);
    if (!g) return;
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t k = 0; k < s.extent; ++k)
        for (std::size_t i = 0; i < s.inner; ++i)
          (*g)[(o * s.extent + k) * s.inner + i] += self.grad[o * s.inner + i];
  });
}

Var MeanAxis(const Var &x, std::size_t axis) {
  const AxisSplit s = SplitAt(x.shape(), axis, "mean_axis");
  return Scale(SumAxis(x, axis), 1.0 / static_cast<double>(s.extent));
}

Var VarianceAxis(const Var &x, std::size_t axis) {
  RequireDefined("variance_axis", x);
  const AxisSplit s = SplitAt(x.shape(), axis, "variance_axis");
  const double n = static_cast<double>(s.extent);
  const Tensor &in = x.value();
  Tensor mean(DropAxis(x.shape(), axis));
  Tensor out(mean.shape());
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.inner; ++i) {
      double m = 0.0;
      for (std::size_t k = 0; k < s.extent; ++k)
        m += in[(o * s.extent + k) * s.inner + i];
      m /= n;
      double v = 0.0;
      for (std::size_t k = 0; k < s.extent; ++k) {
        double d = in[(o * s.extent + k) * s.inner + i] - m;
        v += d * d;
      }
      mean[o * s.inner + i] = m;
      out[o * s.inner + i] = v / n;
    }
  return MakeNode("variance_axis", std::move(out), {x},
                  [s, n, mean = std::move(mean)](Node &self) {
                    Tensor *g = ParentGrad(self, 0);
                    if (!g) return;
                    const Tensor &in = ParentValue(self, 0);
                    for (std::size_t o = 0; o < s.outer; ++o)
                      for (std::size_t k = 0; k < s.extent; ++k)
                        for (std::size_t i = 0; i < s.inner; ++i) {
                          std::size_t idx = (o * s.extent + k) * s.inner + i;
                          std::size_t r = o * s.inner + i;
                          (*g)[idx] +=
                              self.grad[r] * 2.0 * (in[idx] - mean[r]) / n;
                        }
                  });
}

Var Softmax(const Var &x, std::size_t axis) {
  RequireDefined("softmax", x);
  const AxisSplit s = SplitAt(x.shape(), axis, "softmax");
  const Tensor &in = x.value();
  Tensor out(x.shape());
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.inner; ++i) {
      auto at = [&](std::size_t k) { return (o * s.extent + k) * s.inner + i; };
      double mx = in[at(0)];
      for (std::size_t k = 1; k < s.extent; ++k) mx = std::max(mx, in[at(k)]);
      double z = 0.0;
      for (std::size_t k = 0; k < s.extent; ++k) {
        out[at(k)] = std::exp(in[at(k)] - mx);
        z += out[at(k)];
      }
      for (std::size_t k = 0; k < s.extent; ++k) out[at(k)] /= z;
    }
  return MakeNode("softmax", std::move(out), {x}, [s](Node &self) {
    Tensor *g = ParentGrad(self, 0);
    if (!g) return;
    const Tensor &y = self.value;
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t i = 0; i < s.inner; ++i) {
        auto at = [&](std::size_t k) { return (o * s.extent + k) * s.inner + i; };
        double dot = 0.0;
        for (std::size_t k = 0; k < s.extent; ++k)
          dot += self.grad[at(k)] * y[at(k)];
        for (std::size_t k = 0; k < s.extent; ++k)
          (*g)[at(k)] += y[at(k)] * (self.grad[at(k)] - dot);
      }
  });
}

Var LogSumExp(const Var &x, std::size_t axis) {
  RequireDefined("log_sum_exp", x);
  const AxisSplit s = SplitAt(x.shape(), axis, "log_sum_exp");
  const Tensor &in = x.value();
  Tensor out(DropAxis(x.shape(), axis));
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.inner; ++i) {
      auto at = [&](std::size_t k) { return (o * s.extent + k) * s.inner + i; };
      double mx = in[at(0)];
      for (std::size_t k = 1; k < s.extent; ++k) mx = std::max(mx, in[at(k)]);
      double z = 0.0;
      for (std::size_t k = 0; k < s.extent; ++k) z += std::exp(in[at(k)] - mx);
      out[o * s.inner + i] = mx + std::log(z);
    }
  return MakeNode("log_sum_exp", std::move(out), {x}, [s](Node &self) {
    Tensor *g = ParentGrad(self, 0);
    if (!g) return;
    const Tensor &in = ParentValue(self, 0);
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t r = o * s.inner + i;
        for (std::size_t k = 0; k < s.extent; ++k) {
          const std::size_t idx = (o * s.extent + k) * s.inner + i;
          (*g)[idx] += self.grad[r] * std::exp(in[idx] - self.value[r]);
        }
      }
  });
}

Var L2Normalize(const Var &x, std::size_t axis) {
  RequireDefined("l2_normalize", x);
  const AxisSplit s = SplitAt(x.shape(), axis, "l2_normalize");
  const Tensor &in = x.value();
  Tensor out(x.shape());
  Tensor norms(DropAxis(x.shape(), axis));
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.inner; ++i) {
      auto at = [&](std::size_t k) { return (o * s.extent + k) * s.inner + i; };
      double ss = 0.0;
      for (std::size_t k = 0; k < s.extent; ++k) ss += in[at(k)] * in[at(k)];
      const double norm = std::sqrt(ss);
      if (!(norm > 0.0))
        Fail(ErrorKind::kNumeric, "l2_normalize: zero-norm slice");
      norms[o * s.inner + i] = norm;
      for (std::size_t k = 0; k < s.extent; ++k) out[at(k)] = in[at(k)] / norm;
    }
  return MakeNode("l2_normalize", std::move(out), {x},
                  [s, norms = std::move(norms)](Node &self) {
                    Tensor *g = ParentGrad(self, 0);
                    if (!g) return;
                    const Tensor &y = self.value;
                    for (std::size_t o = 0; o < s.outer; ++o)
                      for (std::size_t i = 0; i < s.inner; ++i) {
                        auto at = [&](std::size_t k) {
                          return (o * s.extent + k) * s.inner + i;
                        };
                        double dot = 0.0;
                        for (std::size_t k = 0; k < s.extent; ++k)
                          dot += self.grad[at(k)] * y[at(k)];
                        const double inv = 1.0 / norms[o * s.inner + i];
                        for (std::size_t k = 0; k < s.extent; ++k)
                          (*g)[at(k)] +=
                              (self.grad[at(k)] - y[at(k)] * dot) * inv;
                      }
                  });
}

Var Reshape(const Var &x, Shape shape) {
  RequireDefined("reshape", x);
  Tensor out = x.value().Reshaped(std::move(shape));
  return MakeNode("reshape", std::move(out), {x}, [](Node &self) {
    if (Tensor *g = ParentGrad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

Var Concat(const std::vector<Var> &parts, std::size_t axis) {
  if (parts.empty()) Fail(ErrorKind::kShape, "concat: no inputs");
  for (const Var &p : parts) RequireDefined("concat", p);
  const Shape &first = parts[0].shape();
  SplitAt(first, axis, "concat");
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> extents;
  for (const Var &p : parts) {
    Shape a = p.shape(), b = first;
    if (a.size() != b.size())
      Fail(ErrorKind::kShape, "concat: shape mismatch ", ShapeString(a), " vs ",
           ShapeString(b));
    a[axis] = b[axis] = 0;
    if (a != b)
      Fail(ErrorKind::kShape, "concat: shape mismatch ",
           ShapeString(p.shape()), " vs ", ShapeString(first));
    extents.push_back(p.shape()[axis]);
    out_shape[axis] += p.shape()[axis];
  }
  const AxisSplit s = SplitAt(out_shape, axis, "concat");
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const Tensor &in = parts[pi].value();
    const std::size_t e = extents[pi];
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t k = 0; k < e; ++k)
        for (std::size_t i = 0; i < s.inner; ++i)
          out[(o * s.extent + offset + k) * s.inner + i] =
              in[(o * e + k) * s.inner + i];
    offset += e;
  }
  return MakeNode("concat", std::move(out), parts, [s, extents](Node &self) {
    std::size_t offset = 0;
    for (std::size_t pi = 0; pi < extents.size(); ++pi) {
      const std::size_t e = extents[pi];
      if (Tensor *g = ParentGrad(self, pi))
        for (std::size_t o = 0; o < s.outer; ++o)
          for (std::size_t k = 0; k < e; ++k)
            for (std::size_t i = 0; i < s.inner; ++i)
              (*g)[(o * e + k) * s.inner + i] +=
                  self.grad[(o * s.extent + offset + k) * s.inner + i];
      offset += e;
    }
  });
}

Var SliceRows(const Var &x, std::size_t begin, std::size_t end) {
  RequireDefined("slice_rows", x);
  if (x.value().rank() == 0 || begin >= end || end > x.shape()[0])
    Fail(ErrorKind::kShape, "slice_rows: rows [", begin, ", ", end,
         ") out of range for shape ", ShapeString(x.shape()));
  Shape shape = x.shape();
  const std::size_t row = x.value().size() / shape[0];
  shape[0] = end - begin;
  std::vector<double> data(x.value().data().begin() + begin * row,
                           x.value().data().begin() + end * row);
  return MakeNode("slice_rows", Tensor(shape, std::move(data)), {x},
                  [begin, row](Node &self) {
                    if (Tensor *g = ParentGrad(self, 0))
                      for (std::size_t i = 0; i < self.grad.size(); ++i)
                        (*g)[begin * row + i] += self.grad[i];
                  });
}

Var ExpandLast(const Var &x, std::size_t n) {
  RequireDefined("expand_last", x);
  if (n == 0) Fail(ErrorKind::kShape, "expand_last: zero extent");
  Shape shape = x.shape();
  shape.push_back(n);
  Tensor out(shape);
  const Tensor &in = x.value();
  for (std::size_t i = 0; i < in.size(); ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = in[i];
  return MakeNode("expand_last", std::move(out), {x}, [n](Node &self) {
    Tensor *g = ParentGrad(self, 0);
    if (!g) return;
    for (std::size_t i = 0; i < g->size(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += self.grad[i * n + j];
      (*g)[i] += s;
    }
  });
}

namespace {

void CheckBatchNormShapes(const char *op, const Var &x, const Var &gamma,
                          const Var &beta) {
  RequireDefined(op, x);
  RequireDefined(op, gamma);
  RequireDefined(op, beta);
  if (x.value().rank() != 2 || gamma.shape() != Shape{x.shape()[1]} ||
      beta.shape() != gamma.shape())
    Fail(ErrorKind::kShape, op, ": shape mismatch ", ShapeString(x.shape()),
         " with gamma ", ShapeString(gamma.shape()), " beta ",
         ShapeString(beta.shape()));
}

}  // namespace

Var BatchNormTrain(const Var &x, const Var &gamma, const Var &beta, double eps,
                   Tensor *batch_mean, Tensor *batch_var) {
  CheckBatchNormShapes("batch_norm_train", x, gamma, beta);
  const std::size_t n = x.shape()[0], f = x.shape()[1];
  const Tensor &in = x.value();
  Tensor mean({f}), var({f}), inv_std({f});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) mean[c] += in[r * f + c];
  for (std::size_t c = 0; c < f; ++c) mean[c] /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) {
      double d = in[r * f + c] - mean[c];
      var[c] += d * d;
    }
  for (std::size_t c = 0; c < f; ++c) {
    var[c] /= static_cast<double>(n);
    inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
  }
  Tensor xhat({n, f}), out({n, f});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) {
      const std::size_t i = r * f + c;
      xhat[i] = (in[i] - mean[c]) * inv_std[c];
      out[i] = gamma.value()[c] * xhat[i] + beta.value()[c];
    }
  if (batch_mean) *batch_mean = mean;
  if (batch_var) *batch_var = var;
  return MakeNode(
      "batch_norm_train", std::move(out), {x, gamma, beta},
      [n, f, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node &self) {
        const Tensor &g = self.grad;
        const Tensor &gam = ParentValue(self, 1);
        std::vector<double> sum_g(f, 0.0), sum_gx(f, 0.0);
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t c = 0; c < f; ++c) {
            sum_g[c] += g[r * f + c];
            sum_gx[c] += g[r * f + c] * xhat[r * f + c];
          }
        if (Tensor *gx = ParentGrad(self, 0)) {
          const double nn = static_cast<double>(n);
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < f; ++c) {
              const std::size_t i = r * f + c;
              (*gx)[i] += gam[c] * inv_std[c] *
                          (g[i] - sum_g[c] / nn - xhat[i] * sum_gx[c] / nn);
            }
        }
        if (Tensor *gg = ParentGrad(self, 1))
          for (std::size_t c = 0; c < f; ++c) (*gg)[c] += sum_gx[c];
        if (Tensor *gb = ParentGrad(self, 2))
          for (std::size_t c = 0; c < f; ++c) (*gb)[c] += sum_g[c];
      });
}

Var BatchNormInfer(const Var &x, const Var &gamma, const Var &beta,
                   const Tensor &running_mean, const Tensor &running_var,
                   double eps) {
  CheckBatchNormShapes("batch_norm_infer", x, gamma, beta);
  const std::size_t n = x.shape()[0], f = x.shape()[1];
  if (running_mean.shape() != Shape{f} || running_var.shape() != Shape{f})
    Fail(ErrorKind::kShape, "batch_norm_infer: running statistics shape ",
         ShapeString(running_mean.shape()), " for ", f, " features");
  const Tensor &in = x.value();
  Tensor inv_std({f}), xhat({n, f}), out({n, f});
  for (std::size_t c = 0; c < f; ++c)
    inv_std[c] = 1.0 / std::sqrt(running_var[c] + eps);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) {
      const std::size_t i = r * f + c;
      xhat[i] = (in[i] - running_mean[c]) * inv_std[c];
      out[i] = gamma.value()[c] * xhat[i] + beta.value()[c];
    }
  return MakeNode(
      "batch_norm_infer", std::move(out), {x, gamma, beta},
      [n, f, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node &self) {
        const Tensor &g = self.grad;
        const Tensor &gam = ParentValue(self, 1);
        if (Tensor *gx = ParentGrad(self, 0))
          for (std::size_t i = 0; i < n * f; ++i)
            (*gx)[i] += g[i] * gam[i % f] * inv_std[i % f];
        if (Tensor *gg = ParentGrad(self, 1))
          for (std::size_t i = 0; i < n * f; ++i) (*gg)[i % f] += g[i] * xhat[i];
        if (Tensor *gb = ParentGrad(self, 2))
          for (std::size_t i = 0; i < n * f; ++i) (*gb)[i % f] += g[i];
      });
}

}  // namespace ad
}  // namespace asem
