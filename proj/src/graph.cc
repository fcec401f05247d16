// Copyright 2026 The Adaparse Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "adaparse/graph.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "adaparse/error.h"

namespace adaparse {

const Tensor &Var::value() const { return graph_->value(id_); }

Var Graph::Constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::ConstantRef(const Tensor &value) {
  Node n;
  n.ref = &value;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::Param(Parameter &param) {
  Node n;
  n.ref = &param.value;
  n.param = &param;
  n.requires_grad = record_;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::Push(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return Push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
              std::move(fn));
}

Var Graph::Push(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var &v : inputs) {
      if (&v.graph() != this) throw ModelError("variable from a different graph");
      if (nodes_[v.id()].requires_grad) n.requires_grad = true;
    }
    if (n.requires_grad) n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor &Graph::MutableGrad(int id) {
  Node &n = nodes_[id];
  return n.param != nullptr ? n.param->grad : n.grad;
}

const Tensor &Graph::GradOf(int id) const {
  const Node &n = nodes_[id];
  return n.param != nullptr ? n.param->grad : n.grad;
}

const Tensor &Graph::grad(Var v) const { return GradOf(v.id()); }

void Graph::Backward(Var loss, double scale) {
  if (!record_) throw ModelError("Backward on a graph built without gradients");
  const Tensor &lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("Backward: loss must be 1 x 1, got " + lv.ShapeString());
  }
  for (Node &n : nodes_) {
    if (!n.requires_grad) continue;
    if (n.param != nullptr) {
      n.param->touched = true;
    } else {
      const Tensor &v = n.value;
      n.grad = Tensor(v.rows(), v.cols());
    }
  }
  if (!nodes_[loss.id()].requires_grad) return;
  MutableGrad(loss.id())[0] += scale;
  for (int i = loss.id(); i >= 0; --i) {
    Node &n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this, i);
  }
}

namespace {

[[noreturn]] void ThrowShape(const char *op, const Tensor &a, const Tensor &b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.ShapeString() +
                   " and " + b.ShapeString());
}

void AccumulateInto(Graph &g, int id, const Tensor &delta, double factor = 1.0) {
  if (!g.RequiresGrad(id)) return;
  Tensor &grad = g.MutableGrad(id);
  for (std::size_t i = 0; i < delta.size(); ++i) grad[i] += factor * delta[i];
}

template <typename F, typename D>
Var Unary(Var a, F forward, D derivative) {
  Graph &g = a.graph();
  const Tensor &x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = forward(x[i]);
  const int ia = a.id();
  return g.Push(std::move(y), {a}, [ia, derivative](Graph &g, int self) {
    if (!g.RequiresGrad(ia)) return;
    const Tensor &x = g.value(ia);
    const Tensor &y = g.value(self);
    const Tensor &dy = g.GradOf(self);
    Tensor &dx = g.MutableGrad(ia);
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] += dy[i] * derivative(x[i], y[i]);
  });
}

}  // namespace

Var Add(Var a, Var b) {
  const Tensor &x = a.value();
  const Tensor &z = b.value();
  if (!x.SameShape(z)) ThrowShape("add", x, z);
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += z[i];
  const int ia = a.id(), ib = b.id();
  return a.graph().Push(std::move(y), {a, b}, [ia, ib](Graph &g, int self) {
    AccumulateInto(g, ia, g.GradOf(self));
    AccumulateInto(g, ib, g.GradOf(self));
  });
}

Var Sub(Var a, Var b) {
  const Tensor &x = a.value();
  const Tensor &z = b.value();
  if (!x.SameShape(z)) ThrowShape("sub", x, z);
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= z[i];
  const int ia = a.id(), ib = b.id();
  return a.graph().Push(std::move(y), {a, b}, [ia, ib](Graph &g, int self) {
    AccumulateInto(g, ia, g.GradOf(self));
    AccumulateInto(g, ib, g.GradOf(self), -1.0);
  });
}

Var Mul(Var a, Var b) {
  const Tensor &x = a.value();
  const Tensor &z = b.value();
  if (!x.SameShape(z)) ThrowShape("mul", x, z);
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= z[i];
  const int ia = a.id(), ib = b.id();
  return a.graph().Push(std::move(y), {a, b}, [ia, ib](Graph &g, int self) {
    const Tensor &dy = g.GradOf(self);
    if (g.RequiresGrad(ia)) {
      const Tensor &z = g.value(ib);
      Tensor &dx = g.MutableGrad(ia);
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * z[i];
    }
    if (g.RequiresGrad(ib)) {
      const Tensor &x = g.value(ia);
      Tensor &dz = g.MutableGrad(ib);
      for (std::size_t i = 0; i < dy.size(); ++i) dz[i] += dy[i] * x[i];
    }
  });
}

Var Scale(Var a, double s) { return Affine(a, s, 0.0); }

Var Affine(Var a, double scale, double shift) {
  const Tensor &x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = scale * x[i] + shift;
  const int ia = a.id();
  return a.graph().Push(std::move(y), {a}, [ia, scale](Graph &g, int self) {
    AccumulateInto(g, ia, g.GradOf(self), scale);
  });
}

Var MatMul(Var a, Var b) {
  const Tensor &x = a.value();
  const Tensor &z = b.value();
  if (x.cols() != z.rows()) ThrowShape("matmul", x, z);
  const int m = x.rows(), k = x.cols(), n = z.cols();
  Tensor y(m, n);
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double xv = x.at(i, p);
      if (xv == 0.0) continue;
      for (int j = 0; j < n; ++j) y.at(i, j) += xv * z.at(p, j);
    }
  }
  const int ia = a.id(), ib = b.id();
  return a.graph().Push(std::move(y), {a, b}, [ia, ib, m, k, n](Graph &g, int self) {
    const Tensor &dy = g.GradOf(self);
    const Tensor &x = g.value(ia);
    const Tensor &z = g.value(ib);
    if (g.RequiresGrad(ia)) {
      // dA = dC * B^T
      Tensor &dx = g.MutableGrad(ia);
      for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
          double s = 0.0;
          for (int j = 0; j < n; ++j) s += dy.at(i, j) * z.at(p, j);
          dx.at(i, p) += s;
        }
      }
    }
    if (g.RequiresGrad(ib)) {
      // dB = A^T * dC
      Tensor &dz = g.MutableGrad(ib);
      for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
          const double xv = x.at(i, p);
          if (xv == 0.0) continue;
          for (int j = 0; j < n; ++j) dz.at(p, j) += xv * dy.at(i, j);
        }
      }
    }
  });
}

Var Transpose(Var a) {
  const Tensor &x = a.value();
  Tensor y(x.cols(), x.rows());
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) y.at(j, i) = x.at(i, j);
  const int ia = a.id();
  return a.graph().Push(std::move(y), {a}, [ia](Graph &g, int self) {
    if (!g.RequiresGrad(ia)) return;
    const Tensor &dy = g.GradOf(self);
    Tensor &dx = g.MutableGrad(ia);
    for (int i = 0; i < dx.rows(); ++i)
      for (int j = 0; j < dx.cols(); ++j) dx.at(i, j) += dy.at(j, i);
  });
}

Var ConcatRows(std::initializer_list<Var> parts) {
  return ConcatRows(std::span<const Var>(parts.begin(), parts.size()));
}

Var ConcatRows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const int cols = parts[0].cols();
  int rows = 0;
  for (const Var &p : parts) {
    if (p.cols() != cols) ThrowShape("concat", parts[0].value(), p.value());
    rows += p.rows();
  }
  Tensor y(rows, cols);
  std::size_t offset = 0;
  std::vector<int> ids;
  ids.reserve(parts.size());
  for (const Var &p : parts) {
    const Tensor &x = p.value();
    std::copy(x.values().begin(), x.values().end(), y.values().begin() + offset);
    offset += x.size();
    ids.push_back(p.id());
  }
  return parts[0].graph().Push(std::move(y), parts, [ids](Graph &g, int self) {
    const Tensor &dy = g.GradOf(self);
    std::size_t offset = 0;
    for (int id : ids) {
      const std::size_t n = g.value(id).size();
      if (g.RequiresGrad(id)) {
        Tensor &dx = g.MutableGrad(id);
        for (std::size_t i = 0; i < n; ++i) dx[i] += dy[offset + i];
      }
      offset += n;
    }
  });
}

Var StackRows(std::span<const Var> columns) {
  if (columns.empty()) throw ShapeError("stack_rows: no inputs");
  const int width = columns[0].rows();
  for (const Var &c : columns) {
    if (c.cols() != 1 || c.rows() != width) {
      ThrowShape("stack_rows", columns[0].value(), c.value());
    }
  }
  Tensor y(static_cast<int>(columns.size()), width);
  std::vector<int> ids;
  ids.reserve(columns.size());
  for (std::size_t r = 0; r < columns.size(); ++r) {
    const Tensor &x = columns[r].value();
    std::copy(x.values().begin(), x.values().end(), y.values().begin() + r * width);
    ids.push_back(columns[r].id());
  }
  return columns[0].graph().Push(std::move(y), columns, [ids, width](Graph &g, int self) {
    const Tensor &dy = g.GradOf(self);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      if (!g.RequiresGrad(ids[r])) continue;
      Tensor &dx = g.MutableGrad(ids[r]);
      for (int j = 0; j < width; ++j) dx[j] += dy[r * width + j];
    }
  });
}

Var Row(Var m, int i) {
  const Tensor &x = m.value();
  if (i < 0 || i >= x.rows()) {
    throw ShapeError("row: index " + std::to_string(i) + " out of range for " +
                     x.ShapeString());
  }
  auto r = x.row(i);
  Tensor y = Tensor::Column(std::vector<double>(r.begin(), r.end()));
  const int im = m.id();
  return m.graph().Push(std::move(y), {m}, [im, i](Graph &g, int self) {
    if (!g.RequiresGrad(im)) return;
    const Tensor &dy = g.GradOf(self);
    Tensor &dx = g.MutableGrad(im);
    const int cols = dx.cols();
    for (int j = 0; j < cols; ++j) dx.at(i, j) += dy[j];
  });
}

Var SliceRows(Var a, int begin, int count) {
  const Tensor &x = a.value();
  if (begin < 0 || count < 0 || begin + count > x.rows()) {
    throw ShapeError("slice_rows: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " +
                     x.ShapeString());
  }
  const int cols = x.cols();
  Tensor y(count, cols);
  std::copy(x.values().begin() + static_cast<std::size_t>(begin) * cols,
            x.values().begin() + static_cast<std::size_t>(begin + count) * cols,
            y.values().begin());
  const int ia = a.id();
  return a.graph().Push(std::move(y), {a}, [ia, begin, cols](Graph &g, int self) {
    if (!g.RequiresGrad(ia)) return;
    const Tensor &dy = g.GradOf(self);
    Tensor &dx = g.MutableGrad(ia);
    const std::size_t offset = static_cast<std::size_t>(begin) * cols;
    for (std::size_t i = 0; i < dy.size(); ++i) dx[offset + i] += dy[i];
  });
}

Var Sigmoid(Var a) {
  return Unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var Tanh(Var a) {
  return Unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var Log(Var a) {
  return Unary(
      a, [](double x) { return std::log(std::max(x, kLogFloor)); },
      [](double x, double) { return 1.0 / std::max(x, kLogFloor); });
}

Var Softmax(Var a) {
  const Tensor &x = a.value();
  if (x.empty()) throw ShapeError("softmax: empty input");
  Tensor y(x.rows(), x.cols());
  const double mx = *std::max_element(x.values().begin(), x.values().end());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - mx);
    total += y[i];
  }
  for (double &v : y.values()) v /= total;
  const int ia = a.id();
  return a.graph().Push(std::move(y), {a}, [ia](Graph &g, int self) {
    if (!g.RequiresGrad(ia)) return;
    const Tensor &y = g.value(self);
    const Tensor &dy = g.GradOf(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += dy[i] * y[i];
    Tensor &dx = g.MutableGrad(ia);
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] += y[i] * (dy[i] - dot);
  });
}

Var Sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const int ia = a.id();
  return a.graph().Push(Tensor::Scalar(s), {a}, [ia](Graph &g, int self) {
    if (!g.RequiresGrad(ia)) return;
    const double d = g.GradOf(self)[0];
    for (double &v : g.MutableGrad(ia).values()) v += d;
  });
}

Var EmbeddingGather(Var table, int index) {
  const Tensor &t = table.value();
  if (index < 0 || index >= t.rows()) {
    throw ShapeError("embedding_gather: index " + std::to_string(index) +
                     " out of range for " + t.ShapeString());
  }
  return Row(table, index);
}

Var Dropout(Var a, double rate, std::mt19937_64 *rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ModelError("dropout: rate " + std::to_string(rate) + " outside [0, 1)");
  }
  if (rng == nullptr || rate == 0.0) return a;
  const Tensor &x = a.value();
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double keep = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  for (double &m : mask) m = uniform(*rng) >= rate ? keep : 0.0;
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * mask[i];
  const int ia = a.id();
  return a.graph().Push(std::move(y), {a}, [ia, mask = std::move(mask)](Graph &g, int self) {
    if (!g.RequiresGrad(ia)) return;
    const Tensor &dy = g.GradOf(self);
    Tensor &dx = g.MutableGrad(ia);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * mask[i];
  });
}

Var CrossEntropy(Var dist, int target) {
  const Tensor &p = dist.value();
  if (target < 0 || static_cast<std::size_t>(target) >= p.size()) {
    throw ShapeError("cross_entropy: target " + std::to_string(target) +
                     " out of range for " + p.ShapeString());
  }
  const double pt = std::max(p[target], kLogFloor);
  const int id = dist.id();
  return dist.graph().Push(Tensor::Scalar(-std::log(pt)), {dist},
                           [id, target, pt](Graph &g, int self) {
                             if (!g.RequiresGrad(id)) return;
                             g.MutableGrad(id)[target] -= g.GradOf(self)[0] / pt;
                           });
}

Var GradientReversal(Var a, double lambda) {
  if (lambda < 0.0) throw ModelError("gradient_reversal: negative lambda");
  const int ia = a.id();
  return a.graph().Push(a.value(), {a}, [ia, lambda](Graph &g, int self) {
    AccumulateInto(g, ia, g.GradOf(self), -lambda);
  });
}

}  // namespace adaparse
