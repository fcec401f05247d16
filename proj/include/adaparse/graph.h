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

// Tape-based reverse-mode automatic differentiation over dense matrices.
//
// A Graph records every primitive applied to its variables. Calling
// Backward() on a scalar walks the tape in reverse and accumulates
// d(loss)/d(input) into every node that requires a gradient; gradients of
// parameter leaves land directly in Parameter::grad.
//
// Graphs are single-threaded and meant to be short-lived: one per training
// instance, or one per decoder step at inference time.

#ifndef ADAPARSE_GRAPH_H_
#define ADAPARSE_GRAPH_H_

#include <functional>
#include <random>
#include <span>
#include <vector>

#include "adaparse/params.h"
#include "adaparse/tensor.h"

namespace adaparse {

class Graph;

// Handle to a node of a Graph.
class Var {
 public:
  Var() = default;

  bool valid() const { return graph_ != nullptr; }
  Graph &graph() const { return *graph_; }
  int id() const { return id_; }

  const Tensor &value() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }

 private:
  friend class Graph;
  Var(Graph *graph, int id) : graph_(graph), id_(id) {}

  Graph *graph_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  using BackwardFn = std::function<void(Graph &, int)>;

  // With record_gradients false no backward closures are kept; the graph
  // can only be used for forward evaluation.
  explicit Graph(bool record_gradients = true) : record_(record_gradients) {}
  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;

  Var Constant(Tensor value);
  // Constant that references `value`, which must outlive the graph.
  Var ConstantRef(const Tensor &value);
  // Leaf bound to a parameter. The value is referenced, not copied.
  Var Param(Parameter &param);

  const Tensor &value(Var v) const { return value(v.id()); }
  const Tensor &value(int id) const {
    const Node &n = nodes_[id];
    return n.ref != nullptr ? *n.ref : n.value;
  }
  // Gradient of the last Backward() call with respect to `v`.
  const Tensor &grad(Var v) const;

  // Seeds d(loss)/d(loss) = scale and propagates to all inputs. `loss` must
  // be 1 x 1. Parameter gradients accumulate across calls.
  void Backward(Var loss, double scale = 1.0);

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  // Primitive plumbing.
  Var Push(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var Push(Tensor value, std::span<const Var> inputs, BackwardFn fn);
  bool RequiresGrad(int id) const { return nodes_[id].requires_grad; }
  Tensor &MutableGrad(int id);
  const Tensor &GradOf(int id) const;

 private:
  struct Node {
    Tensor value;
    const Tensor *ref = nullptr;
    Tensor grad;
    Parameter *param = nullptr;
    bool requires_grad = false;
    BackwardFn backward;
  };

  bool record_;
  std::vector<Node> nodes_;
};

// Elementwise and linear algebra primitives. All inputs must belong to the
// same graph; shape mismatches throw ShapeError naming the operation.
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);  // Hadamard product.
Var Scale(Var a, double s);
Var Affine(Var a, double scale, double shift);  // scale * a + shift
Var MatMul(Var a, Var b);
Var Transpose(Var a);

// Vertical concatenation; all inputs share a column count.
Var ConcatRows(std::span<const Var> parts);
Var ConcatRows(std::initializer_list<Var> parts);
// Turns n column vectors of height w into an n x w matrix.
Var StackRows(std::span<const Var> columns);
// Row i of a matrix as a column vector.
Var Row(Var m, int i);
Var SliceRows(Var a, int begin, int count);

Var Sigmoid(Var a);
Var Tanh(Var a);
// Normalizes all entries of `a` (a column vector) into a distribution.
Var Softmax(Var a);
// Natural log; inputs are floored at kLogFloor so the output stays finite.
Var Log(Var a);
Var Sum(Var a);

// Row `index` of an embedding matrix as a column vector.
Var EmbeddingGather(Var table, int index);
// Inverted dropout. Identity when rng is null or rate is zero.
Var Dropout(Var a, double rate, std::mt19937_64 *rng);
// -log(dist[target]) as a 1 x 1 tensor.
Var CrossEntropy(Var dist, int target);
// Identity forward; backward multiplies the incoming gradient by -lambda.
Var GradientReversal(Var a, double lambda);

inline constexpr double kLogFloor = 1e-300;

}  // namespace adaparse

#endif  // ADAPARSE_GRAPH_H_
