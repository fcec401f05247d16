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


#include <cmath>
#include <functional>
#include <optional>
#include <random>

#include <doctest.h>

#include "adaparse/error.h"
#include "adaparse/gradcheck.h"
#include "adaparse/graph.h"
#include "adaparse/lstm.h"
#include "adaparse/params.h"
#include "adaparse/random.h"

namespace adaparse {
namespace {

Tensor RandomTensor(int rows, int cols, std::mt19937_64 &rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(rows, cols);
  for (double &v : t.values()) v = u(rng);
  return t;
}

// Weighted sum of `out` with fixed random weights, so every output entry
// contributes a distinct upstream gradient.
Var Project(Var out, std::uint64_t seed) {
  std::mt19937_64 rng = SeededRng(seed, {0xc0});
  return Sum(Mul(out, out.graph().Constant(RandomTensor(out.rows(), out.cols(), rng))));
}

double CheckPrimitive(ParameterStore &store, const std::function<Var(Graph &)> &op) {
  return GradCheck(store, [&](Graph &g) { return Project(op(g), 7); }).max_relative_error;
}

TEST_CASE("sigmoid and softmax values") {
  Graph g(false);
  CHECK(Sigmoid(g.Constant(Tensor::Scalar(0.0))).value()[0] == 0.5);
  Var even = Softmax(g.Constant(Tensor::Column({0.0, 0.0})));
  CHECK(even.value()[0] == 0.5);
  CHECK(even.value()[1] == 0.5);
  Var s = Softmax(g.Constant(Tensor::Column({1.0, 2.0})));
  const double z = std::exp(1.0) + std::exp(2.0);
  CHECK(s.value()[0] == doctest::Approx(std::exp(1.0) / z).epsilon(1e-14));
  CHECK(s.value()[1] == doctest::Approx(std::exp(2.0) / z).epsilon(1e-14));
  CHECK(s.value()[0] == doctest::Approx(0.26894).epsilon(1e-4));
  CHECK(s.value()[1] == doctest::Approx(0.73106).epsilon(1e-4));
}

TEST_CASE("softmax output is a probability simplex") {
  std::mt19937_64 rng = SeededRng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Graph g(false);
    Var s = Softmax(g.Constant(RandomTensor(1 + trial % 9, 1, rng, -30.0, 30.0)));
    double total = 0.0;
    for (double v : s.value().values()) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("cross entropy") {
  Graph g(false);
  Var p = g.Constant(Tensor::Column({0.9, 0.1}));
  CHECK(CrossEntropy(p, 0).value()[0] == doctest::Approx(-std::log(0.9)).epsilon(1e-14));
  CHECK(CrossEntropy(p, 0).value()[0] == doctest::Approx(0.10536).epsilon(1e-4));
  CHECK(CrossEntropy(g.Constant(Tensor::Column({0.0, 1.0})), 1).value()[0] == 0.0);
  CHECK(CrossEntropy(p, 1).value()[0] > 0.0);
  CHECK_THROWS_AS(CrossEntropy(p, 2), ShapeError);
}

TEST_CASE("shape mismatch names the operation") {
  Graph g(false);
  Var a = g.Constant(Tensor(2, 3));
  Var b = g.Constant(Tensor(2, 3));
  try {
    MatMul(a, b);
    FAIL("expected a shape error");
  } catch (const ShapeError &e) {
    CHECK(std::string(e.what()).find("matmul") != std::string::npos);
  }
  CHECK_THROWS_AS(Add(a, g.Constant(Tensor(3, 2))), ShapeError);
}

TEST_CASE("every primitive passes the gradient check in isolation") {
  std::mt19937_64 rng = SeededRng(11);
  ParameterStore store;
  Parameter &a = store.Add("a", RandomTensor(3, 2, rng));
  Parameter &b = store.Add("b", RandomTensor(3, 2, rng));
  Parameter &m = store.Add("m", RandomTensor(2, 4, rng));
  Parameter &v = store.Add("v", RandomTensor(5, 1, rng));
  Parameter &pos = store.Add("pos", RandomTensor(4, 1, rng, 0.5, 1.5));
  Parameter &table = store.Add("table", RandomTensor(6, 3, rng));

  const std::vector<std::pair<const char *, std::function<Var(Graph &)>>> ops = {
      {"add", [&](Graph &g) { return Add(g.Param(a), g.Param(b)); }},
      {"sub", [&](Graph &g) { return Sub(g.Param(a), g.Param(b)); }},
      {"mul", [&](Graph &g) { return Mul(g.Param(a), g.Param(b)); }},
      {"affine", [&](Graph &g) { return Affine(g.Param(a), -1.7, 0.3); }},
      {"matmul", [&](Graph &g) { return MatMul(g.Param(a), g.Param(m)); }},
      {"transpose", [&](Graph &g) { return Transpose(g.Param(m)); }},
      {"concat", [&](Graph &g) { return ConcatRows({g.Param(a), g.Param(b)}); }},
      {"stack", [&](Graph &g) {
         const Var cols[] = {g.Param(v), g.Param(v)};
         return StackRows(cols);
       }},
      {"row", [&](Graph &g) { return Row(g.Param(m), 1); }},
      {"slice", [&](Graph &g) { return SliceRows(g.Param(v), 1, 3); }},
      {"sigmoid", [&](Graph &g) { return Sigmoid(g.Param(a)); }},
      {"tanh", [&](Graph &g) { return Tanh(g.Param(a)); }},
      {"softmax", [&](Graph &g) { return Softmax(g.Param(v)); }},
      {"log", [&](Graph &g) { return Log(g.Param(pos)); }},
      {"sum", [&](Graph &g) { return Sum(g.Param(m)); }},
      {"embedding_gather", [&](Graph &g) { return EmbeddingGather(g.Param(table), 4); }},
      {"dropout", [&](Graph &g) {
         std::mt19937_64 mask_rng = SeededRng(5);  // same mask on every call
         return Dropout(g.Param(a), 0.4, &mask_rng);
       }},
      {"cross_entropy", [&](Graph &g) { return CrossEntropy(Softmax(g.Param(v)), 2); }},
  };
  for (const auto &[name, op] : ops) {
    CAPTURE(name);
    CHECK(CheckPrimitive(store, op) <= 1e-6);
  }
}

TEST_CASE("dropout is inverted and the identity without a generator") {
  Graph g(false);
  Tensor x(200, 1, 2.0);
  Var in = g.Constant(x);
  CHECK(Dropout(in, 0.6, nullptr).value() == x);
  std::mt19937_64 rng = SeededRng(9);
  const Tensor &y = Dropout(in, 0.5, &rng).value();
  for (double v : y.values()) CHECK((v == 0.0 || v == 4.0));
  CHECK_THROWS_AS(Dropout(in, 1.0, &rng), ModelError);
}

TEST_CASE("lstm cell") {
  std::mt19937_64 rng = SeededRng(2);
  ParameterStore store;
  LstmParams zero = LstmParams::Create(store, "zero", 3, 4, 0.0, rng);
  {
    Graph g(false);
    LstmState s = LstmCell(g, zero, g.Constant(Tensor(3, 1)), ZeroLstmState(g, 4));
    for (double v : s.hidden.value().values()) CHECK(v == 0.0);
  }
  LstmParams p = LstmParams::Create(store, "p", 3, 4, 0.5, rng);
  Parameter &x = store.Add("x", RandomTensor(3, 1, rng));
  Parameter &h = store.Add("h", RandomTensor(4, 1, rng));
  Parameter &c = store.Add("c", RandomTensor(4, 1, rng));
  const double err = CheckPrimitive(store, [&](Graph &g) {
    LstmState s = LstmCell(g, p, g.Param(x), {g.Param(h), g.Param(c)});
    return ConcatRows({s.hidden, s.cell});
  });
  CHECK(err <= 1e-6);

  LstmParams bw = LstmParams::Create(store, "bw", 3, 4, 0.5, rng);
  Graph g(false);
  std::vector<Var> inputs;
  for (int i = 0; i < 5; ++i) inputs.push_back(g.Constant(RandomTensor(3, 1, rng)));
  BiLstmOutput out = BiLstmEncode(g, p, bw, inputs);
  CHECK(out.states.rows() == 5);
  CHECK(out.states.cols() == 8);
}

TEST_CASE("gradient reversal") {
  std::mt19937_64 rng = SeededRng(4);
  ParameterStore store;
  Parameter &w = store.Add("w", RandomTensor(2, 3, rng));
  const Tensor x = RandomTensor(3, 1, rng);

  auto run = [&](std::optional<double> lambda) {
    store.ZeroGrads();
    Graph g;
    Var y = MatMul(g.Param(w), g.Constant(x));
    if (lambda) y = GradientReversal(y, *lambda);
    g.Backward(Project(y, 1));
    return w.grad;
  };
  const Tensor plain = run(std::nullopt);
  const Tensor reversed = run(1.0);
  const Tensor zeroed = run(0.0);
  for (std::size_t i = 0; i < plain.size(); ++i) {
    CHECK(reversed[i] == -plain[i]);
    CHECK(zeroed[i] == 0.0);
  }

  Graph g;
  Var in = g.Constant(x);
  CHECK(GradientReversal(in, 1.0).value() == x);
}

TEST_CASE("rmsprop step") {
  ParameterStore store;
  Parameter &p = store.Add("p", Tensor::Column({0.5, 0.5}));
  p.grad[0] = 1.0;
  p.grad[1] = 0.0;
  p.touched = true;
  RmsPropOptions opt;
  opt.learning_rate = 1e-3;
  opt.decay = 0.9;
  opt.epsilon = 1e-8;
  RmsPropStep(store, opt);
  const double accum = 0.9 * 0.0 + 0.1 * 1.0;
  CHECK(p.accum[0] == doctest::Approx(accum).epsilon(1e-15));
  const double delta = -1e-3 * 1.0 / std::sqrt(accum + 1e-8);
  CHECK(p.value[0] - 0.5 == doctest::Approx(delta).epsilon(1e-9));
  CHECK(p.value[0] - 0.5 == doctest::Approx(-3.16228e-3).epsilon(1e-5));
  CHECK(p.value[1] == 0.5);
  CHECK(p.grad[0] == 0.0);
}

TEST_CASE("rmsprop runs are bit-identical under the same seed") {
  auto run = [] {
    std::mt19937_64 rng = SeededRng(21);
    ParameterStore store;
    Parameter &w = store.Add("w", 3, 3, 0.5, rng);
    const Tensor x = RandomTensor(3, 1, rng);
    for (int step = 0; step < 10; ++step) {
      Graph g;
      g.Backward(Project(Tanh(MatMul(g.Param(w), g.Constant(x))), step));
      RmsPropStep(store, {});
    }
    return store.SnapshotValues();
  };
  CHECK(run() == run());
}

TEST_CASE("gradient check on linear regression and a corrupted backward") {
  std::mt19937_64 rng = SeededRng(8);
  ParameterStore store;
  Parameter &w = store.Add("w", RandomTensor(1, 4, rng));
  const Tensor x = RandomTensor(4, 10, rng);
  const Tensor y = RandomTensor(1, 10, rng);
  auto loss = [&](Graph &g) {
    Var r = Sub(MatMul(g.Param(w), g.Constant(x)), g.Constant(y));
    return Sum(Mul(r, r));
  };
  CHECK(GradCheck(store, loss).max_relative_error <= 1e-6);

  // Identity forward with a sign-flipped backward.
  auto broken = [&](Graph &g) {
    Var r = Sub(MatMul(g.Param(w), g.Constant(x)), g.Constant(y));
    const int id = r.id();
    Var flipped = g.Push(r.value(), {r}, [id](Graph &gg, int self) {
      Tensor &dx = gg.MutableGrad(id);
      const Tensor &dy = gg.GradOf(self);
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] -= dy[i];
    });
    return Sum(Mul(flipped, flipped));
  };
  CHECK(GradCheck(store, broken).max_relative_error > 0.1);

  Graph g;
  CHECK_THROWS(GradCheck(store, [&](Graph &gg) { return MatMul(gg.Param(w), gg.Constant(x)); }));
}

}  // namespace
}  // namespace adaparse
