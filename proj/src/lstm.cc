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

#include "adaparse/lstm.h"

#include <vector>

#include "adaparse/error.h"

namespace adaparse {

LstmParams LstmParams::Create(ParameterStore &store, const std::string &prefix,
                              int input_size, int hidden_size, double range,
                              std::mt19937_64 &rng) {
  LstmParams p;
  p.weight = &store.Add(prefix + ".W", 4 * hidden_size, input_size + hidden_size,
                        range, rng);
  p.bias = &store.Add(prefix + ".b", Tensor(4 * hidden_size, 1));
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  return p;
}

LstmParams LstmParams::Bind(ParameterStore &store, const std::string &prefix) {
  LstmParams p;
  p.weight = &store.Get(prefix + ".W");
  p.bias = &store.Get(prefix + ".b");
  p.hidden_size = p.weight->value.rows() / 4;
  p.input_size = p.weight->value.cols() - p.hidden_size;
  return p;
}

LstmState ZeroLstmState(Graph &g, int hidden_size) {
  return {g.Constant(Tensor(hidden_size, 1)), g.Constant(Tensor(hidden_size, 1))};
}

LstmState LstmCell(Graph &g, const LstmParams &params, Var input,
                   const LstmState &prev) {
  const int h = params.hidden_size;
  if (input.rows() != params.input_size || input.cols() != 1) {
    throw ShapeError("lstm_cell: input " + input.value().ShapeString() +
                     " does not match input size " + std::to_string(params.input_size));
  }
  if (prev.hidden.rows() != h || prev.cell.rows() != h) {
    throw ShapeError("lstm_cell: state " + prev.hidden.value().ShapeString() +
                     " does not match hidden size " + std::to_string(h));
  }
  Var z = ConcatRows({input, prev.hidden});
  Var pre = Add(MatMul(g.Param(*params.weight), z), g.Param(*params.bias));
  Var in_gate = Sigmoid(SliceRows(pre, 0, h));
  Var forget_gate = Sigmoid(SliceRows(pre, h, h));
  Var out_gate = Sigmoid(SliceRows(pre, 2 * h, h));
  Var candidate = Tanh(SliceRows(pre, 3 * h, h));
  Var cell = Add(Mul(forget_gate, prev.cell), Mul(in_gate, candidate));
  Var hidden = Mul(out_gate, Tanh(cell));
  return {hidden, cell};
}

BiLstmOutput BiLstmEncode(Graph &g, const LstmParams &forward,
                          const LstmParams &backward, std::span<const Var> inputs) {
  if (inputs.empty()) throw ShapeError("bilstm_encode: empty input sequence");
  const std::size_t n = inputs.size();
  std::vector<Var> fw(n), bw(n);
  LstmState state = ZeroLstmState(g, forward.hidden_size);
  for (std::size_t t = 0; t < n; ++t) {
    state = LstmCell(g, forward, inputs[t], state);
    fw[t] = state.hidden;
  }
  state = ZeroLstmState(g, backward.hidden_size);
  for (std::size_t t = n; t-- > 0;) {
    state = LstmCell(g, backward, inputs[t], state);
    bw[t] = state.hidden;
  }
  std::vector<Var> rows(n);
  for (std::size_t t = 0; t < n; ++t) rows[t] = ConcatRows({fw[t], bw[t]});
  return {StackRows(rows), fw[n - 1], bw[0]};
}

}  // namespace adaparse
