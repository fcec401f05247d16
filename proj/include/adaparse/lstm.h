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

#ifndef ADAPARSE_LSTM_H_
#define ADAPARSE_LSTM_H_

#include <random>
#include <span>
#include <string>

#include "adaparse/graph.h"
#include "adaparse/params.h"

namespace adaparse {

// Fused gate weights: rows are [input; forget; output; candidate] blocks of
// `hidden_size`, columns are [x; h_prev].
struct LstmParams {
  Parameter *weight = nullptr;  // 4H x (I + H)
  Parameter *bias = nullptr;    // 4H x 1
  int input_size = 0;
  int hidden_size = 0;

  static LstmParams Create(ParameterStore &store, const std::string &prefix,
                           int input_size, int hidden_size, double range,
                           std::mt19937_64 &rng);
  static LstmParams Bind(ParameterStore &store, const std::string &prefix);
};

struct LstmState {
  Var hidden;
  Var cell;
};

LstmState ZeroLstmState(Graph &g, int hidden_size);

// One step of a standard LSTM:
//   i = sigma(W_i z + b_i), f = sigma(W_f z + b_f), o = sigma(W_o z + b_o),
//   g = tanh(W_g z + b_g), c' = f * c + i * g, h' = o * tanh(c'),
// with z = [x; h].
LstmState LstmCell(Graph &g, const LstmParams &params, Var input,
                   const LstmState &prev);

struct BiLstmOutput {
  Var states;          // n x 2H, row k = [h_fw(k); h_bw(k)]
  Var final_forward;   // h_fw(n - 1)
  Var final_backward;  // h_bw(0)
};

BiLstmOutput BiLstmEncode(Graph &g, const LstmParams &forward,
                          const LstmParams &backward, std::span<const Var> inputs);

}  // namespace adaparse

#endif  // ADAPARSE_LSTM_H_
