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

#ifndef ADAPARSE_PARAMS_H_
#define ADAPARSE_PARAMS_H_

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "adaparse/tensor.h"

namespace adaparse {

// A trainable tensor together with its gradient and RMSProp accumulator.
// `touched` is set whenever a backward pass writes into `grad`; the optimizer
// only updates touched parameters.
struct Parameter {
  Parameter(std::string n, Tensor v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(value.rows(), value.cols()),
        accum(value.rows(), value.cols()) {}

  std::string name;
  Tensor value;
  Tensor grad;
  Tensor accum;
  bool touched = false;
};

// Named parameters in insertion order. Addresses of stored parameters are
// stable for the lifetime of the store.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore &) = delete;
  ParameterStore &operator=(const ParameterStore &) = delete;
  ParameterStore(ParameterStore &&) = default;
  ParameterStore &operator=(ParameterStore &&) = default;

  // Adds a parameter initialized uniformly in [-range, range].
  Parameter &Add(const std::string &name, int rows, int cols, double range,
                 std::mt19937_64 &rng);
  // Adds a parameter with an explicit value.
  Parameter &Add(const std::string &name, Tensor value);

  Parameter &Get(const std::string &name);
  const Parameter &Get(const std::string &name) const;
  bool Contains(const std::string &name) const { return index_.count(name) > 0; }

  std::size_t size() const { return params_.size(); }
  std::size_t NumValues() const;
  Parameter &at(std::size_t i) { return *params_[i]; }
  const Parameter &at(std::size_t i) const { return *params_[i]; }

  void ZeroGrads();

  // Value snapshots, used for best-epoch retention.
  std::vector<Tensor> SnapshotValues() const;
  void RestoreValues(const std::vector<Tensor> &values);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t> index_;
};

struct RmsPropOptions {
  double learning_rate = 1e-3;
  double decay = 0.9;
  double epsilon = 1e-8;
  // Weight decay coefficient added to gradients (L2 regularization).
  double l2 = 0.0;
  // Global-norm gradient clipping; 0 disables.
  double clip_norm = 0.0;
};

// accum <- decay * accum + (1 - decay) * g^2
// theta <- theta - lr * g / sqrt(accum + eps)
// Applied to touched parameters only; all gradients are cleared afterwards.
void RmsPropStep(ParameterStore &store, const RmsPropOptions &options);

}  // namespace adaparse

#endif  // ADAPARSE_PARAMS_H_
