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

#include "adaparse/params.h"

#include <cmath>

#include "adaparse/error.h"

namespace adaparse {

Parameter &ParameterStore::Add(const std::string &name, int rows, int cols,
                               double range, std::mt19937_64 &rng) {
  Tensor value(rows, cols);
  std::uniform_real_distribution<double> dist(-range, range);
  for (double &v : value.values()) v = dist(rng);
  return Add(name, std::move(value));
}

Parameter &ParameterStore::Add(const std::string &name, Tensor value) {
  if (Contains(name)) throw ModelError("duplicate parameter name: " + name);
  index_[name] = params_.size();
  params_.push_back(std::make_unique<Parameter>(name, std::move(value)));
  return *params_.back();
}

Parameter &ParameterStore::Get(const std::string &name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ModelError("unknown parameter: " + name);
  return *params_[it->second];
}

const Parameter &ParameterStore::Get(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ModelError("unknown parameter: " + name);
  return *params_[it->second];
}

std::size_t ParameterStore::NumValues() const {
  std::size_t n = 0;
  for (const auto &p : params_) n += p->value.size();
  return n;
}

void ParameterStore::ZeroGrads() {
  for (auto &p : params_) {
    p->grad.Fill(0.0);
    p->touched = false;
  }
}

std::vector<Tensor> ParameterStore::SnapshotValues() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto &p : params_) out.push_back(p->value);
  return out;
}

void ParameterStore::RestoreValues(const std::vector<Tensor> &values) {
  if (values.size() != params_.size()) {
    throw ModelError("snapshot has " + std::to_string(values.size()) +
                     " tensors, store has " + std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].SameShape(params_[i]->value)) {
      throw ModelError("snapshot shape mismatch for " + params_[i]->name);
    }
    params_[i]->value = values[i];
  }
}

void RmsPropStep(ParameterStore &store, const RmsPropOptions &options) {
  if (options.l2 > 0.0) {
    for (std::size_t i = 0; i < store.size(); ++i) {
      Parameter &p = store.at(i);
      if (!p.touched) continue;
      for (std::size_t j = 0; j < p.value.size(); ++j) {
        p.grad[j] += options.l2 * p.value[j];
      }
    }
  }

  double scale = 1.0;
  if (options.clip_norm > 0.0) {
    double sq = 0.0;
    for (std::size_t i = 0; i < store.size(); ++i) {
      const Parameter &p = store.at(i);
      if (!p.touched) continue;
      for (double g : p.grad.values()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > options.clip_norm) scale = options.clip_norm / norm;
  }

  for (std::size_t i = 0; i < store.size(); ++i) {
    Parameter &p = store.at(i);
    if (p.touched) {
      for (std::size_t j = 0; j < p.value.size(); ++j) {
        const double g = p.grad[j] * scale;
        p.accum[j] = options.decay * p.accum[j] + (1.0 - options.decay) * g * g;
        p.value[j] -= options.learning_rate * g / std::sqrt(p.accum[j] + options.epsilon);
      }
    }
    p.grad.Fill(0.0);
    p.touched = false;
  }
}

}  // namespace adaparse
