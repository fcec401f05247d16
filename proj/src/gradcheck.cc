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

#include "adaparse/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "adaparse/error.h"

namespace adaparse {
namespace {

double Evaluate(const std::function<Var(Graph &)> &build) {
  Graph g(/*record_gradients=*/false);
  Var loss = build(g);
  const Tensor &v = loss.value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("grad_check: loss must be scalar, got " + v.ShapeString());
  }
  return v[0];
}

}  // namespace

GradCheckResult GradCheck(ParameterStore &store,
                          const std::function<Var(Graph &)> &build,
                          const GradCheckOptions &options) {
  const double step = options.step;
  store.ZeroGrads();
  {
    Graph g;
    Var loss = build(g);
    if (loss.rows() != 1 || loss.cols() != 1) {
      throw ShapeError("grad_check: loss must be scalar, got " +
                       loss.value().ShapeString());
    }
    g.Backward(loss);
  }
  std::vector<Tensor> analytic;
  analytic.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) analytic.push_back(store.at(i).grad);
  store.ZeroGrads();

  GradCheckResult result;
  for (std::size_t i = 0; i < store.size(); ++i) {
    Parameter &p = store.at(i);
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double saved = p.value[j];
      auto at = [&](double offset) {
        p.value[j] = saved + offset;
        return Evaluate(build);
      };
      double numeric;
      if (options.five_point) {
        const double f2 = at(2 * step), f1 = at(step), m1 = at(-step), m2 = at(-2 * step);
        numeric = (-f2 + 8.0 * f1 - 8.0 * m1 + m2) / (12.0 * step);
      } else {
        const double plus = at(step), minus = at(-step);
        numeric = (plus - minus) / (2.0 * step);
      }
      p.value[j] = saved;

      const double a = analytic[i][j];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.entries_checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = p.name;
        result.worst_index = j;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace adaparse
