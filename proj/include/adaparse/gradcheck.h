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

#ifndef ADAPARSE_GRADCHECK_H_
#define ADAPARSE_GRADCHECK_H_

#include <cstddef>
#include <functional>
#include <string>

#include "adaparse/graph.h"
#include "adaparse/params.h"

namespace adaparse {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
};

// Compares backprop gradients of the scalar built by `build` against central
// differences (f(x+h) - f(x-h)) / 2h for every entry of every parameter in
// `store`. Relative error uses max(|a|, |b|, 1e-8) as denominator. The
// builder must be deterministic. Parameter values are restored on return.
struct GradCheckOptions {
  double step = 1e-5;
  // Five-point stencil instead of central differences.
  bool five_point = false;
  // Relative error is |a - n| / max(|a|, |n|, floor). Finite differences of
  // a loss L carry an absolute roundoff of roughly 1e-16 * |L| / step, so
  // entries far below that scale can only be judged absolutely.
  double floor = 1e-8;
};

GradCheckResult GradCheck(ParameterStore &store,
                          const std::function<Var(Graph &)> &build,
                          const GradCheckOptions &options = {});

}  // namespace adaparse

#endif  // ADAPARSE_GRADCHECK_H_
