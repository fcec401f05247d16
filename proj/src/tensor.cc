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

#include "adaparse/tensor.h"

#include <algorithm>
#include <cmath>

#include "adaparse/error.h"

namespace adaparse {

Tensor::Tensor(int rows, int cols, double fill)
    : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) {
    throw ShapeError("Tensor: negative shape (" + std::to_string(rows) + " x " +
                     std::to_string(cols) + ")");
  }
  data_.assign(static_cast<std::size_t>(rows) * cols, fill);
}

Tensor Tensor::Column(std::vector<double> values) {
  Tensor t;
  t.rows_ = static_cast<int>(values.size());
  t.cols_ = 1;
  t.data_ = std::move(values);
  return t;
}

void Tensor::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string Tensor::ShapeString() const {
  return "(" + std::to_string(rows_) + " x " + std::to_string(cols_) + ")";
}

}  // namespace adaparse
