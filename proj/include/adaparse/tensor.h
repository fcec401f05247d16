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

#ifndef ADAPARSE_TENSOR_H_
#define ADAPARSE_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace adaparse {

// Dense row-major matrix of doubles. Vectors are stored as n x 1 columns.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols, double fill = 0.0);

  static Tensor Column(std::vector<double> values);
  static Tensor Scalar(double value) { return Tensor(1, 1, value); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double &at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double at(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<const double> row(int r) const {
    return std::span<const double>(data_).subspan(
        static_cast<std::size_t>(r) * cols_, cols_);
  }

  bool SameShape(const Tensor &other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  void Fill(double value);
  bool AllFinite() const;

  // "(rows x cols)", used in error messages.
  std::string ShapeString() const;

  friend bool operator==(const Tensor &a, const Tensor &b) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

}  // namespace adaparse

#endif  // ADAPARSE_TENSOR_H_
