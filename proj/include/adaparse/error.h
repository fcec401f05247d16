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

#ifndef ADAPARSE_ERROR_H_
#define ADAPARSE_ERROR_H_

#include <stdexcept>
#include <string>

namespace adaparse {

// Root of all errors thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed corpus lines, unknown domains, bad fractions.
class DataError : public Error {
 public:
  using Error::Error;
};

// Model or checkpoint problems: shape mismatches, corrupt archives.
class ModelError : public Error {
 public:
  using Error::Error;
};

// Tensor shape incompatibility inside a primitive.
class ShapeError : public ModelError {
 public:
  using ModelError::ModelError;
};

// Bad command line or configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace adaparse

#endif  // ADAPARSE_ERROR_H_
