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

// Named-tensor archive.
//
//   ADAPARSE-TENSORS <version> <count>\n
//   repeated <count> times:
//     <name> <rows> <cols>\n
//     rows * cols little-endian IEEE-754 binary64 values
//
// Names contain no whitespace. Optimizer accumulators are stored as
// "rmsprop/<name>" next to their parameter.

#ifndef ADAPARSE_CHECKPOINT_H_
#define ADAPARSE_CHECKPOINT_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "adaparse/params.h"
#include "adaparse/tensor.h"

namespace adaparse {

inline constexpr int kTensorArchiveVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

// Writes atomically (temporary file, then rename).
void SaveTensors(const std::filesystem::path &path, std::span<const NamedTensor> tensors);
// Throws ModelError on a missing file, bad header, version mismatch or
// truncation. Nothing is returned unless the whole archive parsed.
std::vector<NamedTensor> LoadTensors(const std::filesystem::path &path);

// Parameters, their RMSProp accumulators, and caller-provided extras.
void SaveCheckpoint(const std::filesystem::path &path, const ParameterStore &store,
                    std::span<const NamedTensor> extras = {});
// Rebuilds a store in archive order. Tensors whose names start with "rmsprop/"
// become accumulators; names in `extra_prefix` go to `extras` if given.
ParameterStore LoadCheckpoint(const std::filesystem::path &path,
                              std::vector<NamedTensor> *extras = nullptr,
                              const std::string &extra_prefix = "state/");

// Copies values (and accumulators) from `source` into same-named, same-shaped
// parameters of `target`. Throws if any target parameter is missing.
void CopyParameters(const ParameterStore &source, ParameterStore &target);

}  // namespace adaparse

#endif  // ADAPARSE_CHECKPOINT_H_
