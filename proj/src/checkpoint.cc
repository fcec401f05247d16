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

#include "adaparse/checkpoint.h"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include "adaparse/error.h"
#include "adaparse/fileutil.h"

namespace adaparse {
namespace {

constexpr char kMagic[] = "ADAPARSE-TENSORS";
constexpr char kAccumPrefix[] = "rmsprop/";

void PutDouble(std::string &out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xff));
    bits >>= 8;
  }
}

double GetDouble(const unsigned char *p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

bool StartsWith(const std::string &s, const std::string &prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace

void SaveTensors(const std::filesystem::path &path, std::span<const NamedTensor> tensors) {
  std::string out = std::string(kMagic) + " " + std::to_string(kTensorArchiveVersion) +
                    " " + std::to_string(tensors.size()) + "\n";
  for (const NamedTensor &t : tensors) {
    if (t.name.empty() || t.name.find_first_of(" \t\n") != std::string::npos) {
      throw ModelError("checkpoint: invalid tensor name '" + t.name + "'");
    }
    out += t.name + " " + std::to_string(t.value.rows()) + " " +
           std::to_string(t.value.cols()) + "\n";
    for (double v : t.value.values()) PutDouble(out, v);
  }
  WriteFileAtomically(path, out);
}

std::vector<NamedTensor> LoadTensors(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("checkpoint: cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string data = buffer.str();

  std::size_t pos = 0;
  auto next_line = [&](const char *what) {
    const std::size_t end = data.find('\n', pos);
    if (end == std::string::npos) {
      throw ModelError("checkpoint " + path.string() + ": truncated " + what);
    }
    std::string line = data.substr(pos, end - pos);
    pos = end + 1;
    return line;
  };

  std::istringstream header(next_line("header"));
  std::string magic;
  int version = -1;
  long long count = -1;
  if (!(header >> magic >> version >> count) || magic != kMagic || count < 0) {
    throw ModelError("checkpoint " + path.string() + ": bad header");
  }
  if (version != kTensorArchiveVersion) {
    throw ModelError("checkpoint " + path.string() + ": version " +
                     std::to_string(version) + " unsupported (expected " +
                     std::to_string(kTensorArchiveVersion) + ")");
  }

  std::vector<NamedTensor> tensors;
  std::set<std::string> seen;
  for (long long i = 0; i < count; ++i) {
    std::istringstream entry(next_line("tensor entry"));
    std::string name;
    long long rows = -1, cols = -1;
    if (!(entry >> name >> rows >> cols) || rows < 0 || cols < 0) {
      throw ModelError("checkpoint " + path.string() + ": bad entry " +
                       std::to_string(i));
    }
    if (!seen.insert(name).second) {
      throw ModelError("checkpoint " + path.string() + ": duplicate tensor " + name);
    }
    const std::size_t n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    if (data.size() - pos < n * 8) {
      throw ModelError("checkpoint " + path.string() + ": truncated data for " + name);
    }
    Tensor t(static_cast<int>(rows), static_cast<int>(cols));
    const auto *bytes = reinterpret_cast<const unsigned char *>(data.data() + pos);
    for (std::size_t k = 0; k < n; ++k) t[k] = GetDouble(bytes + 8 * k);
    pos += n * 8;
    tensors.push_back({std::move(name), std::move(t)});
  }
  if (pos != data.size()) {
    throw ModelError("checkpoint " + path.string() + ": trailing bytes");
  }
  return tensors;
}

void SaveCheckpoint(const std::filesystem::path &path, const ParameterStore &store,
                    std::span<const NamedTensor> extras) {
  std::vector<NamedTensor> tensors;
  tensors.reserve(2 * store.size() + extras.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Parameter &p = store.at(i);
    tensors.push_back({p.name, p.value});
    tensors.push_back({kAccumPrefix + p.name, p.accum});
  }
  tensors.insert(tensors.end(), extras.begin(), extras.end());
  SaveTensors(path, tensors);
}

ParameterStore LoadCheckpoint(const std::filesystem::path &path,
                              std::vector<NamedTensor> *extras,
                              const std::string &extra_prefix) {
  std::vector<NamedTensor> tensors = LoadTensors(path);
  ParameterStore store;
  std::vector<NamedTensor> accums;
  for (NamedTensor &t : tensors) {
    if (StartsWith(t.name, kAccumPrefix)) {
      accums.push_back(std::move(t));
    } else if (StartsWith(t.name, extra_prefix)) {
      if (extras != nullptr) extras->push_back(std::move(t));
    } else {
      store.Add(t.name, std::move(t.value));
    }
  }
  for (NamedTensor &a : accums) {
    const std::string name = a.name.substr(sizeof(kAccumPrefix) - 1);
    if (!store.Contains(name)) {
      throw ModelError("checkpoint " + path.string() + ": accumulator for unknown " + name);
    }
    Parameter &p = store.Get(name);
    if (!a.value.SameShape(p.value)) {
      throw ModelError("checkpoint " + path.string() + ": accumulator shape for " + name);
    }
    p.accum = std::move(a.value);
  }
  return store;
}

void CopyParameters(const ParameterStore &source, ParameterStore &target) {
  for (std::size_t i = 0; i < target.size(); ++i) {
    Parameter &p = target.at(i);
    if (!source.Contains(p.name)) {
      throw ModelError("checkpoint is missing parameter " + p.name);
    }
    const Parameter &s = source.Get(p.name);
    if (!s.value.SameShape(p.value)) {
      throw ModelError("parameter " + p.name + " has shape " + s.value.ShapeString() +
                       " in checkpoint, expected " + p.value.ShapeString());
    }
    p.value = s.value;
    p.accum = s.accum;
  }
}

}  // namespace adaparse
