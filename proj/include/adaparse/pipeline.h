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

// Everything a trained parser needs besides its weights: vocabularies, the
// token share table, domain names, relevance settings and decode limits.
// A bundle is stored as a tensor checkpoint plus a JSON sidecar at
// "<checkpoint>.meta".

#ifndef ADAPARSE_PIPELINE_H_
#define ADAPARSE_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adaparse/checkpoint.h"
#include "adaparse/corpus.h"
#include "adaparse/model.h"
#include "adaparse/relevance.h"
#include "adaparse/sketch.h"

namespace adaparse {

// Sets one hyperparameter from its textual form. Returns false for unknown
// keys; throws UsageError for malformed values.
bool SetHyperparam(Hyperparams &hp, const std::string &key, const std::string &value);
// All hyperparameters as (key, value) pairs, round-trippable through
// SetHyperparam.
std::vector<std::pair<std::string, std::string>> HyperparamEntries(const Hyperparams &hp);

struct Vocabularies {
  Vocabulary utterance;
  Vocabulary sketch;
  Vocabulary logical_form;
};

struct ModelBundle {
  Strategy strategy = Strategy::kDamp;
  Hyperparams hp;
  Architecture arch;
  std::vector<Domain> domains;
  int target_domain = -1;
  TokenShareTable shares;
  Vocabularies vocabs;
  RelevanceSettings relevance;
  int max_sketch_len = 0;  // decode limits, EOS included
  int max_lf_len = 0;
  std::unique_ptr<DampModel> model;

  const std::string &DomainName(int id) const;
  // -1 if absent.
  int FindDomain(const std::string &name) const;
};

// Builds vocabularies, share table and decode limits from the training
// splits and draws fresh weights from `seed`. Pretrained vectors, when given,
// initialize the utterance embeddings (their dimension must equal
// embed_dim) and feed the relevance priors.
ModelBundle BuildBundle(Strategy strategy, const Hyperparams &hp, const AdaptationDataset &data,
                        const RelevanceSettings &relevance, const WordVectors *vectors,
                        std::uint64_t seed);

void SaveBundle(const std::filesystem::path &path, const ModelBundle &bundle,
                std::span<const NamedTensor> extras = {});
// Throws ModelError when either file is missing or inconsistent.
ModelBundle LoadBundle(const std::filesystem::path &path);

std::filesystem::path MetaPath(const std::filesystem::path &checkpoint);

// Turns corpus instances into model-ready examples.
class Preprocessor {
 public:
  // `vectors` may be null unless the architecture uses prior attention.
  Preprocessor(const ModelBundle &bundle, const WordVectors *vectors);

  // Gold sketch, alignment and target ids are filled when the instance has a
  // logical form.
  Example Prepare(const Instance &instance) const;
  std::vector<Example> PrepareAll(std::span<const Instance> instances) const;
  TokenSeq SketchOf(std::span<const std::string> logical_form) const;

 private:
  const ModelBundle *bundle_;
  const WordVectors *vectors_;
  TokenClassifier classify_;
};

}  // namespace adaparse

#endif  // ADAPARSE_PIPELINE_H_
