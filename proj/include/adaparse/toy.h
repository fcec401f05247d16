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

// Small synthetic multi-domain corpora in the function-call style of the
// OVERNIGHT logical forms, plus matching word vectors. Used by smoke tests
// and the gradcheck command.

#ifndef ADAPARSE_TOY_H_
#define ADAPARSE_TOY_H_

#include <cstdint>
#include <string>
#include <vector>

#include "adaparse/corpus.h"
#include "adaparse/model.h"
#include "adaparse/pipeline.h"

namespace adaparse {

// Names of the built-in toy domains, in a fixed order.
const std::vector<std::string> &ToyDomainNames();

struct ToyCorpusOptions {
  // Prefix of ToyDomainNames().
  int num_domains = 2;
  int instances_per_domain = 10;
  std::uint64_t seed = 1;
};

// Instances are distinct within a domain as long as instances_per_domain
// does not exceed the number of template fillings (well over 100).
Corpus MakeToyCorpus(const ToyCorpusOptions &options);

// Every utterance word gets a vector: domain words lean towards their
// domain's direction, function words are small noise. The domain names
// themselves are pure domain directions.
WordVectors MakeToyVectors(const Corpus &corpus, int dim, std::uint64_t seed);

struct ModelGradCheck {
  double coarse_error = 0.0;  // max relative error of L_c
  double fine_error = 0.0;    // max relative error of L_f
  std::string worst_coarse;
  std::string worst_fine;
  std::size_t entries = 0;
};

// Finite-difference check of L_c and L_f on a two-instance toy batch
// (encoder width 8, dropout off), five-point stencil with step 1e-3 and a
// relative-error floor of 1e-6.
ModelGradCheck CheckModelGradients(Strategy strategy, std::uint64_t seed);

}  // namespace adaparse

#endif  // ADAPARSE_TOY_H_
