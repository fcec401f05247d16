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

// Domain relevance of utterance words and the attention prior vectors built
// from it.

#ifndef ADAPARSE_RELEVANCE_H_
#define ADAPARSE_RELEVANCE_H_

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adaparse/corpus.h"

namespace adaparse {

enum class Stage { kCoarse, kFine };

// Attention prior over utterance positions. Coarse entries are 1 for
// relevant words and r_c otherwise; fine entries are r_f for relevant words
// and 1 otherwise.
struct PriorVector {
  std::vector<double> q;
  Stage stage = Stage::kCoarse;
};

// u.v / (|u| |v|); 0 when either norm is 0. Throws DataError on length
// mismatch.
double Cosine(std::span<const double> u, std::span<const double> v);

// Positions of the k utterance tokens most similar (cosine) to the mean
// vector of the domain's query words. Ties go to the leftmost position;
// tokens without a vector rank below every embedded one. k is capped at the
// utterance length. Result is sorted ascending. Throws DataError naming the
// domain when none of the query words has a vector.
std::vector<int> DomainRelevantPositions(std::span<const std::string> utterance,
                                         std::span<const std::string> query_words,
                                         const WordVectors &vectors, int k,
                                         std::string_view domain_name);

PriorVector BuildPrior(std::span<const int> relevant, int length, Stage stage,
                       double r_coarse, double r_fine);

// Per-domain query words; a domain without an entry is queried by its name.
struct RelevanceSettings {
  int k = 2;
  std::map<std::string, std::vector<std::string>> domain_queries;

  std::vector<std::string> QueryFor(const std::string &domain) const;
};

}  // namespace adaparse

#endif  // ADAPARSE_RELEVANCE_H_
