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

#include "adaparse/relevance.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "adaparse/error.h"

namespace adaparse {

double Cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw DataError("cosine: length mismatch " + std::to_string(u.size()) + " vs " +
                    std::to_string(v.size()));
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::vector<int> DomainRelevantPositions(std::span<const std::string> utterance,
                                         std::span<const std::string> query_words,
                                         const WordVectors &vectors, int k,
                                         std::string_view domain_name) {
  if (k < 0) throw DataError("relevant word count must be non-negative");
  std::vector<double> query(vectors.dim(), 0.0);
  int found = 0;
  for (const std::string &w : query_words) {
    const std::vector<double> *v = vectors.Find(w);
    if (v == nullptr) continue;
    for (std::size_t i = 0; i < query.size(); ++i) query[i] += (*v)[i];
    ++found;
  }
  if (found == 0) {
    throw DataError("domain '" + std::string(domain_name) +
                    "': none of its query words has a pretrained vector");
  }
  for (double &q : query) q /= found;

  const int n = static_cast<int>(utterance.size());
  std::vector<double> score(n, -std::numeric_limits<double>::infinity());
  for (int i = 0; i < n; ++i) {
    if (const std::vector<double> *v = vectors.Find(utterance[i])) score[i] = Cosine(*v, query);
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return score[a] > score[b]; });
  order.resize(std::min(k, n));
  std::sort(order.begin(), order.end());
  return order;
}

PriorVector BuildPrior(std::span<const int> relevant, int length, Stage stage,
                       double r_coarse, double r_fine) {
  if (!(r_coarse > 1.0) || !(r_fine >= 1.0)) {
    throw DataError("prior ratios need r_c > 1 and r_f >= 1");
  }
  std::vector<bool> is_relevant(length, false);
  for (int p : relevant) {
    if (p < 0 || p >= length) {
      throw DataError("relevant position " + std::to_string(p) + " out of range for length " +
                      std::to_string(length));
    }
    is_relevant[p] = true;
  }
  PriorVector prior;
  prior.stage = stage;
  prior.q.resize(length);
  for (int i = 0; i < length; ++i) {
    if (stage == Stage::kCoarse) {
      prior.q[i] = is_relevant[i] ? 1.0 : r_coarse;
    } else {
      prior.q[i] = is_relevant[i] ? r_fine : 1.0;
    }
  }
  return prior;
}

std::vector<std::string> RelevanceSettings::QueryFor(const std::string &domain) const {
  auto it = domain_queries.find(domain);
  if (it != domain_queries.end() && !it->second.empty()) return it->second;
  return {domain};
}

}  // namespace adaparse
