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

// Domain-general sketches of logical forms.
//
// A logical-form token is "general" when it occurs in the logical forms of
// more than half of the source domains (parentheses always are); every other
// token is "specific". A sketch keeps general tokens verbatim and collapses
// each maximal run of k specific tokens, together with the general token
// immediately before it, into one placeholder "head@k":
//
//   ( getProperty ( singleton en.meeting ) ...   ->   ( getProperty ( singleton@1 ) ...
//
// A run with no usable head (first in its group, or preceded by a
// parenthesis) becomes "hole@k".

#ifndef ADAPARSE_SKETCH_H_
#define ADAPARSE_SKETCH_H_

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adaparse/corpus.h"
#include "adaparse/error.h"

namespace adaparse {

inline constexpr std::string_view kHoleHead = "hole";

// token -> set of source-domain indices whose logical forms contain it.
class TokenShareTable {
 public:
  explicit TokenShareTable(int num_source_domains = 0)
      : num_source_domains_(num_source_domains) {}

  void Record(const std::string &token, int source_index);
  // Empty set for unseen tokens.
  const std::set<int> &Shares(std::string_view token) const;
  int num_source_domains() const { return num_source_domains_; }
  const std::map<std::string, std::set<int>, std::less<>> &entries() const { return shares_; }

  friend bool operator==(const TokenShareTable &, const TokenShareTable &) = default;

 private:
  int num_source_domains_;
  std::map<std::string, std::set<int>, std::less<>> shares_;
};

// Element i of `source_corpora` holds the instances of source domain i.
TokenShareTable ComputeTokenShares(std::span<const std::vector<Instance>> source_corpora);
// Groups the dataset's source-train instances by source domain first.
TokenShareTable ComputeTokenShares(const AdaptationDataset &dataset);

enum class TokenClass { kGeneral, kSpecific };

bool IsParenthesis(std::string_view token);
TokenClass ClassifyToken(std::string_view token, const TokenShareTable &table);

using TokenClassifier = std::function<TokenClass(std::string_view)>;
// The classifier holds its own copy of `table`.
TokenClassifier MakeClassifier(const TokenShareTable &table);

struct Placeholder {
  std::string head;  // "hole" when headless
  int slots = 0;
  bool has_head() const { return head != kHoleHead; }
};

// Parses "head@k" with k >= 1; nullopt for ordinary tokens.
std::optional<Placeholder> ParsePlaceholder(std::string_view token);
std::string FormatPlaceholder(std::string_view head, int slots);

// Where sketch token i lands in the logical form: `lf_begin` is the first
// covered position and `length` is 1 for a plain token, k + 1 for head@k and
// k for hole@k.
struct AlignedSpan {
  int lf_begin = 0;
  int length = 0;
  friend bool operator==(const AlignedSpan &, const AlignedSpan &) = default;
};

struct Alignment {
  std::vector<AlignedSpan> spans;
  friend bool operator==(const Alignment &, const Alignment &) = default;
};

struct InducedSketch {
  TokenSeq sketch;
  Alignment alignment;
};

class AlignmentError : public DataError {
 public:
  using DataError::DataError;
};

InducedSketch InduceSketch(std::span<const std::string> logical_form,
                           const TokenClassifier &classify);

// Parallel walk of `sketch` against `logical_form`. Throws AlignmentError at
// the first sketch position whose general token disagrees, or when lengths
// do not add up.
Alignment Align(std::span<const std::string> logical_form, std::span<const std::string> sketch);

// Specific tokens filling each placeholder, in sketch order.
std::vector<TokenSeq> SlotFillers(std::span<const std::string> logical_form,
                                  std::span<const std::string> sketch,
                                  const Alignment &alignment);

// Rebuilds the logical form from a sketch, its alignment and one filler list
// per placeholder. Throws AlignmentError on any inconsistency.
TokenSeq Reconstruct(std::span<const std::string> sketch, const Alignment &alignment,
                     std::span<const TokenSeq> fillers);

// True when parentheses balance and every "@" token is a valid placeholder.
bool IsWellFormedSketch(std::span<const std::string> sketch);

bool ExactMatch(std::span<const std::string> pred, std::span<const std::string> gold);
// Fraction of matching pairs; 0 for an empty list.
double EmRate(std::span<const std::pair<TokenSeq, TokenSeq>> pairs);

}  // namespace adaparse

#endif  // ADAPARSE_SKETCH_H_
