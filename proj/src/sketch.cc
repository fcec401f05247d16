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

#include "adaparse/sketch.h"

#include <algorithm>
#include <charconv>

namespace adaparse {

void TokenShareTable::Record(const std::string &token, int source_index) {
  if (source_index < 0 || source_index >= num_source_domains_) {
    throw DataError("source domain index " + std::to_string(source_index) +
                    " out of range for " + std::to_string(num_source_domains_) +
                    " source domains");
  }
  shares_[token].insert(source_index);
}

const std::set<int> &TokenShareTable::Shares(std::string_view token) const {
  static const std::set<int> kEmpty;
  auto it = shares_.find(token);
  return it == shares_.end() ? kEmpty : it->second;
}

TokenShareTable ComputeTokenShares(std::span<const std::vector<Instance>> source_corpora) {
  if (source_corpora.empty()) throw DataError("token shares need at least one source domain");
  TokenShareTable table(static_cast<int>(source_corpora.size()));
  for (std::size_t d = 0; d < source_corpora.size(); ++d) {
    for (const Instance &inst : source_corpora[d]) {
      for (const std::string &t : inst.logical_form) table.Record(t, static_cast<int>(d));
    }
  }
  return table;
}

TokenShareTable ComputeTokenShares(const AdaptationDataset &dataset) {
  const std::vector<int> sources = dataset.SourceDomains();
  std::vector<std::vector<Instance>> grouped(sources.size());
  for (const Instance &inst : dataset.source_train) {
    auto it = std::find(sources.begin(), sources.end(), inst.domain);
    if (it == sources.end()) {
      throw DataError("source_train holds an instance of a non-source domain");
    }
    grouped[it - sources.begin()].push_back(inst);
  }
  return ComputeTokenShares(grouped);
}

bool IsParenthesis(std::string_view token) { return token == "(" || token == ")"; }

TokenClass ClassifyToken(std::string_view token, const TokenShareTable &table) {
  if (IsParenthesis(token)) return TokenClass::kGeneral;
  const std::size_t shared = table.Shares(token).size();
  // Strictly more than half: 2 * shared > n avoids floating point.
  return 2 * static_cast<long long>(shared) > table.num_source_domains() ? TokenClass::kGeneral
                                                                       : TokenClass::kSpecific;
}

TokenClassifier MakeClassifier(const TokenShareTable &table) {
  return [table](std::string_view token) { return ClassifyToken(token, table); };
}

std::optional<Placeholder> ParsePlaceholder(std::string_view token) {
  const std::size_t at = token.rfind('@');
  if (at == std::string_view::npos || at == 0 || at + 1 >= token.size()) return std::nullopt;
  const std::string_view digits = token.substr(at + 1);
  if (digits[0] == '0') return std::nullopt;
  int slots = 0;
  auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), slots);
  if (ec != std::errc() || end != digits.data() + digits.size() || slots < 1) {
    return std::nullopt;
  }
  return Placeholder{std::string(token.substr(0, at)), slots};
}

std::string FormatPlaceholder(std::string_view head, int slots) {
  return std::string(head) + "@" + std::to_string(slots);
}

InducedSketch InduceSketch(std::span<const std::string> logical_form,
                           const TokenClassifier &classify) {
  InducedSketch out;
  const int n = static_cast<int>(logical_form.size());
  int i = 0;
  while (i < n) {
    const bool specific =
        !IsParenthesis(logical_form[i]) && classify(logical_form[i]) == TokenClass::kSpecific;
    if (!specific) {
      out.sketch.push_back(logical_form[i]);
      out.alignment.spans.push_back({i, 1});
      ++i;
      continue;
    }
    int j = i;
    while (j < n && !IsParenthesis(logical_form[j]) &&
           classify(logical_form[j]) == TokenClass::kSpecific) {
      ++j;
    }
    const int k = j - i;
    // The head must sit right before the run so the placeholder covers a
    // contiguous stretch of the logical form.
    const bool has_head = !out.sketch.empty() && out.alignment.spans.back().lf_begin == i - 1 &&
                          out.alignment.spans.back().length == 1 &&
                          !IsParenthesis(out.sketch.back()) && out.sketch.back() != kHoleHead &&
                          !ParsePlaceholder(out.sketch.back()).has_value();
    if (has_head) {
      out.sketch.back() = FormatPlaceholder(out.sketch.back(), k);
      out.alignment.spans.back().length = k + 1;
    } else {
      out.sketch.push_back(FormatPlaceholder(kHoleHead, k));
      out.alignment.spans.push_back({i, k});
    }
    i = j;
  }
  return out;
}

Alignment Align(std::span<const std::string> logical_form, std::span<const std::string> sketch) {
  Alignment alignment;
  const int n = static_cast<int>(logical_form.size());
  int pos = 0;
  for (std::size_t s = 0; s < sketch.size(); ++s) {
    const std::string where = "sketch position " + std::to_string(s) + " ('" + sketch[s] + "')";
    std::optional<Placeholder> ph = ParsePlaceholder(sketch[s]);
    int length = 1;
    if (ph.has_value()) {
      length = ph->slots + (ph->has_head() ? 1 : 0);
      if (pos + length > n) {
        throw AlignmentError("skeleton mismatch at " + where + ": logical form too short");
      }
      if (ph->has_head() && logical_form[pos] != ph->head) {
        throw AlignmentError("skeleton mismatch at " + where + ": logical form has '" +
                             logical_form[pos] + "'");
      }
    } else {
      if (pos >= n) {
        throw AlignmentError("skeleton mismatch at " + where + ": logical form too short");
      }
      if (logical_form[pos] != sketch[s]) {
        throw AlignmentError("skeleton mismatch at " + where + ": logical form has '" +
                             logical_form[pos] + "'");
      }
    }
    alignment.spans.push_back({pos, length});
    pos += length;
  }
  if (pos != n) {
    throw AlignmentError("skeleton mismatch at sketch position " + std::to_string(sketch.size()) +
                         ": " + std::to_string(n - pos) + " logical form tokens left over");
  }
  return alignment;
}

std::vector<TokenSeq> SlotFillers(std::span<const std::string> logical_form,
                                  std::span<const std::string> sketch,
                                  const Alignment &alignment) {
  if (alignment.spans.size() != sketch.size()) {
    throw AlignmentError("alignment does not match sketch length");
  }
  std::vector<TokenSeq> fillers;
  for (std::size_t s = 0; s < sketch.size(); ++s) {
    std::optional<Placeholder> ph = ParsePlaceholder(sketch[s]);
    if (!ph.has_value()) continue;
    const AlignedSpan &span = alignment.spans[s];
    const int begin = span.lf_begin + (ph->has_head() ? 1 : 0);
    const int end = span.lf_begin + span.length;
    if (end > static_cast<int>(logical_form.size())) {
      throw AlignmentError("alignment span exceeds logical form");
    }
    fillers.emplace_back(logical_form.begin() + begin, logical_form.begin() + end);
  }
  return fillers;
}

TokenSeq Reconstruct(std::span<const std::string> sketch, const Alignment &alignment,
                     std::span<const TokenSeq> fillers) {
  if (alignment.spans.size() != sketch.size()) {
    throw AlignmentError("alignment covers " + std::to_string(alignment.spans.size()) +
                         " sketch tokens, sketch has " + std::to_string(sketch.size()));
  }
  int total = 0;
  for (const AlignedSpan &span : alignment.spans) {
    if (span.lf_begin != total || span.length < 1) {
      throw AlignmentError("alignment is not a contiguous ordered cover");
    }
    total += span.length;
  }
  TokenSeq out(total);
  std::size_t next_filler = 0;
  for (std::size_t s = 0; s < sketch.size(); ++s) {
    const AlignedSpan &span = alignment.spans[s];
    std::optional<Placeholder> ph = ParsePlaceholder(sketch[s]);
    if (!ph.has_value()) {
      if (span.length != 1) throw AlignmentError("plain sketch token spans several positions");
      out[span.lf_begin] = sketch[s];
      continue;
    }
    if (next_filler >= fillers.size()) throw AlignmentError("missing filler for " + sketch[s]);
    const TokenSeq &fill = fillers[next_filler++];
    const int offset = ph->has_head() ? 1 : 0;
    if (static_cast<int>(fill.size()) != ph->slots || span.length != ph->slots + offset) {
      throw AlignmentError("filler size does not match placeholder " + sketch[s]);
    }
    if (ph->has_head()) out[span.lf_begin] = ph->head;
    std::copy(fill.begin(), fill.end(), out.begin() + span.lf_begin + offset);
  }
  if (next_filler != fillers.size()) throw AlignmentError("unused fillers");
  return out;
}

bool IsWellFormedSketch(std::span<const std::string> sketch) {
  if (sketch.empty()) return false;
  int depth = 0;
  for (const std::string &t : sketch) {
    if (t == "(") {
      ++depth;
    } else if (t == ")") {
      if (--depth < 0) return false;
    } else if (t.find('@') != std::string::npos && !ParsePlaceholder(t).has_value()) {
      return false;
    }
  }
  return depth == 0;
}

bool ExactMatch(std::span<const std::string> pred, std::span<const std::string> gold) {
  return std::equal(pred.begin(), pred.end(), gold.begin(), gold.end());
}

double EmRate(std::span<const std::pair<TokenSeq, TokenSeq>> pairs) {
  if (pairs.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto &[pred, gold] : pairs) hits += ExactMatch(pred, gold) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

}  // namespace adaparse
