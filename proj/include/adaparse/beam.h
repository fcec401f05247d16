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

// Beam search over any step model providing
//
//   State Start() const;
//   Expansion Expand(const State &) const;   // Expansion::log_probs
//   State Extend(const State &, const Expansion &, int token) const;
//   int eos() const;
//
// Disallowed tokens carry a log-probability of -infinity. Scores are sums of
// log-probabilities without length normalization. Ties go to the
// lexicographically smaller token sequence.

#ifndef ADAPARSE_BEAM_H_
#define ADAPARSE_BEAM_H_

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "adaparse/error.h"

namespace adaparse {

struct BeamResult {
  std::vector<int> tokens;  // without EOS
  double score = 0.0;
  bool finished = false;
};

namespace internal {

// Lexicographic comparison of prefix + [token] sequences without building
// them. token < 0 means "no extra token".
inline bool SequenceLess(const std::vector<int> &a, int a_tok, const std::vector<int> &b,
                         int b_tok) {
  const std::size_t na = a.size() + (a_tok >= 0 ? 1 : 0);
  const std::size_t nb = b.size() + (b_tok >= 0 ? 1 : 0);
  for (std::size_t i = 0; i < std::min(na, nb); ++i) {
    const int x = i < a.size() ? a[i] : a_tok;
    const int y = i < b.size() ? b[i] : b_tok;
    if (x != y) return x < y;
  }
  return na < nb;
}

}  // namespace internal

template <typename Model>
BeamResult BeamSearch(const Model &model, int beam_size, int max_len) {
  if (beam_size < 1) throw UsageError("beam size must be at least 1");
  if (max_len < 1) throw UsageError("max decode length must be at least 1");
  using State = decltype(model.Start());

  struct Hyp {
    std::vector<int> tokens;
    double score = 0.0;
    bool finished = false;
    std::optional<State> state;
  };
  struct Candidate {
    int parent;
    int token;  // -1 carries a finished parent over unchanged
    double score;
  };

  std::vector<Hyp> beam(1);
  beam[0].state.emplace(model.Start());
  const int eos = model.eos();

  for (int step = 0; step < max_len; ++step) {
    bool all_done = true;
    for (const Hyp &h : beam) all_done = all_done && h.finished;
    if (all_done) break;

    using Expansion = decltype(model.Expand(*beam[0].state));
    std::vector<std::optional<Expansion>> expansions(beam.size());
    std::vector<Candidate> candidates;
    for (int i = 0; i < static_cast<int>(beam.size()); ++i) {
      const Hyp &h = beam[i];
      if (h.finished) {
        candidates.push_back({i, -1, h.score});
        continue;
      }
      expansions[i].emplace(model.Expand(*h.state));
      const std::vector<double> &lp = expansions[i]->log_probs;
      for (int v = 0; v < static_cast<int>(lp.size()); ++v) {
        if (std::isinf(lp[v]) && lp[v] < 0) continue;
        candidates.push_back({i, v, h.score + lp[v]});
      }
    }
    if (candidates.empty()) break;

    const auto better = [&](const Candidate &a, const Candidate &b) {
      if (a.score != b.score) return a.score > b.score;
      return internal::SequenceLess(beam[a.parent].tokens, a.token, beam[b.parent].tokens,
                                    b.token);
    };
    const std::size_t keep = std::min<std::size_t>(beam_size, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end(), better);

    std::vector<Hyp> next;
    next.reserve(keep);
    for (std::size_t c = 0; c < keep; ++c) {
      const Candidate &cand = candidates[c];
      const Hyp &parent = beam[cand.parent];
      Hyp h;
      h.tokens = parent.tokens;
      h.score = cand.score;
      if (cand.token < 0) {
        h.finished = true;
      } else {
        h.tokens.push_back(cand.token);
        h.finished = cand.token == eos;
        if (!h.finished) {
          h.state.emplace(model.Extend(*parent.state, *expansions[cand.parent], cand.token));
        }
      }
      next.push_back(std::move(h));
    }
    beam = std::move(next);
  }

  // Best finished hypothesis, else best unfinished. The beam is sorted.
  const Hyp *best = nullptr;
  for (const Hyp &h : beam) {
    if (h.finished) {
      best = &h;
      break;
    }
  }
  if (best == nullptr) best = &beam.front();
  BeamResult out;
  out.tokens = best->tokens;
  out.finished = best->finished;
  if (out.finished && !out.tokens.empty() && out.tokens.back() == eos) out.tokens.pop_back();
  out.score = best->score;
  return out;
}

// Argmax at every step, lowest token index on ties.
template <typename Model>
BeamResult GreedySearch(const Model &model, int max_len) {
  if (max_len < 1) throw UsageError("max decode length must be at least 1");
  BeamResult out;
  auto state = model.Start();
  for (int step = 0; step < max_len; ++step) {
    const auto e = model.Expand(state);
    int best = -1;
    for (int v = 0; v < static_cast<int>(e.log_probs.size()); ++v) {
      if (std::isinf(e.log_probs[v]) && e.log_probs[v] < 0) continue;
      if (best < 0 || e.log_probs[v] > e.log_probs[best]) best = v;
    }
    if (best < 0) break;
    out.score += e.log_probs[best];
    if (best == model.eos()) {
      out.finished = true;
      break;
    }
    out.tokens.push_back(best);
    state = model.Extend(state, e, best);
  }
  return out;
}

}  // namespace adaparse

#endif  // ADAPARSE_BEAM_H_
