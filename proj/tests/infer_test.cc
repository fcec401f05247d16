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


#include <cmath>
#include <map>
#include <random>

#include <doctest.h>

#include "adaparse/beam.h"
#include "adaparse/fileutil.h"
#include "adaparse/infer.h"
#include "adaparse/random.h"
#include "adaparse/toy.h"

namespace adaparse {
namespace {

// Step model whose next-token distribution is a fixed random function of the
// prefix. `eos` may be -1 for "never finishes".
class TableModel {
 public:
  struct Expansion {
    std::vector<double> log_probs;
  };

  TableModel(std::uint64_t seed, int vocab, int eos) : seed_(seed), vocab_(vocab), eos_(eos) {}

  std::vector<int> Start() const { return {}; }
  Expansion Expand(const std::vector<int> &prefix) const { return {LogProbs(prefix)}; }
  std::vector<int> Extend(const std::vector<int> &prefix, const Expansion &, int token) const {
    std::vector<int> out = prefix;
    out.push_back(token);
    return out;
  }
  int eos() const { return eos_; }

  std::vector<double> LogProbs(const std::vector<int> &prefix) const {
    std::uint64_t key = 1;
    for (int t : prefix) key = key * 31 + static_cast<std::uint64_t>(t + 1);
    std::mt19937_64 rng = SeededRng(seed_, {key, prefix.size()});
    std::normal_distribution<double> n(0.0, 2.0);
    std::vector<double> logits(vocab_);
    double z = 0.0;
    for (double &l : logits) z += std::exp(l = n(rng));
    for (double &l : logits) l -= std::log(z);
    return logits;
  }

 private:
  std::uint64_t seed_;
  int vocab_;
  int eos_;
};

double SequenceScore(const TableModel &m, const std::vector<int> &seq) {
  double s = 0.0;
  std::vector<int> prefix;
  for (int t : seq) {
    s += m.LogProbs(prefix)[t];
    prefix.push_back(t);
  }
  return s;
}

TEST_CASE("wide beam equals exhaustive search over 27 sequences") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const TableModel m(seed, 3, -1);
    std::vector<int> best;
    double best_score = -INFINITY;
    int enumerated = 0;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        for (int c = 0; c < 3; ++c, ++enumerated) {
          const std::vector<int> seq = {a, b, c};
          const double s = SequenceScore(m, seq);
          if (s > best_score) {
            best_score = s;
            best = seq;
          }
        }
      }
    }
    CHECK(enumerated == 27);
    const BeamResult r = BeamSearch(m, 27, 3);
    CHECK(r.tokens == best);
    CHECK(r.score == doctest::Approx(best_score).epsilon(1e-12));
    CHECK_FALSE(r.finished);
  }
}

TEST_CASE("wide beam with an end token equals exhaustive search") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const int eos = 2;
    const TableModel m(seed, 3, eos);
    // Finished sequences of at most three tokens: a prefix over {0, 1} then EOS.
    std::vector<std::vector<int>> finished = {{eos}};
    for (int a = 0; a < 2; ++a) {
      finished.push_back({a, eos});
      for (int b = 0; b < 2; ++b) finished.push_back({a, b, eos});
    }
    std::vector<int> best;
    double best_score = -INFINITY;
    for (const auto &seq : finished) {
      const double s = SequenceScore(m, seq);
      if (s > best_score) {
        best_score = s;
        best = std::vector<int>(seq.begin(), seq.end() - 1);
      }
    }
    const BeamResult r = BeamSearch(m, 27, 3);
    CHECK(r.finished);
    CHECK(r.tokens == best);
    CHECK(r.score == doctest::Approx(best_score).epsilon(1e-12));
  }
}

TEST_CASE("beam of one equals greedy search") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    for (int eos : {-1, 3}) {
      const TableModel m(seed, 5, eos);
      const BeamResult beam = BeamSearch(m, 1, 6);
      const BeamResult greedy = GreedySearch(m, 6);
      CHECK(beam.tokens == greedy.tokens);
      CHECK(beam.finished == greedy.finished);
      CHECK(beam.score == doctest::Approx(greedy.score).epsilon(1e-12));
    }
  }
}

TEST_CASE("beam search argument checks") {
  const TableModel m(1, 3, -1);
  CHECK_THROWS_AS(BeamSearch(m, 0, 3), UsageError);
  CHECK_THROWS_AS(BeamSearch(m, 1, 0), UsageError);
}

TEST_CASE("parser output on an untrained model") {
  ToyCorpusOptions co;
  co.instances_per_domain = 8;
  const Corpus corpus = MakeToyCorpus(co);
  SplitOptions so;
  so.target_fraction = 1.0;
  so.dev_fraction = 0.0;
  const AdaptationDataset data = MakeAdaptationSplit(corpus, ToyDomainNames()[1], so);
  const WordVectors vectors = MakeToyVectors(corpus, 8, 1);
  Hyperparams hp;
  hp.embed_dim = 8;
  hp.encoder_hidden = 8;
  hp.dropout = 0.0;
  const ModelBundle bundle = BuildBundle(Strategy::kDamp, hp, data, {}, &vectors, 1);
  Preprocessor pre(bundle, &vectors);
  const Parser parser(bundle);
  for (const Instance &inst : data.target_train) {
    const Example ex = pre.Prepare(inst);
    for (int beam : {1, 3}) {
      const TokenSeq oracle = parser.ParseWithOracleSketch(ex, beam);
      CHECK_NOTHROW(Align(oracle, ex.sketch));
      const ParseResult r = parser.Parse(ex, beam);
      if (!r.fallback) CHECK_NOTHROW(Align(r.logical_form, r.sketch));
      for (const TokenSeq *seq : {&r.sketch, &r.logical_form, &oracle}) {
        for (const std::string &t : *seq) {
          CHECK(t != kReservedTokens[Vocabulary::kPad]);
          CHECK(t != kReservedTokens[Vocabulary::kBos]);
          CHECK(t != kReservedTokens[Vocabulary::kUnk]);
          CHECK(t != kReservedTokens[Vocabulary::kEos]);
        }
      }
      CHECK(static_cast<int>(r.sketch.size()) <= bundle.max_sketch_len);
      if (r.fallback) CHECK(static_cast<int>(r.logical_form.size()) <= bundle.max_lf_len);
      CHECK(parser.Parse(ex, beam).logical_form == r.logical_form);
    }
    const AttentionTrace trace = parser.TraceAttention(ex, parser.Parse(ex, 1));
    for (const AttentionStep &s : trace.coarse) {
      double total = 0.0;
      for (double w : s.weights) total += w;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(s.weights.size() == ex.utterance.size());
    }
    for (const AttentionStep &s : trace.fine) CHECK_FALSE(s.sketch_weights.empty());
  }
}

}  // namespace
}  // namespace adaparse
