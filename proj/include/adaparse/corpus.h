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

// Multi-domain parallel data: TSV ingestion, adaptation splits,
// vocabularies and pretrained embedding tables.
//
// Corpus lines are
//   <domain> \t <utterance tokens> \t <logical form tokens>
// with tokens separated by spaces.

#ifndef ADAPARSE_CORPUS_H_
#define ADAPARSE_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "adaparse/tensor.h"

namespace adaparse {

using TokenSeq = std::vector<std::string>;

struct Domain {
  std::string name;
  int id = 0;
};

struct Instance {
  int domain = 0;
  TokenSeq utterance;
  TokenSeq logical_form;

  friend bool operator==(const Instance &, const Instance &) = default;
};

// Instances grouped by domain. Domain ids are dense from 0 in order of first
// appearance; names are unique.
class Corpus {
 public:
  int AddDomain(const std::string &name);
  // -1 if absent.
  int FindDomain(std::string_view name) const;

  const std::vector<Domain> &domains() const { return domains_; }
  const std::vector<Instance> &instances(int domain) const { return by_domain_.at(domain); }
  void Add(Instance instance);
  std::size_t TotalSize() const;

 private:
  std::vector<Domain> domains_;
  std::vector<std::vector<Instance>> by_domain_;
};

inline constexpr int kDefaultMaxUtteranceLen = 100;
inline constexpr int kDefaultMaxLogicalFormLen = 200;

// Throws DataError naming the line on malformed input or over-length
// instances.
Corpus LoadCorpus(const std::filesystem::path &path,
                  int max_utterance_len = kDefaultMaxUtteranceLen,
                  int max_lf_len = kDefaultMaxLogicalFormLen);
Corpus ParseCorpus(std::istream &in, int max_utterance_len = kDefaultMaxUtteranceLen,
                   int max_lf_len = kDefaultMaxLogicalFormLen);

struct AdaptationDataset {
  std::vector<Domain> domains;
  int target_domain = -1;
  std::vector<Instance> source_train;
  std::vector<Instance> source_dev;
  std::vector<Instance> target_train;
  std::vector<Instance> target_dev;
  std::vector<Instance> target_test;
  std::uint64_t seed = 0;

  std::vector<int> SourceDomains() const;
};

struct SplitOptions {
  double target_fraction = 0.10;
  double dev_fraction = 0.20;
  std::uint64_t seed = 1;
};

// Per domain, round(dev_fraction * pool) instances (half away from zero) are
// drawn uniformly as dev, the rest is train. The target train list is then
// subsampled to round(target_fraction * size), at least 1. Subsamples are
// prefixes of a fixed seeded permutation, so smaller fractions give subsets
// of larger ones. Lists keep corpus order. Target test instances come from
// `test` (its target-domain instances) when given.
AdaptationDataset MakeAdaptationSplit(const Corpus &corpus, std::string_view target_domain,
                                      const SplitOptions &options,
                                      const Corpus *test = nullptr);

// Token <-> index map with PAD, BOS, EOS, UNK fixed at 0..3.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumReserved = 4;

  Vocabulary();
  // Reserved tokens first, then `tokens` in the given order.
  static Vocabulary FromTokens(std::span<const std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  // UNK for unknown tokens.
  int Index(std::string_view token) const;
  bool Contains(std::string_view token) const;
  const std::string &Token(int index) const { return tokens_.at(index); }
  const std::vector<std::string> &tokens() const { return tokens_; }
  // Non-reserved tokens in index order.
  std::vector<std::string> RegularTokens() const;

  std::vector<int> Encode(std::span<const std::string> tokens) const;
  TokenSeq Decode(std::span<const int> ids) const;

  friend bool operator==(const Vocabulary &a, const Vocabulary &b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

extern const char *const kReservedTokens[Vocabulary::kNumReserved];

// Every token with frequency >= min_count, ordered by frequency descending
// then lexicographically.
Vocabulary BuildVocab(std::span<const TokenSeq> sequences, int min_count = 1);
std::vector<TokenSeq> Utterances(std::span<const Instance> instances);
std::vector<TokenSeq> LogicalForms(std::span<const Instance> instances);

// Pretrained vectors read from "word v1 ... v_dim" lines.
class WordVectors {
 public:
  // Throws DataError naming the word on a dimension mismatch.
  static WordVectors Read(const std::filesystem::path &path, int dim);
  static WordVectors Parse(std::istream &in, int dim, const std::string &source = "<stream>");

  int dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  // nullptr when the word has no vector.
  const std::vector<double> *Find(std::string_view word) const;
  void Set(const std::string &word, std::vector<double> vector);

 private:
  int dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

struct EmbeddingTable {
  Tensor matrix;                // vocab size x dim
  std::vector<bool> pretrained; // row came from the vectors file
  int dim = 0;
};

// Rows for words present in `vectors` are copied. Others, reserved tokens
// included, are uniform in [-0.08, 0.08] drawn from `seed`. PAD is zero.
EmbeddingTable LoadEmbeddings(const WordVectors &vectors, const Vocabulary &vocab,
                              std::uint64_t seed);
EmbeddingTable LoadEmbeddings(const std::filesystem::path &path, const Vocabulary &vocab,
                              int dim, std::uint64_t seed);

inline constexpr double kEmbeddingInitRange = 0.08;

}  // namespace adaparse

#endif  // ADAPARSE_CORPUS_H_
