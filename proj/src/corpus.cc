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

#include "adaparse/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "adaparse/error.h"
#include "adaparse/fileutil.h"
#include "adaparse/random.h"

namespace adaparse {

const char *const kReservedTokens[Vocabulary::kNumReserved] = {"<pad>", "<s>", "</s>",
                                                               "<unk>"};

int Corpus::AddDomain(const std::string &name) {
  const int existing = FindDomain(name);
  if (existing >= 0) return existing;
  const int id = static_cast<int>(domains_.size());
  domains_.push_back({name, id});
  by_domain_.emplace_back();
  return id;
}

int Corpus::FindDomain(std::string_view name) const {
  for (const Domain &d : domains_) {
    if (d.name == name) return d.id;
  }
  return -1;
}

void Corpus::Add(Instance instance) {
  if (instance.domain < 0 || instance.domain >= static_cast<int>(domains_.size())) {
    throw DataError("instance refers to unknown domain id " +
                    std::to_string(instance.domain));
  }
  by_domain_[instance.domain].push_back(std::move(instance));
}

std::size_t Corpus::TotalSize() const {
  std::size_t n = 0;
  for (const auto &v : by_domain_) n += v.size();
  return n;
}

Corpus ParseCorpus(std::istream &in, int max_utterance_len, int max_lf_len) {
  Corpus corpus;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos
                                                                   : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() != 3) {
      throw DataError(where + ": expected 3 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }
    Instance inst;
    TokenSeq domain_tokens = SplitTokens(fields[0]);
    inst.utterance = SplitTokens(fields[1]);
    inst.logical_form = SplitTokens(fields[2]);
    if (domain_tokens.size() != 1) {
      throw DataError(where + ": domain field must be a single non-empty name");
    }
    if (inst.utterance.empty()) throw DataError(where + ": empty utterance field");
    if (inst.logical_form.empty()) throw DataError(where + ": empty logical form field");
    if (static_cast<int>(inst.utterance.size()) > max_utterance_len) {
      throw DataError(where + ": utterance has " + std::to_string(inst.utterance.size()) +
                      " tokens, exceeding max_utterance_len=" +
                      std::to_string(max_utterance_len));
    }
    if (static_cast<int>(inst.logical_form.size()) > max_lf_len) {
      throw DataError(where + ": logical form has " +
                      std::to_string(inst.logical_form.size()) +
                      " tokens, exceeding max_lf_len=" + std::to_string(max_lf_len));
    }
    inst.domain = corpus.AddDomain(domain_tokens[0]);
    corpus.Add(std::move(inst));
  }
  return corpus;
}

Corpus LoadCorpus(const std::filesystem::path &path, int max_utterance_len,
                  int max_lf_len) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus " + path.string());
  try {
    return ParseCorpus(in, max_utterance_len, max_lf_len);
  } catch (const DataError &e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<int> AdaptationDataset::SourceDomains() const {
  std::vector<int> out;
  for (const Domain &d : domains) {
    if (d.id != target_domain) out.push_back(d.id);
  }
  return out;
}

namespace {

int RoundHalfAway(double x) { return static_cast<int>(std::round(x)); }

// Chooses `count` of `n` indices via the seeded permutation; returns a
// membership mask.
std::vector<bool> ChooseSubset(int n, int count, std::mt19937_64 rng) {
  std::vector<int> perm = Permutation(n, rng);
  std::vector<bool> chosen(n, false);
  for (int i = 0; i < count; ++i) chosen[perm[i]] = true;
  return chosen;
}

}  // namespace

AdaptationDataset MakeAdaptationSplit(const Corpus &corpus, std::string_view target_domain,
                                      const SplitOptions &options, const Corpus *test) {
  const int target = corpus.FindDomain(target_domain);
  if (target < 0) {
    throw DataError("unknown target domain '" + std::string(target_domain) + "'");
  }
  if (!(options.target_fraction > 0.0 && options.target_fraction <= 1.0)) {
    throw UsageError("target_fraction must be in (0, 1], got " +
                    FormatDouble(options.target_fraction));
  }
  if (!(options.dev_fraction >= 0.0 && options.dev_fraction < 1.0)) {
    throw UsageError("dev_fraction must be in [0, 1), got " +
                    FormatDouble(options.dev_fraction));
  }

  AdaptationDataset ds;
  ds.domains = corpus.domains();
  ds.target_domain = target;
  ds.seed = options.seed;

  for (const Domain &d : corpus.domains()) {
    const std::vector<Instance> &pool = corpus.instances(d.id);
    const int n = static_cast<int>(pool.size());
    const int n_dev = std::min(n, RoundHalfAway(options.dev_fraction * n));
    const std::vector<bool> is_dev =
        ChooseSubset(n, n_dev, SeededRng(options.seed, {0xde5u, static_cast<std::uint64_t>(d.id)}));
    std::vector<Instance> train, dev;
    for (int i = 0; i < n; ++i) (is_dev[i] ? dev : train).push_back(pool[i]);

    if (d.id != target) {
      ds.source_train.insert(ds.source_train.end(), train.begin(), train.end());
      ds.source_dev.insert(ds.source_dev.end(), dev.begin(), dev.end());
      continue;
    }
    ds.target_dev = std::move(dev);
    const int m = static_cast<int>(train.size());
    if (m > 0) {
      const int keep = std::clamp(RoundHalfAway(options.target_fraction * m), 1, m);
      const std::vector<bool> kept = ChooseSubset(m, keep, SeededRng(options.seed, {0x7a6u}));
      for (int i = 0; i < m; ++i) {
        if (kept[i]) ds.target_train.push_back(train[i]);
      }
    }
  }

  if (test != nullptr) {
    const int test_target = test->FindDomain(target_domain);
    if (test_target >= 0) {
      for (Instance inst : test->instances(test_target)) {
        inst.domain = target;
        ds.target_test.push_back(std::move(inst));
      }
    }
  }
  return ds;
}

Vocabulary::Vocabulary() {
  for (const char *t : kReservedTokens) {
    index_[t] = static_cast<int>(tokens_.size());
    tokens_.emplace_back(t);
  }
}

Vocabulary Vocabulary::FromTokens(std::span<const std::string> tokens) {
  Vocabulary v;
  for (const std::string &t : tokens) {
    if (v.index_.count(t)) throw DataError("duplicate vocabulary token '" + t + "'");
    v.index_[t] = static_cast<int>(v.tokens_.size());
    v.tokens_.push_back(t);
  }
  return v;
}

int Vocabulary::Index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::Contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

std::vector<std::string> Vocabulary::RegularTokens() const {
  return std::vector<std::string>(tokens_.begin() + kNumReserved, tokens_.end());
}

std::vector<int> Vocabulary::Encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string &t : tokens) ids.push_back(Index(t));
  return ids;
}

TokenSeq Vocabulary::Decode(std::span<const int> ids) const {
  TokenSeq out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(Token(id));
  return out;
}

Vocabulary BuildVocab(std::span<const TokenSeq> sequences, int min_count) {
  std::map<std::string, int> counts;
  for (const TokenSeq &seq : sequences) {
    for (const std::string &t : seq) ++counts[t];
  }
  std::vector<std::pair<std::string, int>> entries;
  for (auto &[token, count] : counts) {
    if (count < min_count) continue;
    bool reserved = false;
    for (const char *r : kReservedTokens) reserved |= token == r;
    if (!reserved) entries.emplace_back(token, count);
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(entries.size());
  for (auto &e : entries) tokens.push_back(e.first);
  return Vocabulary::FromTokens(tokens);
}

std::vector<TokenSeq> Utterances(std::span<const Instance> instances) {
  std::vector<TokenSeq> out;
  for (const Instance &i : instances) out.push_back(i.utterance);
  return out;
}

std::vector<TokenSeq> LogicalForms(std::span<const Instance> instances) {
  std::vector<TokenSeq> out;
  for (const Instance &i : instances) out.push_back(i.logical_form);
  return out;
}

WordVectors WordVectors::Parse(std::istream &in, int dim, const std::string &source) {
  if (dim <= 0) throw DataError("embedding dimension must be positive");
  WordVectors wv;
  wv.dim_ = dim;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<double> vec;
    std::string value;
    while (fields >> value) {
      try {
        std::size_t used = 0;
        vec.push_back(std::stod(value, &used));
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception &) {
        throw DataError(source + ":" + std::to_string(line_no) + ": bad value '" + value +
                        "' for word '" + word + "'");
      }
    }
    if (static_cast<int>(vec.size()) != dim) {
      throw DataError(source + ":" + std::to_string(line_no) + ": word '" + word + "' has " +
                      std::to_string(vec.size()) + " values, expected " +
                      std::to_string(dim));
    }
    wv.vectors_[word] = std::move(vec);
  }
  return wv;
}

WordVectors WordVectors::Read(const std::filesystem::path &path, int dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings " + path.string());
  return Parse(in, dim, path.string());
}

const std::vector<double> *WordVectors::Find(std::string_view word) const {
  auto it = vectors_.find(std::string(word));
  return it == vectors_.end() ? nullptr : &it->second;
}

void WordVectors::Set(const std::string &word, std::vector<double> vector) {
  if (dim_ == 0) dim_ = static_cast<int>(vector.size());
  if (static_cast<int>(vector.size()) != dim_) {
    throw DataError("word '" + word + "' has dimension " + std::to_string(vector.size()) +
                    ", expected " + std::to_string(dim_));
  }
  vectors_[word] = std::move(vector);
}

EmbeddingTable LoadEmbeddings(const WordVectors &vectors, const Vocabulary &vocab,
                              std::uint64_t seed) {
  EmbeddingTable table;
  table.dim = vectors.dim();
  table.matrix = Tensor(vocab.size(), table.dim);
  table.pretrained.assign(vocab.size(), false);
  std::mt19937_64 rng = SeededRng(seed, {0xe3bu});
  std::uniform_real_distribution<double> uniform(-kEmbeddingInitRange, kEmbeddingInitRange);
  for (int r = 0; r < vocab.size(); ++r) {
    // Draw for every row so a row's value does not depend on which other
    // words happen to be pretrained.
    std::vector<double> random(table.dim);
    for (double &v : random) v = uniform(rng);
    const std::vector<double> *found =
        r < Vocabulary::kNumReserved ? nullptr : vectors.Find(vocab.Token(r));
    const std::vector<double> &src = found != nullptr ? *found : random;
    if (r == Vocabulary::kPad) continue;
    for (int c = 0; c < table.dim; ++c) table.matrix.at(r, c) = src[c];
    table.pretrained[r] = found != nullptr;
  }
  return table;
}

EmbeddingTable LoadEmbeddings(const std::filesystem::path &path, const Vocabulary &vocab,
                              int dim, std::uint64_t seed) {
  return LoadEmbeddings(WordVectors::Read(path, dim), vocab, seed);
}

}  // namespace adaparse
