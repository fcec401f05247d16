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

#include "adaparse/pipeline.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>

#include <json.hpp>

#include "adaparse/error.h"
#include "adaparse/fileutil.h"

namespace adaparse {

namespace {

using nlohmann::json;

constexpr int kMetaVersion = 1;

double ParseDouble(const std::string &key, const std::string &value) {
  double out = 0.0;
  const char *end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw UsageError("hyperparameter " + key + ": '" + value + "' is not a number");
  }
  return out;
}

int ParseInt(const std::string &key, const std::string &value) {
  int out = 0;
  const char *end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw UsageError("hyperparameter " + key + ": '" + value + "' is not an integer");
  }
  return out;
}

bool ParseBool(const std::string &key, const std::string &value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError("hyperparameter " + key + ": '" + value + "' is not a boolean");
}

struct Field {
  const char *key;
  std::function<void(Hyperparams &, const std::string &, const std::string &)> set;
  std::function<std::string(const Hyperparams &)> get;
};

#define ADAPARSE_INT_FIELD(name)                                                        \
  Field {                                                                               \
    #name,                                                                              \
        [](Hyperparams &h, const std::string &k, const std::string &v) {                \
          h.name = ParseInt(k, v);                                                      \
        },                                                                              \
        [](const Hyperparams &h) { return std::to_string(h.name); }                     \
  }
#define ADAPARSE_DOUBLE_FIELD(name)                                                     \
  Field {                                                                               \
    #name,                                                                              \
        [](Hyperparams &h, const std::string &k, const std::string &v) {                \
          h.name = ParseDouble(k, v);                                                   \
        },                                                                              \
        [](const Hyperparams &h) { return FormatDouble(h.name); }                       \
  }
#define ADAPARSE_BOOL_FIELD(name)                                                       \
  Field {                                                                               \
    #name,                                                                              \
        [](Hyperparams &h, const std::string &k, const std::string &v) {                \
          h.name = ParseBool(k, v);                                                     \
        },                                                                              \
        [](const Hyperparams &h) { return std::string(h.name ? "true" : "false"); }     \
  }

const std::vector<Field> &Fields() {
  static const std::vector<Field> fields = {
      ADAPARSE_INT_FIELD(embed_dim),
      ADAPARSE_INT_FIELD(encoder_hidden),
      ADAPARSE_BOOL_FIELD(hidden_per_direction),
      ADAPARSE_DOUBLE_FIELD(r_coarse),
      ADAPARSE_DOUBLE_FIELD(r_fine),
      ADAPARSE_DOUBLE_FIELD(lambda_coarse),
      ADAPARSE_DOUBLE_FIELD(lambda_fine),
      ADAPARSE_DOUBLE_FIELD(dropout),
      ADAPARSE_DOUBLE_FIELD(l2),
      ADAPARSE_INT_FIELD(batch_size),
      ADAPARSE_DOUBLE_FIELD(learning_rate),
      ADAPARSE_DOUBLE_FIELD(rmsprop_decay),
      ADAPARSE_DOUBLE_FIELD(rmsprop_epsilon),
      ADAPARSE_DOUBLE_FIELD(clip_norm),
      ADAPARSE_INT_FIELD(beam_size),
      ADAPARSE_INT_FIELD(relevant_k),
      ADAPARSE_DOUBLE_FIELD(max_len_factor),
      ADAPARSE_DOUBLE_FIELD(init_range),
      ADAPARSE_BOOL_FIELD(reverse_grad_discriminator),
      ADAPARSE_BOOL_FIELD(constrained_fine_decoding),
  };
  return fields;
}

#undef ADAPARSE_INT_FIELD
#undef ADAPARSE_DOUBLE_FIELD
#undef ADAPARSE_BOOL_FIELD

int DecodeLimit(std::span<const TokenSeq> seqs, double factor) {
  std::size_t longest = 1;
  for (const TokenSeq &s : seqs) longest = std::max(longest, s.size());
  return static_cast<int>(std::ceil(factor * static_cast<double>(longest))) + 1;
}

template <typename T>
T MetaField(const json &meta, const char *key, const std::string &path) {
  if (!meta.contains(key)) throw ModelError(path + ": metadata lacks '" + key + "'");
  try {
    return meta.at(key).get<T>();
  } catch (const json::exception &e) {
    throw ModelError(path + ": metadata field '" + key + "': " + e.what());
  }
}

}  // namespace

bool SetHyperparam(Hyperparams &hp, const std::string &key, const std::string &value) {
  for (const Field &f : Fields()) {
    if (key == f.key) {
      f.set(hp, key, value);
      return true;
    }
  }
  return false;
}

std::vector<std::pair<std::string, std::string>> HyperparamEntries(const Hyperparams &hp) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Field &f : Fields()) out.emplace_back(f.key, f.get(hp));
  return out;
}

const std::string &ModelBundle::DomainName(int id) const {
  for (const Domain &d : domains) {
    if (d.id == id) return d.name;
  }
  throw DataError("unknown domain id " + std::to_string(id));
}

int ModelBundle::FindDomain(const std::string &name) const {
  for (const Domain &d : domains) {
    if (d.name == name) return d.id;
  }
  return -1;
}

ModelBundle BuildBundle(Strategy strategy, const Hyperparams &hp, const AdaptationDataset &data,
                        const RelevanceSettings &relevance, const WordVectors *vectors,
                        std::uint64_t seed) {
  hp.Validate();
  if (data.target_train.empty()) throw DataError("target domain has no training instances");
  ModelBundle b;
  b.strategy = strategy;
  b.hp = hp;
  b.arch = ArchitectureFor(strategy, hp);
  b.domains = data.domains;
  b.target_domain = data.target_domain;
  b.shares = ComputeTokenShares(data);
  b.relevance = relevance;
  b.relevance.k = hp.relevant_k;
  if (b.arch.prior_attention && vectors == nullptr) {
    throw UsageError("strategy " + std::string(StrategyName(strategy)) +
                     " needs pretrained word vectors (--embeddings) for relevance priors");
  }
  if (vectors != nullptr && vectors->dim() != hp.embed_dim) {
    throw UsageError("word vectors have dimension " + std::to_string(vectors->dim()) +
                     " but embed_dim is " + std::to_string(hp.embed_dim));
  }

  std::vector<Instance> train = data.source_train;
  train.insert(train.end(), data.target_train.begin(), data.target_train.end());
  const std::vector<TokenSeq> utterances = Utterances(train);
  const std::vector<TokenSeq> forms = LogicalForms(train);
  const TokenClassifier classify = MakeClassifier(b.shares);
  std::vector<TokenSeq> sketches;
  sketches.reserve(forms.size());
  for (const TokenSeq &lf : forms) sketches.push_back(InduceSketch(lf, classify).sketch);

  b.vocabs.utterance = BuildVocab(utterances);
  b.vocabs.sketch = BuildVocab(sketches);
  b.vocabs.logical_form = BuildVocab(forms);
  b.max_sketch_len = DecodeLimit(sketches, hp.max_len_factor);
  b.max_lf_len = DecodeLimit(forms, hp.max_len_factor);

  ModelDims dims{b.vocabs.utterance.size(), b.vocabs.sketch.size(),
                 b.vocabs.logical_form.size()};
  b.model = std::make_unique<DampModel>(b.arch, dims, hp, seed);
  if (vectors != nullptr) {
    b.model->SetEmbeddings("emb.utt", LoadEmbeddings(*vectors, b.vocabs.utterance, seed));
  }
  return b;
}

std::filesystem::path MetaPath(const std::filesystem::path &checkpoint) {
  std::filesystem::path p = checkpoint;
  p += ".meta";
  return p;
}

void SaveBundle(const std::filesystem::path &path, const ModelBundle &bundle,
                std::span<const NamedTensor> extras) {
  json meta;
  meta["format"] = "adaparse-bundle";
  meta["version"] = kMetaVersion;
  meta["strategy"] = std::string(StrategyName(bundle.strategy));
  json hp = json::object();
  for (const auto &[k, v] : HyperparamEntries(bundle.hp)) hp[k] = v;
  meta["hyperparams"] = hp;
  json domains = json::array();
  for (const Domain &d : bundle.domains) domains.push_back({{"id", d.id}, {"name", d.name}});
  meta["domains"] = domains;
  meta["target_domain"] = bundle.target_domain;
  meta["num_source_domains"] = bundle.shares.num_source_domains();
  json shares = json::object();
  for (const auto &[token, set] : bundle.shares.entries()) {
    shares[token] = std::vector<int>(set.begin(), set.end());
  }
  meta["shares"] = shares;
  meta["vocab_utterance"] = bundle.vocabs.utterance.RegularTokens();
  meta["vocab_sketch"] = bundle.vocabs.sketch.RegularTokens();
  meta["vocab_logical_form"] = bundle.vocabs.logical_form.RegularTokens();
  meta["relevant_k"] = bundle.relevance.k;
  json queries = json::object();
  for (const auto &[domain, words] : bundle.relevance.domain_queries) queries[domain] = words;
  meta["domain_queries"] = queries;
  meta["max_sketch_len"] = bundle.max_sketch_len;
  meta["max_lf_len"] = bundle.max_lf_len;

  SaveCheckpoint(path, bundle.model->store(), extras);
  WriteFileAtomically(MetaPath(path), meta.dump(1) + "\n");
}

ModelBundle LoadBundle(const std::filesystem::path &path) {
  const std::filesystem::path meta_path = MetaPath(path);
  const std::string where = meta_path.string();
  if (!std::filesystem::exists(path)) throw ModelError("checkpoint " + path.string() + " not found");
  if (!std::filesystem::exists(meta_path)) throw ModelError("metadata " + where + " not found");
  json meta;
  try {
    meta = json::parse(ReadFile(meta_path));
  } catch (const json::exception &e) {
    throw ModelError(where + ": " + e.what());
  }
  if (MetaField<std::string>(meta, "format", where) != "adaparse-bundle" ||
      MetaField<int>(meta, "version", where) != kMetaVersion) {
    throw ModelError(where + ": unsupported metadata format or version");
  }

  ModelBundle b;
  try {
    b.strategy = ParseStrategy(MetaField<std::string>(meta, "strategy", where));
    for (const auto &[k, v] :
         MetaField<std::map<std::string, std::string>>(meta, "hyperparams", where)) {
      if (!SetHyperparam(b.hp, k, v)) throw ModelError(where + ": unknown hyperparameter " + k);
    }
    b.hp.Validate();
  } catch (const UsageError &e) {
    throw ModelError(where + ": " + e.what());
  }
  b.arch = ArchitectureFor(b.strategy, b.hp);
  for (const json &d : MetaField<json>(meta, "domains", where)) {
    b.domains.push_back({d.at("name").get<std::string>(), d.at("id").get<int>()});
  }
  b.target_domain = MetaField<int>(meta, "target_domain", where);
  b.shares = TokenShareTable(MetaField<int>(meta, "num_source_domains", where));
  for (const auto &[token, ids] :
       MetaField<std::map<std::string, std::vector<int>>>(meta, "shares", where)) {
    for (int id : ids) b.shares.Record(token, id);
  }
  b.vocabs.utterance =
      Vocabulary::FromTokens(MetaField<std::vector<std::string>>(meta, "vocab_utterance", where));
  b.vocabs.sketch =
      Vocabulary::FromTokens(MetaField<std::vector<std::string>>(meta, "vocab_sketch", where));
  b.vocabs.logical_form = Vocabulary::FromTokens(
      MetaField<std::vector<std::string>>(meta, "vocab_logical_form", where));
  b.relevance.k = MetaField<int>(meta, "relevant_k", where);
  for (const auto &[domain, words] :
       MetaField<std::map<std::string, std::vector<std::string>>>(meta, "domain_queries",
                                                                   where)) {
    b.relevance.domain_queries[domain] = words;
  }
  b.max_sketch_len = MetaField<int>(meta, "max_sketch_len", where);
  b.max_lf_len = MetaField<int>(meta, "max_lf_len", where);

  ParameterStore loaded = LoadCheckpoint(path);
  ModelDims dims{b.vocabs.utterance.size(), b.vocabs.sketch.size(),
                 b.vocabs.logical_form.size()};
  b.model = std::make_unique<DampModel>(b.arch, dims, b.hp, loaded);
  return b;
}

Preprocessor::Preprocessor(const ModelBundle &bundle, const WordVectors *vectors)
    : bundle_(&bundle), vectors_(vectors), classify_(MakeClassifier(bundle.shares)) {
  if (bundle.arch.prior_attention && vectors == nullptr) {
    throw UsageError("strategy " + std::string(StrategyName(bundle.strategy)) +
                     " needs pretrained word vectors (--embeddings) for relevance priors");
  }
}

TokenSeq Preprocessor::SketchOf(std::span<const std::string> logical_form) const {
  return InduceSketch(logical_form, classify_).sketch;
}

Example Preprocessor::Prepare(const Instance &instance) const {
  const ModelBundle &b = *bundle_;
  Example ex;
  ex.domain = instance.domain;
  ex.is_source = instance.domain != b.target_domain;
  ex.utterance = instance.utterance;
  ex.utterance_ids = b.vocabs.utterance.Encode(instance.utterance);
  if (!instance.logical_form.empty()) {
    InducedSketch induced = InduceSketch(instance.logical_form, classify_);
    ex.logical_form = instance.logical_form;
    ex.sketch = std::move(induced.sketch);
    ex.alignment = std::move(induced.alignment);
    ex.lf_ids = b.vocabs.logical_form.Encode(ex.logical_form);
    ex.sketch_ids = b.vocabs.sketch.Encode(ex.sketch);
    ex.plan = MakeSketchPlan(ex.sketch, b.vocabs.logical_form);
  }
  if (b.arch.prior_attention) {
    const std::string &name = b.DomainName(instance.domain);
    ex.relevant_positions = DomainRelevantPositions(
        instance.utterance, b.relevance.QueryFor(name), *vectors_, b.relevance.k, name);
    const int n = static_cast<int>(instance.utterance.size());
    ex.coarse_prior = BuildPrior(ex.relevant_positions, n, Stage::kCoarse, b.hp.r_coarse,
                                 b.hp.r_fine);
    ex.fine_prior =
        BuildPrior(ex.relevant_positions, n, Stage::kFine, b.hp.r_coarse, b.hp.r_fine);
  }
  return ex;
}

std::vector<Example> Preprocessor::PrepareAll(std::span<const Instance> instances) const {
  std::vector<Example> out;
  out.reserve(instances.size());
  for (const Instance &inst : instances) out.push_back(Prepare(inst));
  return out;
}

}  // namespace adaparse
