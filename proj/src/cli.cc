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

#include "adaparse/cli.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "adaparse/corpus.h"
#include "adaparse/error.h"
#include "adaparse/eval.h"
#include "adaparse/fileutil.h"
#include "adaparse/infer.h"
#include "adaparse/pipeline.h"
#include "adaparse/sketch.h"
#include "adaparse/toy.h"
#include "adaparse/train.h"

namespace adaparse {

namespace {

const std::set<std::string> &PlainKeys() {
  static const std::set<std::string> keys = {
      "data",       "test_data",  "target_domain", "target_fraction", "dev_fraction",
      "embeddings", "strategy",   "seed",          "checkpoint",      "out",
      "beam",       "fractions",  "epochs",        "patience",        "select_on",
      "dev_beam",   "stop_when_perfect", "max_utterance_len", "max_lf_len", "utterance",
      "domain",     "stage",      "split",         "index",           "resume",
  };
  return keys;
}

bool IsKnownKey(const std::string &key) {
  if (PlainKeys().count(key)) return true;
  if (key.rfind("query.", 0) == 0 && key.size() > 6) return true;
  Hyperparams probe;
  for (const auto &[k, v] : HyperparamEntries(probe)) {
    if (k == key) return true;
  }
  return false;
}

std::string Trim(const std::string &s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string FlagName(const std::string &key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

// Merged config-file and flag settings.
class Settings {
 public:
  void Set(const std::string &key, const std::string &value) { values_[key] = value; }
  bool Has(const std::string &key) const { return values_.count(key) > 0; }

  std::string Str(const std::string &key, const std::string &fallback = "") const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }
  std::string Require(const std::string &key) const {
    if (!Has(key)) {
      throw UsageError("missing " + FlagName(key) + " (or '" + key + "' in the config file)");
    }
    return values_.at(key);
  }
  double Double(const std::string &key, double fallback) const {
    if (!Has(key)) return fallback;
    const std::string &v = values_.at(key);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw UsageError(FlagName(key) + ": '" + v + "' is not a number");
    }
    return out;
  }
  long long Int(const std::string &key, long long fallback) const {
    if (!Has(key)) return fallback;
    const std::string &v = values_.at(key);
    long long out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw UsageError(FlagName(key) + ": '" + v + "' is not an integer");
    }
    return out;
  }
  std::uint64_t Seed() const {
    const long long s = Int("seed", 1);
    if (s < 0) throw UsageError("--seed must be non-negative");
    return static_cast<std::uint64_t>(s);
  }
  bool Bool(const std::string &key, bool fallback) const {
    if (!Has(key)) return fallback;
    const std::string &v = values_.at(key);
    if (v == "true" || v == "1" || v.empty()) return true;
    if (v == "false" || v == "0") return false;
    throw UsageError(FlagName(key) + ": '" + v + "' is not a boolean");
  }

  Hyperparams Hp() const {
    Hyperparams hp;
    for (const auto &[key, value] : values_) SetHyperparam(hp, key, value);
    hp.Validate();
    return hp;
  }
  RelevanceSettings Relevance(const Hyperparams &hp) const {
    RelevanceSettings r;
    r.k = hp.relevant_k;
    for (const auto &[key, value] : values_) {
      if (key.rfind("query.", 0) != 0) continue;
      std::vector<std::string> words;
      std::istringstream in(value);
      for (std::string w; in >> w;) {
        std::stringstream parts(w);
        for (std::string p; std::getline(parts, p, ',');) {
          if (!p.empty()) words.push_back(p);
        }
      }
      r.domain_queries[key.substr(6)] = words;
    }
    return r;
  }
  SplitOptions Split() const {
    SplitOptions s;
    s.target_fraction = Double("target_fraction", s.target_fraction);
    s.dev_fraction = Double("dev_fraction", s.dev_fraction);
    s.seed = Seed();
    return s;
  }
  int Beam(int fallback) const {
    const long long b = Int("beam", fallback);
    if (b < 1) throw UsageError("--beam must be at least 1");
    return static_cast<int>(b);
  }

 private:
  std::map<std::string, std::string> values_;
};

Corpus LoadData(const Settings &s, const std::string &key) {
  const long long max_utt = s.Int("max_utterance_len", kDefaultMaxUtteranceLen);
  const long long max_lf = s.Int("max_lf_len", kDefaultMaxLogicalFormLen);
  const std::filesystem::path path = s.Require(key);
  if (!std::filesystem::exists(path)) throw DataError(path.string() + ": file not found");
  return LoadCorpus(path, static_cast<int>(max_utt), static_cast<int>(max_lf));
}

std::optional<WordVectors> LoadVectors(const Settings &s, int dim) {
  if (!s.Has("embeddings")) return std::nullopt;
  const std::filesystem::path path = s.Str("embeddings");
  if (!std::filesystem::exists(path)) throw DataError(path.string() + ": file not found");
  return WordVectors::Read(path, dim);
}

void Emit(const Settings &s, const std::string &contents, std::ostream &out) {
  if (s.Has("out")) {
    WriteFileAtomically(s.Str("out"), contents);
  } else {
    out << contents;
  }
}

TrainConfig MakeTrainConfig(const Settings &s) {
  TrainConfig c;
  c.strategy = ParseStrategy(s.Str("strategy", "damp"));
  c.hp = s.Hp();
  c.epochs = static_cast<int>(s.Int("epochs", c.epochs));
  c.patience = static_cast<int>(s.Int("patience", c.patience));
  c.seed = s.Seed();
  c.dev_beam = static_cast<int>(s.Int("dev_beam", c.dev_beam));
  c.stop_when_perfect = s.Bool("stop_when_perfect", c.stop_when_perfect);
  const std::string select = s.Str("select_on", "target_dev");
  if (select == "target_dev") {
    c.select_on = SelectOn::kTargetDev;
  } else if (select == "train") {
    c.select_on = SelectOn::kTrain;
  } else {
    throw UsageError("--select-on must be target_dev or train, got '" + select + "'");
  }
  c.relevance = s.Relevance(c.hp);
  c.Validate();
  return c;
}

// A loaded checkpoint plus the data it is evaluated on.
struct LoadedModel {
  ModelBundle bundle;
  std::optional<WordVectors> vectors;

  const WordVectors *vectors_ptr() const { return vectors ? &*vectors : nullptr; }
};

LoadedModel LoadModel(const Settings &s) {
  LoadedModel m;
  m.bundle = LoadBundle(s.Require("checkpoint"));
  m.vectors = LoadVectors(s, m.bundle.hp.embed_dim);
  if (m.bundle.arch.prior_attention && !m.vectors) {
    throw UsageError("this checkpoint uses relevance priors; pass --embeddings");
  }
  return m;
}

std::string TargetName(const Settings &s, const ModelBundle &b) {
  return s.Str("target_domain", b.DomainName(b.target_domain));
}

void CheckDomains(const Corpus &corpus, const ModelBundle &b) {
  const auto &domains = corpus.domains();
  bool same = domains.size() == b.domains.size();
  for (std::size_t i = 0; same && i < domains.size(); ++i) {
    same = domains[i].name == b.domains[i].name && domains[i].id == b.domains[i].id;
  }
  if (!same) throw ModelError("corpus domains do not match the checkpoint's domains");
}

// Instances the command should run on, by --split.
std::vector<Instance> SelectSplit(const Settings &s, const AdaptationDataset &data,
                                  const std::string &fallback) {
  const std::string split = s.Str("split", fallback);
  auto join = [](std::vector<Instance> a, const std::vector<Instance> &b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  if (split == "test") {
    if (data.target_test.empty()) return data.target_dev;
    return data.target_test;
  }
  if (split == "target_dev") return data.target_dev;
  if (split == "dev") return join(data.source_dev, data.target_dev);
  if (split == "train") return join(data.source_train, data.target_train);
  throw UsageError("--split must be test, target_dev, dev or train, got '" + split + "'");
}

AdaptationDataset LoadSplit(const Settings &s, const std::string &target,
                            std::optional<Corpus> *test_out = nullptr) {
  const Corpus corpus = LoadData(s, "data");
  std::optional<Corpus> test;
  if (s.Has("test_data")) test = LoadData(s, "test_data");
  AdaptationDataset data =
      MakeAdaptationSplit(corpus, target, s.Split(), test ? &*test : nullptr);
  if (test_out != nullptr) *test_out = std::move(test);
  return data;
}

// ---------------------------------------------------------------------------
// Commands.

int InduceSketchCommand(const Settings &s, std::ostream &out) {
  const Corpus corpus = LoadData(s, "data");
  const AdaptationDataset data =
      MakeAdaptationSplit(corpus, s.Require("target_domain"), s.Split());
  const TokenShareTable shares = ComputeTokenShares(data);
  const TokenClassifier classify = MakeClassifier(shares);

  std::ostringstream dump;
  dump << "domain\tlogical_form\tsketch\talignment\n";
  int instances = 0, placeholders = 0;
  for (const Domain &d : corpus.domains()) {
    for (const Instance &inst : corpus.instances(d.id)) {
      const InducedSketch ind = InduceSketch(inst.logical_form, classify);
      std::string spans;
      for (const AlignedSpan &span : ind.alignment.spans) {
        if (!spans.empty()) spans += ' ';
        spans += std::to_string(span.lf_begin) + ':' + std::to_string(span.length);
      }
      for (const std::string &t : ind.sketch) placeholders += ParsePlaceholder(t) ? 1 : 0;
      ++instances;
      dump << d.name << '\t' << Join(inst.logical_form) << '\t' << Join(ind.sketch) << '\t'
           << spans << '\n';
    }
  }
  int general = 0, specific = 0;
  std::set<std::string> lf_tokens;
  for (const Domain &d : corpus.domains()) {
    for (const Instance &inst : corpus.instances(d.id)) {
      lf_tokens.insert(inst.logical_form.begin(), inst.logical_form.end());
    }
  }
  for (const std::string &t : lf_tokens) {
    (ClassifyToken(t, shares) == TokenClass::kGeneral ? general : specific) += 1;
  }
  if (s.Has("out")) WriteFileAtomically(s.Str("out"), dump.str());
  out << "source domains: " << shares.num_source_domains() << '\n'
      << "logical-form tokens: " << lf_tokens.size() << " (" << general << " general, "
      << specific << " specific)\n"
      << "instances: " << instances << ", placeholders: " << placeholders << '\n';
  if (!s.Has("out")) out << dump.str();
  return kExitOk;
}

int TrainCommand(const Settings &s, std::ostream &out) {
  TrainConfig config = MakeTrainConfig(s);
  const std::filesystem::path checkpoint = s.Require("checkpoint");
  const std::string target = s.Require("target_domain");
  const AdaptationDataset data = LoadSplit(s, target);
  const std::optional<WordVectors> vectors = LoadVectors(s, config.hp.embed_dim);
  config.checkpoint = checkpoint;
  config.log = s.Has("out") ? std::filesystem::path(s.Str("out"))
                            : std::filesystem::path(checkpoint.string() + ".log.tsv");
  config.state = checkpoint.string() + ".state";
  config.resume = s.Bool("resume", false);

  Trainer trainer(config, data, vectors ? &*vectors : nullptr);
  trainer.Run();
  out << "strategy " << StrategyName(config.strategy) << ": " << trainer.log().size()
      << " epochs, best epoch " << trainer.best_epoch() << ", selection LF EM "
      << FormatDouble(trainer.best_em()) << '\n'
      << "source train " << data.source_train.size() << ", target train "
      << data.target_train.size() << ", target dev " << data.target_dev.size() << '\n'
      << "checkpoint " << checkpoint.string() << ", log " << config.log.string() << '\n';
  return kExitOk;
}

int EvaluateCommand(const Settings &s, std::ostream &out) {
  LoadedModel m = LoadModel(s);
  const AdaptationDataset data = LoadSplit(s, TargetName(s, m.bundle));
  const Corpus check_corpus = LoadData(s, "data");
  CheckDomains(check_corpus, m.bundle);
  Preprocessor pre(m.bundle, m.vectors_ptr());
  const std::vector<Example> examples = pre.PrepareAll(SelectSplit(s, data, "test"));
  if (examples.empty()) throw DataError("evaluation split is empty");
  std::vector<PredictionRow> rows;
  const EvalReport report = Evaluate(m.bundle, examples, s.Beam(m.bundle.hp.beam_size), &rows);
  if (s.Has("out")) WriteFileAtomically(s.Str("out"), FormatPredictions(rows));
  out << FormatReport(report);
  if (report.fallbacks > 0) {
    out << "fallbacks: " << report.fallbacks << " predicted sketches were unusable\n";
  }
  return kExitOk;
}

int ParseCommand(const Settings &s, std::ostream &out) {
  LoadedModel m = LoadModel(s);
  Preprocessor pre(m.bundle, m.vectors_ptr());
  Parser parser(m.bundle);
  const int beam = s.Beam(m.bundle.hp.beam_size);
  if (s.Has("utterance")) {
    const std::string domain = s.Str("domain", m.bundle.DomainName(m.bundle.target_domain));
    const int id = m.bundle.FindDomain(domain);
    if (id < 0) throw DataError("unknown domain '" + domain + "'");
    Instance inst{id, SplitTokens(s.Str("utterance")), {}};
    if (inst.utterance.empty()) throw DataError("empty utterance");
    const ParseResult r = parser.Parse(pre.Prepare(inst), beam);
    std::ostringstream text;
    text << "sketch\t" << Join(r.sketch) << '\n'
         << "logical_form\t" << Join(r.logical_form) << '\n';
    if (r.fallback) text << "fallback\tpredicted sketch unusable\n";
    Emit(s, text.str(), out);
    return kExitOk;
  }
  const Corpus corpus = LoadData(s, "data");
  CheckDomains(corpus, m.bundle);
  std::vector<PredictionRow> rows;
  for (const Domain &d : corpus.domains()) {
    for (const Instance &inst : corpus.instances(d.id)) {
      const Example ex = pre.Prepare(inst);
      const ParseResult r = parser.Parse(ex, beam);
      PredictionRow row;
      row.domain = d.name;
      row.utterance = inst.utterance;
      row.predicted_sketch = r.sketch;
      row.predicted_lf = r.logical_form;
      row.gold_lf = inst.logical_form;
      row.match = ExactMatch(r.logical_form, inst.logical_form);
      rows.push_back(std::move(row));
    }
  }
  Emit(s, FormatPredictions(rows), out);
  if (s.Has("out")) out << "parsed " << rows.size() << " utterances\n";
  return kExitOk;
}

std::vector<double> ParseFractions(const std::string &text) {
  std::vector<double> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    item = Trim(item);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw UsageError("--fractions: '" + item + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

int SweepCommand(const Settings &s, std::ostream &out) {
  const TrainConfig config = MakeTrainConfig(s);
  const std::vector<double> fractions = ParseFractions(s.Require("fractions"));
  const std::string target = s.Require("target_domain");
  const Corpus corpus = LoadData(s, "data");
  std::optional<Corpus> test;
  if (s.Has("test_data")) test = LoadData(s, "test_data");
  const std::optional<WordVectors> vectors = LoadVectors(s, config.hp.embed_dim);
  const std::vector<SweepRow> rows =
      SweepTargetFraction(fractions, config, corpus, target, s.Split(),
                          test ? &*test : nullptr, vectors ? &*vectors : nullptr);
  Emit(s, FormatSweep(rows), out);
  if (s.Has("out")) out << FormatSweep(rows);
  return kExitOk;
}

int DumpAttentionCommand(const Settings &s, std::ostream &out) {
  LoadedModel m = LoadModel(s);
  Preprocessor pre(m.bundle, m.vectors_ptr());
  Instance inst;
  if (s.Has("utterance")) {
    const std::string domain = s.Str("domain", m.bundle.DomainName(m.bundle.target_domain));
    inst.domain = m.bundle.FindDomain(domain);
    if (inst.domain < 0) throw DataError("unknown domain '" + domain + "'");
    inst.utterance = SplitTokens(s.Str("utterance"));
    if (inst.utterance.empty()) throw DataError("empty utterance");
  } else {
    const AdaptationDataset data = LoadSplit(s, TargetName(s, m.bundle));
    const std::vector<Instance> pool = SelectSplit(s, data, "test");
    const long long index = s.Int("index", 0);
    if (index < 0 || index >= static_cast<long long>(pool.size())) {
      throw UsageError("--index " + std::to_string(index) + " out of range (split has " +
                       std::to_string(pool.size()) + " instances)");
    }
    inst = pool[index];
  }
  const Example ex = pre.Prepare(inst);
  Parser parser(m.bundle);
  const ParseResult r = parser.Parse(ex, s.Beam(m.bundle.hp.beam_size));
  Emit(s, FormatAttention(ex, r, parser.TraceAttention(ex, r)), out);
  if (s.Has("out")) out << "sketch\t" << Join(r.sketch) << "\nlogical_form\t"
                        << Join(r.logical_form) << '\n';
  return kExitOk;
}

int DumpReprsCommand(const Settings &s, std::ostream &out) {
  LoadedModel m = LoadModel(s);
  const std::string stage_name = s.Str("stage", "coarse");
  Stage stage;
  if (stage_name == "coarse") {
    stage = Stage::kCoarse;
  } else if (stage_name == "fine") {
    stage = Stage::kFine;
  } else {
    throw UsageError("--stage must be coarse or fine, got '" + stage_name + "'");
  }
  const AdaptationDataset data = LoadSplit(s, TargetName(s, m.bundle));
  Preprocessor pre(m.bundle, m.vectors_ptr());
  const std::vector<Example> examples = pre.PrepareAll(SelectSplit(s, data, "dev"));
  const RepresentationDump dump = DumpRepresentations(m.bundle, examples, stage);
  Emit(s, FormatRepresentations(m.bundle, dump), out);
  out << "rows " << dump.vectors.size() << ", stage " << stage_name << ", ";
  if (dump.ch) {
    out << "calinski_harabasz " << FormatDouble(*dump.ch) << '\n';
  } else {
    out << "calinski_harabasz undefined (" << dump.ch_error << ")\n";
  }
  return kExitOk;
}

int GradcheckCommand(const Settings &s, std::ostream &out) {
  const Strategy strategy = ParseStrategy(s.Str("strategy", "damp"));
  const ModelGradCheck r = CheckModelGradients(strategy, s.Seed());
  out << "strategy " << StrategyName(strategy) << ", " << r.entries << " entries\n"
      << "L_c max relative error " << FormatDouble(r.coarse_error)
      << (r.worst_coarse.empty() ? "" : " at " + r.worst_coarse) << '\n'
      << "L_f max relative error " << FormatDouble(r.fine_error)
      << (r.worst_fine.empty() ? "" : " at " + r.worst_fine) << '\n';
  const bool ok = r.coarse_error <= 1e-4 && r.fine_error <= 1e-4;
  out << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kExitOk : kExitModel;
}

struct CommandSpec {
  const char *name;
  const char *help;
  std::vector<std::string> keys;
  std::function<int(const Settings &, std::ostream &)> run;
};

const std::vector<CommandSpec> &Commands() {
  static const std::vector<std::string> kSplit = {"target_fraction", "dev_fraction", "seed"};
  auto with = [](std::vector<std::string> a, const std::vector<std::string> &b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  static const std::vector<CommandSpec> commands = {
      {"induce-sketch", "Induce sketches and print the token share summary",
       with({"data", "target_domain", "out"}, kSplit), InduceSketchCommand},
      {"train", "Train a parser",
       with({"data", "test_data", "target_domain", "embeddings", "strategy", "checkpoint", "out",
             "epochs", "patience", "resume"},
            kSplit),
       TrainCommand},
      {"evaluate", "Sketch, oracle-sketch and full exact-match rates",
       with({"data", "test_data", "target_domain", "embeddings", "checkpoint", "out", "beam",
             "split"},
            kSplit),
       EvaluateCommand},
      {"parse", "Parse one utterance or a corpus file",
       {"checkpoint", "embeddings", "utterance", "domain", "data", "out", "beam"},
       ParseCommand},
      {"sweep", "Train and score one model per target fraction",
       with({"data", "test_data", "target_domain", "embeddings", "strategy", "out", "fractions",
             "epochs", "patience"},
            {"dev_fraction", "seed"}),
       SweepCommand},
      {"dump-attention", "Attention rows of both decoders for one instance",
       with({"checkpoint", "embeddings", "data", "test_data", "target_domain", "utterance",
             "domain", "index", "split", "out", "beam"},
            kSplit),
       DumpAttentionCommand},
      {"dump-reprs", "Pooled utterance vectors and their Calinski-Harabasz score",
       with({"checkpoint", "embeddings", "data", "test_data", "target_domain", "stage", "split",
             "out"},
            kSplit),
       DumpReprsCommand},
      {"gradcheck", "Finite-difference check of the model losses on a toy batch",
       {"strategy", "seed"}, GradcheckCommand},
  };
  return commands;
}

}  // namespace

std::map<std::string, std::string> ReadConfigFile(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = path.string() + ":" + std::to_string(n);
    if (eq == std::string::npos) throw UsageError(where + ": expected key = value");
    std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (key.rfind("query.", 0) != 0) std::replace(key.begin(), key.end(), '-', '_');
    if (key.empty()) throw UsageError(where + ": empty key");
    if (!IsKnownKey(key)) throw UsageError(where + ": unknown key '" + key + "'");
    out[key] = value;
  }
  return out;
}

int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Domain-adaptive coarse-to-fine semantic parsing", "adaparse"};
  app.require_subcommand(1);

  struct Bound {
    const CommandSpec *spec;
    CLI::App *app;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option *> options;
    std::string config;
    CLI::Option *config_option = nullptr;
  };
  std::vector<std::unique_ptr<Bound>> bound;
  for (const CommandSpec &spec : Commands()) {
    auto b = std::make_unique<Bound>();
    b->spec = &spec;
    b->app = app.add_subcommand(spec.name, spec.help);
    b->config_option = b->app->add_option("--config", b->config, "Flat key=value config file");
    for (const std::string &key : spec.keys) {
      std::string flag = FlagName(key);
      if (key == "target_domain") flag += ",--target";
      if (key == "resume") {
        b->options[key] = b->app->add_flag(flag, "Resume from the saved trainer state");
        continue;
      }
      b->options[key] = b->app->add_option(flag, b->values[key]);
    }
    bound.push_back(std::move(b));
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  for (const auto &b : bound) {
    if (!b->app->parsed()) continue;
    try {
      Settings settings;
      if (b->config_option->count() > 0) {
        for (const auto &[k, v] : ReadConfigFile(b->config)) settings.Set(k, v);
      }
      for (const auto &[key, option] : b->options) {
        if (option->count() == 0) continue;
        settings.Set(key, key == "resume" ? "true" : b->values[key]);
      }
      return b->spec->run(settings, out);
    } catch (const UsageError &e) {
      err << "usage error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const DataError &e) {
      err << "data error: " << e.what() << '\n';
      return kExitData;
    } catch (const ModelError &e) {
      err << "model error: " << e.what() << '\n';
      return kExitModel;
    } catch (const std::filesystem::filesystem_error &e) {
      err << "data error: " << e.what() << '\n';
      return kExitData;
    } catch (const std::exception &e) {
      err << "error: " << e.what() << '\n';
      return kExitModel;
    }
  }
  return kExitUsage;
}

}  // namespace adaparse
