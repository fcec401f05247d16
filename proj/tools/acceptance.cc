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


// Acceptance suite: one PASS/FAIL line per criterion. Criterion 11 is an
// analysis check and never affects the exit code.

#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adaparse/beam.h"
#include "adaparse/checkpoint.h"
#include "adaparse/eval.h"
#include "adaparse/fileutil.h"
#include "adaparse/gradcheck.h"
#include "adaparse/graph.h"
#include "adaparse/infer.h"
#include "adaparse/model.h"
#include "adaparse/params.h"
#include "adaparse/random.h"
#include "adaparse/sketch.h"
#include "adaparse/toy.h"
#include "adaparse/train.h"

namespace adaparse {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Num(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

Tensor RandomTensor(int rows, int cols, std::mt19937_64 &rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(rows, cols);
  for (double &v : t.values()) v = u(rng);
  return t;
}

Tensor Transposed(const Tensor &t) {
  Tensor out(t.cols(), t.rows());
  for (int r = 0; r < t.rows(); ++r) {
    for (int c = 0; c < t.cols(); ++c) out.at(c, r) = t.at(r, c);
  }
  return out;
}

// 1. Gradient fidelity.
Outcome GradientFidelity() {
  const auto start = Clock::now();
  std::mt19937_64 rng = SeededRng(11);
  ParameterStore store;
  Parameter &a = store.Add("a", RandomTensor(3, 2, rng));
  Parameter &b = store.Add("b", RandomTensor(3, 2, rng));
  Parameter &m = store.Add("m", RandomTensor(2, 4, rng));
  Parameter &v = store.Add("v", RandomTensor(5, 1, rng));
  Parameter &pos = store.Add("pos", RandomTensor(4, 1, rng, 0.5, 1.5));
  Parameter &table = store.Add("table", RandomTensor(6, 3, rng));
  const Tensor weights = RandomTensor(8, 8, rng);
  // Weighted sum with fixed weights, so each output entry has its own upstream gradient.
  auto project = [&](Var out) {
    Tensor w(out.rows(), out.cols());
    for (int r = 0; r < out.rows(); ++r) {
      for (int c = 0; c < out.cols(); ++c) w.at(r, c) = weights.at(r, c);
    }
    return Sum(Mul(out, out.graph().Constant(w)));
  };
  const std::vector<std::pair<const char *, std::function<Var(Graph &)>>> ops = {
      {"add", [&](Graph &g) { return Add(g.Param(a), g.Param(b)); }},
      {"sub", [&](Graph &g) { return Sub(g.Param(a), g.Param(b)); }},
      {"mul", [&](Graph &g) { return Mul(g.Param(a), g.Param(b)); }},
      {"affine", [&](Graph &g) { return Affine(g.Param(a), -1.7, 0.3); }},
      {"matmul", [&](Graph &g) { return MatMul(g.Param(a), g.Param(m)); }},
      {"transpose", [&](Graph &g) { return Transpose(g.Param(m)); }},
      {"concat", [&](Graph &g) { return ConcatRows({g.Param(a), g.Param(b)}); }},
      {"stack", [&](Graph &g) {
         const Var cols[] = {g.Param(v), g.Param(v)};
         return StackRows(cols);
       }},
      {"row", [&](Graph &g) { return Row(g.Param(m), 1); }},
      {"slice", [&](Graph &g) { return SliceRows(g.Param(v), 1, 3); }},
      {"sigmoid", [&](Graph &g) { return Sigmoid(g.Param(a)); }},
      {"tanh", [&](Graph &g) { return Tanh(g.Param(a)); }},
      {"softmax", [&](Graph &g) { return Softmax(g.Param(v)); }},
      {"log", [&](Graph &g) { return Log(g.Param(pos)); }},
      {"sum", [&](Graph &g) { return Sum(g.Param(m)); }},
      {"embedding_gather", [&](Graph &g) { return EmbeddingGather(g.Param(table), 4); }},
      {"dropout", [&](Graph &g) {
         std::mt19937_64 mask_rng = SeededRng(5);
         return Dropout(g.Param(a), 0.4, &mask_rng);
       }},
      {"cross_entropy", [&](Graph &g) { return CrossEntropy(Softmax(g.Param(v)), 2); }},
  };
  double primitive = 0.0;
  std::string worst;
  for (const auto &[name, op] : ops) {
    const double e =
        GradCheck(store, [&](Graph &g) { return project(op(g)); }).max_relative_error;
    if (e > primitive) {
      primitive = e;
      worst = name;
    }
  }
  const ModelGradCheck full = CheckModelGradients(Strategy::kDamp, 1);
  const double seconds = Seconds(start);
  Outcome o;
  o.pass = primitive <= 1e-6 && full.coarse_error <= 1e-4 && full.fine_error <= 1e-4 &&
           full.entries > 0 && seconds < 60.0;
  o.detail = std::to_string(ops.size()) + " primitives max " + Num(primitive) +
             (worst.empty() ? "" : " (" + worst + ")") + ", L_c " + Num(full.coarse_error) +
             ", L_f " + Num(full.fine_error) + ", " + Num(seconds) + " s";
  return o;
}

// 2. Adversarial sign identity.
Outcome SignIdentity() {
  std::mt19937_64 rng = SeededRng(2);
  std::uniform_real_distribution<double> prob(1e-6, 1.0 - 1e-6);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> size(1, 64);
  int equal = 0;
  for (int batch = 0; batch < 1000; ++batch) {
    const int n = size(rng);
    std::vector<double> p(n);
    std::vector<bool> src(n);
    for (int i = 0; i < n; ++i) {
      p[i] = prob(rng);
      src[i] = coin(rng);
    }
    equal += DomainConfusionLoss(p, src) == -DomainDiscriminationLoss(p, src) ? 1 : 0;
  }
  return {equal == 1000, std::to_string(equal) + "/1000 batches exactly negated"};
}

// 3. Prior neutrality.
Outcome PriorNeutrality() {
  Hyperparams hp;
  hp.embed_dim = 5;
  hp.encoder_hidden = 6;
  hp.dropout = 0.0;
  hp.init_range = 0.5;
  const ModelDims dims = {10, 8, 12};
  DampModel damp(ArchitectureFor(Strategy::kDamp, hp), dims, hp, 11);
  DampModel vanilla(ArchitectureFor(Strategy::kCoarse2FineMix, hp), dims, hp, 12);
  if (!damp.architecture().prior_attention || vanilla.architecture().prior_attention) {
    return {false, "unexpected architectures"};
  }
  CopyParameters(damp.store(), vanilla.store());
  std::mt19937_64 rng = SeededRng(5);
  std::uniform_int_distribution<int> length(1, 7);
  const int w = hp.EncoderWidth();
  int equal = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = length(rng), m = length(rng);
    const Tensor u = RandomTensor(n, w, rng), sk = RandomTensor(m, w, rng);
    const Tensor h = RandomTensor(w, 1, rng), c = RandomTensor(w, 1, rng);
    const std::vector<double> ones(n, 1.0);
    const bool fine = trial % 2 == 1;
    const Stage stage = fine ? Stage::kFine : Stage::kCoarse;
    const int vocab = fine ? dims.lf_vocab : dims.sketch_vocab;
    const StepInput input = fine && trial % 4 == 1
                                ? StepInput::SketchRow(static_cast<int>(rng() % m))
                                : StepInput::Embedding(static_cast<int>(rng() % vocab));
    auto run = [&](const DampModel &model, const std::vector<double> *prior) {
      Graph g(false);
      DecoderContext ctx;
      ctx.utterance = g.Constant(u);
      ctx.utterance_t = g.Constant(Transposed(u));
      ctx.prior = prior;
      if (fine) {
        ctx.sketch = g.Constant(sk);
        ctx.sketch_t = g.Constant(Transposed(sk));
      }
      const StepOutput out =
          model.DecodeStep(g, stage, ctx, {g.Constant(h), g.Constant(c)}, input, nullptr);
      return std::vector<Tensor>{out.distribution.value(), out.state.hidden.value(),
                                 out.state.cell.value(), out.utterance_attention.weights.value()};
    };
    equal += run(damp, &ones) == run(vanilla, nullptr) ? 1 : 0;
  }
  return {equal == 100, std::to_string(equal) + "/100 trials bitwise equal"};
}

TokenClassifier SpecificSet(std::set<std::string> specific) {
  return [specific = std::move(specific)](std::string_view t) {
    return specific.count(std::string(t)) ? TokenClass::kSpecific : TokenClass::kGeneral;
  };
}

// 4. Sketch induction oracle.
Outcome SketchOracle() {
  int ok = 0, total = 0;
  auto expect = [&](const TokenSeq &got, const std::string &want) {
    ++total;
    ok += Join(got) == want ? 1 : 0;
  };
  expect(InduceSketch(SplitTokens("listValue ( countComparative ( getProperty ( singleton "
                                  "en.meeting ) ( string !type ) ) ( string attendee ) ( string "
                                  ">= ) ( number 2 ) )"),
                      SpecificSet({"en.meeting", "attendee", "2"}))
             .sketch,
         "listValue ( countComparative ( getProperty ( singleton@1 ) ( string !type ) ) "
         "( string@1 ) ( string >= ) ( number@1 ) )");
  expect(InduceSketch(SplitTokens("listValue ( countComparative ( getProperty ( singleton "
                                  "en.housing_unit ) ( string !type ) ) ( string neighborhood ) "
                                  "( string = ) ( number 2 ) )"),
                      SpecificSet({"en.housing_unit", "neighborhood", "2"}))
             .sketch,
         "listValue ( countComparative ( getProperty ( singleton@1 ) ( string !type ) ) "
         "( string@1 ) ( string = ) ( number@1 ) )");

  auto inst = [](int d, const char *lf) { return Instance{d, {"q"}, SplitTokens(lf)}; };
  const std::vector<std::vector<Instance>> sources = {
      {inst(0, "( call listValue ( call getProperty en.a1 ( string color ) ) )"),
       inst(0, "( call listValue en.a2 )")},
      {inst(1, "( call listValue ( call getProperty en.b1 ( string size ) ) )")},
      {inst(2, "( call listValue ( call filter en.c1 ( string color ) ) )")},
  };
  const TokenShareTable table = ComputeTokenShares(sources);
  const TokenClassifier classify = MakeClassifier(table);
  const char *const hand[] = {
      "( call listValue ( call getProperty@1 ( string color ) ) )",
      "( call listValue@1 )",
      "( call listValue ( call getProperty@1 ( string@1 ) ) )",
      "( call listValue ( call@2 ( string color ) ) )",
  };
  int k = 0;
  for (const auto &domain : sources) {
    for (const Instance &i : domain) expect(InduceSketch(i.logical_form, classify).sketch, hand[k++]);
  }

  std::map<std::string, std::set<int>> recount;
  for (int d = 0; d < 3; ++d) {
    for (const Instance &i : sources[d]) {
      for (const std::string &t : i.logical_form) recount[t].insert(d);
    }
  }
  bool shares = table.entries().size() == recount.size();
  for (const auto &[token, set] : recount) shares = shares && table.Shares(token) == set;
  return {ok == total && shares, std::to_string(ok) + "/" + std::to_string(total) +
                                     " sketches match, share recount " +
                                     (shares ? "exact" : "differs")};
}

TokenSeq RandomForm(std::mt19937_64 &rng, const std::vector<std::string> &vocab, int depth) {
  std::uniform_int_distribution<int> len(1, 5);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::bernoulli_distribution nest(depth < 3 ? 0.3 : 0.0);
  TokenSeq out = {"("};
  const int n = len(rng);
  for (int i = 0; i < n; ++i) {
    if (nest(rng)) {
      for (std::string &t : RandomForm(rng, vocab, depth + 1)) out.push_back(std::move(t));
    } else {
      out.push_back(vocab[pick(rng)]);
    }
  }
  out.push_back(")");
  return out;
}

// 5. Round trip.
Outcome RoundTrip() {
  std::mt19937_64 rng = SeededRng(12);
  std::vector<std::string> vocab;
  for (int i = 0; i < 12; ++i) vocab.push_back("t" + std::to_string(i));
  int forms = 0, ok = 0;
  for (int round = 0; round < 100; ++round) {
    std::set<std::string> specific;
    std::bernoulli_distribution coin(0.5);
    for (const std::string &t : vocab) {
      if (coin(rng)) specific.insert(t);
    }
    const TokenClassifier classify = SpecificSet(specific);
    for (int i = 0; i < 100; ++i, ++forms) {
      const TokenSeq lf = RandomForm(rng, vocab, 0);
      const InducedSketch s = InduceSketch(lf, classify);
      const std::vector<TokenSeq> fillers = SlotFillers(lf, s.sketch, s.alignment);
      ok += IsWellFormedSketch(s.sketch) && Align(lf, s.sketch) == s.alignment &&
                    Reconstruct(s.sketch, s.alignment, fillers) == lf
                ? 1
                : 0;
    }
  }
  return {forms >= 10000 && ok == forms,
          std::to_string(ok) + "/" + std::to_string(forms) + " forms reconstructed"};
}

// Next-token distribution is a fixed random function of the prefix.
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

// 6. Beam correctness.
Outcome BeamCorrectness() {
  int exhaustive_ok = 0, greedy_ok = 0;
  const int models = 200;
  for (std::uint64_t seed = 0; seed < models; ++seed) {
    const TableModel m(seed, 3, -1);
    std::vector<int> best;
    double best_score = -INFINITY;
    for (int code = 0; code < 27; ++code) {
      const std::vector<int> seq = {code / 9, code / 3 % 3, code % 3};
      double s = 0.0;
      std::vector<int> prefix;
      for (int t : seq) {
        s += m.LogProbs(prefix)[t];
        prefix.push_back(t);
      }
      if (s > best_score) {
        best_score = s;
        best = seq;
      }
    }
    const BeamResult r = BeamSearch(m, 27, 3);
    exhaustive_ok += r.tokens == best && std::abs(r.score - best_score) <= 1e-12 ? 1 : 0;

    const TableModel g(seed, 5, 3);
    const BeamResult beam = BeamSearch(g, 1, 6), greedy = GreedySearch(g, 6);
    greedy_ok += beam.tokens == greedy.tokens && beam.finished == greedy.finished ? 1 : 0;
  }
  return {exhaustive_ok == models && greedy_ok == models,
          "exhaustive argmax " + std::to_string(exhaustive_ok) + "/" + std::to_string(models) +
              ", B=1 greedy " + std::to_string(greedy_ok) + "/" + std::to_string(models)};
}

// Total minus within scatter, coded apart from the library's centroid form.
double ReferenceCh(const std::vector<std::vector<double>> &x, const std::vector<int> &labels,
                   int k) {
  const std::size_t n = x.size(), d = x[0].size();
  std::vector<double> grand(d, 0.0);
  for (const auto &p : x) {
    for (std::size_t j = 0; j < d; ++j) grand[j] += p[j] / static_cast<double>(n);
  }
  double total = 0.0, within = 0.0;
  for (const auto &p : x) {
    for (std::size_t j = 0; j < d; ++j) total += (p[j] - grand[j]) * (p[j] - grand[j]);
  }
  for (int c = 0; c < k; ++c) {
    std::vector<double> mean(d, 0.0);
    int size = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] != c) continue;
      ++size;
      for (std::size_t j = 0; j < d; ++j) mean[j] += x[i][j];
    }
    for (double &m : mean) m /= size;
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] != c) continue;
      for (std::size_t j = 0; j < d; ++j) within += (x[i][j] - mean[j]) * (x[i][j] - mean[j]);
    }
  }
  return ((total - within) / (k - 1)) / (within / (static_cast<double>(n) - k));
}

// 7. CH correctness.
Outcome ChCorrectness() {
  const double hand = CalinskiHarabasz(std::vector<std::vector<double>>{{0.0}, {1.0}, {4.0}, {5.0}},
                                       std::vector<int>{0, 0, 1, 1});
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); };
  std::mt19937_64 rng = SeededRng(10);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst_ref = 0.0, worst_inv = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + trial % 4, d = 1 + trial % 5, count = k + 3 + trial % 20;
    std::vector<std::vector<double>> x(count, std::vector<double>(d));
    std::vector<int> labels(count);
    for (int i = 0; i < count; ++i) {
      labels[i] = i < k ? i : static_cast<int>(rng() % k);
      for (double &v : x[i]) v = n(rng) + labels[i];
    }
    const double ch = CalinskiHarabasz(x, labels, k);
    worst_ref = std::max(worst_ref, rel(ch, ReferenceCh(x, labels, k)));
    const double scale = std::exp(n(rng));
    std::vector<double> shift(d);
    for (double &s : shift) s = 10.0 * n(rng);
    for (auto &p : x) {
      for (int j = 0; j < d; ++j) p[j] = scale * p[j] + shift[j];
    }
    worst_inv = std::max(worst_inv, rel(ch, CalinskiHarabasz(x, labels, k)));
  }
  return {hand == 32.0 && worst_ref <= 1e-9 && worst_inv <= 1e-9,
          "hand case " + Num(hand) + ", reference " + Num(worst_ref) + ", invariance " +
              Num(worst_inv)};
}

// Shared by criteria 8 and 11.
struct OverfitRun {
  Corpus corpus;
  AdaptationDataset data;
  WordVectors vectors;
  std::unique_ptr<Trainer> trainer;
  double seconds = 0.0;
};

std::unique_ptr<OverfitRun> RunOverfit() {
  auto run = std::make_unique<OverfitRun>();
  ToyCorpusOptions co;
  co.instances_per_domain = 10;
  run->corpus = MakeToyCorpus(co);
  SplitOptions so;
  so.target_fraction = 1.0;
  so.dev_fraction = 0.0;
  so.seed = 1;
  run->data = MakeAdaptationSplit(run->corpus, ToyDomainNames()[1], so);
  TrainConfig c;
  c.strategy = Strategy::kDamp;
  c.hp.embed_dim = 16;
  c.hp.encoder_hidden = 32;
  c.hp.dropout = 0.0;
  c.hp.batch_size = 1;
  c.hp.learning_rate = 1e-2;
  c.hp.init_range = 0.1;
  c.hp.beam_size = 1;
  c.hp.reverse_grad_discriminator = true;
  c.dev_beam = 1;
  c.epochs = 200;
  c.patience = 200;
  c.select_on = SelectOn::kTrain;
  c.seed = 1;
  run->vectors = MakeToyVectors(run->corpus, c.hp.embed_dim, 1);
  const auto start = Clock::now();
  run->trainer = std::make_unique<Trainer>(c, run->data, &run->vectors);
  run->trainer->Run();
  run->seconds = Seconds(start);
  return run;
}

// 8. Overfit smoke.
Outcome Overfit(const OverfitRun &run) {
  Preprocessor pre(run.trainer->bundle(), &run.vectors);
  std::vector<Instance> train = run.data.source_train;
  train.insert(train.end(), run.data.target_train.begin(), run.data.target_train.end());
  const std::vector<Example> examples = pre.PrepareAll(train);
  const EvalReport r = Evaluate(run.trainer->bundle(), examples, 1);
  const int epochs = static_cast<int>(run.trainer->log().size());
  const EmScores &s = r.overall;
  return {s.n == 20 && s.sketch_em == 1.0 && s.lf_oracle_em == 1.0 && s.lf_em == 1.0 &&
              epochs <= 200 && run.seconds < 300.0,
          std::to_string(s.n) + " instances, (" + Num(s.sketch_em) + ", " + Num(s.lf_oracle_em) +
              ", " + Num(s.lf_em) + ") after " + std::to_string(epochs) + " epochs, " +
              Num(run.seconds) + " s"};
}

// 9. Determinism.
Outcome Determinism(const fs::path &dir) {
  ToyCorpusOptions co;
  co.instances_per_domain = 12;
  const Corpus corpus = MakeToyCorpus(co);
  SplitOptions so;
  so.target_fraction = 0.5;
  so.dev_fraction = 0.2;
  const AdaptationDataset data = MakeAdaptationSplit(corpus, ToyDomainNames()[1], so);
  const WordVectors vectors = MakeToyVectors(corpus, 8, 1);
  auto run = [&](const std::string &name) {
    TrainConfig c;
    c.strategy = Strategy::kDamp;
    c.hp.embed_dim = 8;
    c.hp.encoder_hidden = 8;
    c.hp.batch_size = 8;
    c.epochs = 3;
    c.seed = 9;
    c.checkpoint = dir / (name + ".bin");
    c.log = dir / (name + ".tsv");
    Trainer t(c, data, &vectors);
    t.Run();
  };
  run("a");
  run("b");
  const bool logs = ReadFile(dir / "a.tsv") == ReadFile(dir / "b.tsv");
  const bool ckpt = ReadFile(dir / "a.bin") == ReadFile(dir / "b.bin") &&
                    ReadFile(dir / "a.bin.meta") == ReadFile(dir / "b.bin.meta");
  return {logs && ckpt, std::string("logs ") + (logs ? "identical" : "differ") +
                            ", checkpoints " + (ckpt ? "bitwise identical" : "differ")};
}

// 10. Strategy differentiation.
Outcome StrategyDifferentiation(const fs::path &dir) {
  ToyCorpusOptions co;
  co.instances_per_domain = 30;
  const Corpus corpus = MakeToyCorpus(co);
  SplitOptions so;
  so.target_fraction = 0.1;
  so.dev_fraction = 0.2;
  const AdaptationDataset data = MakeAdaptationSplit(corpus, ToyDomainNames()[1], so);
  const WordVectors vectors = MakeToyVectors(corpus, 8, 1);
  TrainConfig c;
  c.hp.embed_dim = 8;
  c.hp.encoder_hidden = 8;
  c.hp.batch_size = 4;
  c.epochs = 2;
  c.seed = 3;

  c.strategy = Strategy::kParamShare;
  Trainer share(c, data, &vectors);
  ParameterStore &store = share.bundle().model->store();
  auto fine_values = [&] {
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < store.size(); ++i) {
      if (share.bundle().model->IsFineStageParameter(store.at(i).name)) {
        out.push_back(store.at(i).value);
      }
    }
    return out;
  };
  int unchanged = 0, batches = 0;
  bool coarse_moved = true;
  for (std::size_t begin = 0; begin < share.source_train().size(); begin += 4, ++batches) {
    std::vector<const Example *> batch;
    for (std::size_t i = begin; i < std::min(begin + 4, share.source_train().size()); ++i) {
      batch.push_back(&share.source_train()[i]);
    }
    const auto before_fine = fine_values();
    const auto before_all = store.SnapshotValues();
    share.TrainBatch(batch, 1, 1, static_cast<int>(begin));
    unchanged += fine_values() == before_fine ? 1 : 0;
    coarse_moved = coarse_moved && store.SnapshotValues() != before_all;
  }

  c.strategy = Strategy::kPretrainFinetune;
  c.checkpoint = dir / "pretrain.bin";
  Trainer pretrain(c, data, &vectors);
  pretrain.Run();
  int phase_one = 0, clean = 0;
  for (const EpochRecord &r : pretrain.log()) {
    if (r.phase != 1) continue;
    ++phase_one;
    clean += r.n_target == 0 && r.n_source == static_cast<int>(data.source_train.size()) ? 1 : 0;
  }
  const bool saved = fs::exists(PhaseOnePath(c.checkpoint));
  return {batches > 0 && unchanged == batches && coarse_moved && phase_one > 0 &&
              clean == phase_one && saved,
          "param_share fine stage unchanged over " + std::to_string(unchanged) + "/" +
              std::to_string(batches) + " source batches; pretrain phase 1 " +
              std::to_string(clean) + "/" + std::to_string(phase_one) +
              " epochs with n_target 0, checkpoint " + (saved ? "saved" : "missing")};
}

// 11. Coarse representations separate domains less than fine ones.
Outcome Separability(const OverfitRun &run) {
  ToyCorpusOptions co;
  co.instances_per_domain = 40;
  co.seed = 2;
  const Corpus fresh = MakeToyCorpus(co);
  std::set<std::pair<int, TokenSeq>> seen;
  for (const Instance &i : run.data.source_train) seen.insert({i.domain, i.utterance});
  for (const Instance &i : run.data.target_train) seen.insert({i.domain, i.utterance});
  std::vector<Instance> held_out;
  for (const Domain &d : fresh.domains()) {
    for (const Instance &i : fresh.instances(d.id)) {
      if (!seen.count({i.domain, i.utterance})) held_out.push_back(i);
    }
  }
  Preprocessor pre(run.trainer->bundle(), &run.vectors);
  const std::vector<Example> examples = pre.PrepareAll(held_out);
  const RepresentationDump coarse =
      DumpRepresentations(run.trainer->bundle(), examples, Stage::kCoarse);
  const RepresentationDump fine = DumpRepresentations(run.trainer->bundle(), examples, Stage::kFine);
  if (!coarse.ch || !fine.ch) return {false, "CH undefined: " + coarse.ch_error + fine.ch_error};
  return {*coarse.ch < *fine.ch, std::to_string(examples.size()) + " held-out instances, CH coarse " +
                                     Num(*coarse.ch) + ", fine " + Num(*fine.ch)};
}

int Main() {
  const fs::path dir = fs::temp_directory_path() / "adaparse_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  std::unique_ptr<OverfitRun> overfit;
  std::string overfit_error;
  auto overfit_run = [&]() -> const OverfitRun & {
    if (!overfit && overfit_error.empty()) {
      try {
        overfit = RunOverfit();
      } catch (const std::exception &e) {
        overfit_error = e.what();
      }
    }
    if (!overfit) throw std::runtime_error("overfit run failed: " + overfit_error);
    return *overfit;
  };

  const std::vector<std::pair<const char *, std::function<Outcome()>>> criteria = {
      {"gradient fidelity", GradientFidelity},
      {"adversarial sign identity", SignIdentity},
      {"prior neutrality", PriorNeutrality},
      {"sketch induction oracle", SketchOracle},
      {"round trip", RoundTrip},
      {"beam correctness", BeamCorrectness},
      {"CH correctness", ChCorrectness},
      {"overfit smoke", [&] { return Overfit(overfit_run()); }},
      {"determinism", [&] { return Determinism(dir); }},
      {"strategy differentiation", [&] { return StrategyDifferentiation(dir); }},
      {"coarse vs fine separability (non-gating)", [&] { return Separability(overfit_run()); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const bool gating = i + 1 < criteria.size();
    const char *verdict = o.pass ? "PASS" : (gating ? "FAIL" : "FLAG");
    if (!o.pass && gating) ++failures;
    std::cout << verdict << "  " << (i + 1) << ". " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  fs::remove_all(dir);
  std::cout << (failures == 0 ? "all gating criteria pass" : std::to_string(failures) +
                                                                 " gating criteria fail")
            << std::endl;
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace adaparse

int main() { return adaparse::Main(); }
