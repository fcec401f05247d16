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


#include <chrono>
#include <cmath>
#include <random>

#include <doctest.h>

#include "adaparse/checkpoint.h"
#include "adaparse/fileutil.h"
#include "adaparse/model.h"
#include "adaparse/pipeline.h"
#include "adaparse/random.h"
#include "adaparse/toy.h"

namespace adaparse {
namespace {

using Vec = std::vector<double>;

// Plain-loop reference arithmetic, independent of the graph code.
Vec MatVec(const Tensor &m, const Vec &x) {
  Vec y(m.rows(), 0.0);
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) y[r] += m.at(r, c) * x[c];
  }
  return y;
}
Vec RefSoftmax(const Vec &x) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  Vec y(x.size());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) z += (y[i] = std::exp(x[i] - mx));
  for (double &v : y) v /= z;
  return y;
}
double RefSigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
Vec Weighted(const Tensor &rows, const Vec &w) {  // rows^T w
  Vec y(rows.cols(), 0.0);
  for (int r = 0; r < rows.rows(); ++r) {
    for (int c = 0; c < rows.cols(); ++c) y[c] += rows.at(r, c) * w[r];
  }
  return y;
}
Vec Cat(std::initializer_list<Vec> parts) {
  Vec out;
  for (const Vec &p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}
Vec Values(const Tensor &t) { return Vec(t.values().begin(), t.values().end()); }

Tensor RandomTensor(int rows, int cols, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(rows, cols);
  for (double &v : t.values()) v = u(rng);
  return t;
}

Hyperparams SmallHp() {
  Hyperparams hp;
  hp.embed_dim = 5;
  hp.encoder_hidden = 6;
  hp.dropout = 0.0;
  hp.init_range = 0.5;
  return hp;
}

const ModelDims kDims = {10, 8, 12};

Tensor Transposed(const Tensor &t) {
  Tensor out(t.cols(), t.rows());
  for (int r = 0; r < t.rows(); ++r) {
    for (int c = 0; c < t.cols(); ++c) out.at(c, r) = t.at(r, c);
  }
  return out;
}

TEST_CASE("pool and discriminate") {
  std::mt19937_64 rng = SeededRng(1);
  Graph g(false);
  const Tensor u = RandomTensor(3, 4, rng);
  Var states = g.Constant(u);
  Var zero_w = g.Constant(Tensor(1, 4));
  Var zero_b = g.Constant(Tensor(1, 1));
  Var pool = g.Constant(RandomTensor(4, 1, rng));
  CHECK(PoolAndDiscriminate(states, pool, zero_w, zero_b).probability.value()[0] == 0.5);

  const Tensor single = RandomTensor(1, 4, rng);
  CHECK(Values(PoolAndDiscriminate(g.Constant(single), pool, zero_w, zero_b).vector.value()) ==
        Values(single));

  const Tensor w_ae = RandomTensor(4, 1, rng), w_d = RandomTensor(1, 4, rng);
  const double b_d = 0.3;
  const Pooled p = PoolAndDiscriminate(states, g.Constant(w_ae), g.Constant(w_d),
                                       g.Constant(Tensor::Scalar(b_d)));
  const Vec alpha = RefSoftmax(MatVec(u, Values(w_ae)));
  const Vec pooled = Weighted(u, alpha);
  const double prob = RefSigmoid(MatVec(w_d, pooled)[0] + b_d);
  for (int i = 0; i < 4; ++i) CHECK(p.vector.value()[i] == doctest::Approx(pooled[i]).epsilon(1e-13));
  CHECK(p.probability.value()[0] == doctest::Approx(prob).epsilon(1e-13));
}

TEST_CASE("domain losses") {
  const Vec half = {0.5, 0.5, 0.5, 0.5};
  const std::vector<bool> balanced = {true, false, true, false};
  CHECK(DomainConfusionLoss(half, balanced) == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  CHECK(DomainDiscriminationLoss(half, balanced) == doctest::Approx(-std::log(0.5)).epsilon(1e-15));
  const Vec one = {0.9};
  CHECK(DomainDiscriminationLoss(one, {true}) == doctest::Approx(-std::log(0.9)).epsilon(1e-15));
  CHECK(DomainDiscriminationLoss(one, {true}) == doctest::Approx(0.10536).epsilon(1e-4));
  const Vec near_perfect = {1.0 - 1e-12, 1e-12};
  CHECK(DomainConfusionLoss(near_perfect, {true, false}) > -1e-11);
}

TEST_CASE("confusion is the exact negation of discrimination") {
  std::mt19937_64 rng = SeededRng(2);
  std::uniform_real_distribution<double> prob(1e-6, 1.0 - 1e-6);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> size(1, 64);
  for (int batch = 0; batch < 1000; ++batch) {
    const int n = size(rng);
    Vec p(n);
    std::vector<bool> src(n);
    for (int i = 0; i < n; ++i) {
      p[i] = prob(rng);
      src[i] = coin(rng);
    }
    CHECK(DomainConfusionLoss(p, src) == -DomainDiscriminationLoss(p, src));
  }
}

TEST_CASE("prior attention") {
  Graph g(false);
  const Tensor u = Tensor::Column({1.0, 2.0});  // two tokens, width 1
  Var states = g.Constant(u);
  Var states_t = g.Constant(Transposed(u));
  Var query = g.Constant(Tensor::Scalar(1.0));
  const Vec ones = {1.0, 1.0};
  const Attention same = PriorAttention(states, states_t, query, &ones);
  CHECK(same.prior_weights.value() == same.weights.value());
  CHECK(same.prior_context.value() == same.context.value());

  const Vec q = {1.0, 60.0};
  const Attention a = PriorAttention(states, states_t, query, &q);
  const Vec expected = RefSoftmax({1.0, 120.0});
  CHECK(a.prior_weights.value()[0] == doctest::Approx(expected[0]).epsilon(1e-12));
  CHECK(a.prior_weights.value()[0] < 1e-50);
  CHECK(a.prior_weights.value()[1] == doctest::Approx(1.0).epsilon(1e-15));

  std::mt19937_64 rng = SeededRng(3);
  const Tensor m = RandomTensor(4, 3, rng);
  Tensor flipped(4, 3);
  const int perm[] = {2, 0, 3, 1};
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 3; ++c) flipped.at(r, c) = m.at(perm[r], c);
  }
  const Vec pq = {1.0, 60.0, 1.0, 60.0};
  const Vec pq_perm = {pq[perm[0]], pq[perm[1]], pq[perm[2]], pq[perm[3]]};
  Var d = g.Constant(RandomTensor(3, 1, rng));
  const Attention base = PriorAttention(g.Constant(m), g.Constant(Transposed(m)), d, &pq);
  const Attention moved =
      PriorAttention(g.Constant(flipped), g.Constant(Transposed(flipped)), d, &pq_perm);
  for (int r = 0; r < 4; ++r) {
    CHECK(moved.weights.value()[r] == doctest::Approx(base.weights.value()[perm[r]]).epsilon(1e-14));
    CHECK(moved.prior_weights.value()[r] ==
          doctest::Approx(base.prior_weights.value()[perm[r]]).epsilon(1e-14));
  }
}

TEST_CASE("decode step matches a hand computation") {
  const Hyperparams hp = SmallHp();
  DampModel model(ArchitectureFor(Strategy::kDamp, hp), kDims, hp, 7);
  std::mt19937_64 rng = SeededRng(4);
  for (std::size_t i = 0; i < model.store().size(); ++i) {
    Parameter &p = model.store().at(i);
    if (p.name.find(".b") != std::string::npos) p.value = RandomTensor(p.value.rows(), 1, rng);
  }
  const int w = hp.EncoderWidth();
  const Tensor u = RandomTensor(4, w, rng);
  const Tensor h0 = RandomTensor(w, 1, rng), c0 = RandomTensor(w, 1, rng);
  const Vec q = {1.0, 60.0, 60.0, 1.0};
  const int token = 5;

  Graph g(false);
  DecoderContext ctx;
  ctx.utterance = g.Constant(u);
  ctx.utterance_t = g.Constant(Transposed(u));
  ctx.prior = &q;
  const StepOutput out = model.DecodeStep(g, Stage::kCoarse, ctx,
                                          {g.Constant(h0), g.Constant(c0)},
                                          StepInput::Embedding(token), nullptr);

  const ParameterStore &s = model.store();
  const Tensor &emb = s.Get("emb.sketch").value;
  Vec x(hp.embed_dim);
  for (int c = 0; c < hp.embed_dim; ++c) x[c] = emb.at(token, c);
  Vec gates = MatVec(s.Get("dec1.lstm.W").value, Cat({x, Values(h0)}));
  for (int i = 0; i < 4 * w; ++i) gates[i] += s.Get("dec1.lstm.b").value[i];
  Vec h1(w), c1(w);
  for (int k = 0; k < w; ++k) {
    const double in = RefSigmoid(gates[k]), forget = RefSigmoid(gates[w + k]);
    const double o = RefSigmoid(gates[2 * w + k]), cand = std::tanh(gates[3 * w + k]);
    c1[k] = forget * c0[k] + in * cand;
    h1[k] = o * std::tanh(c1[k]);
  }
  const Vec e = MatVec(u, h1);
  Vec eq(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) eq[i] = e[i] * q[i];
  const Vec ctx_plain = Weighted(u, RefSoftmax(e));
  const Vec ctx_prior = Weighted(u, RefSoftmax(eq));
  Vec hidden = MatVec(s.Get("dec1.out1.W").value, Cat({h1, ctx_plain, ctx_prior}));
  for (int i = 0; i < w; ++i) hidden[i] = std::tanh(hidden[i] + s.Get("dec1.out1.b").value[i]);
  Vec logits = MatVec(s.Get("dec1.out2.W").value, hidden);
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += s.Get("dec1.out2.b").value[i];
  const Vec dist = RefSoftmax(logits);

  REQUIRE(out.distribution.rows() == kDims.sketch_vocab);
  double total = 0.0;
  for (int i = 0; i < kDims.sketch_vocab; ++i) {
    CHECK(out.distribution.value()[i] == doctest::Approx(dist[i]).epsilon(1e-12));
    total += out.distribution.value()[i];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  for (int k = 0; k < w; ++k) CHECK(out.state.hidden.value()[k] == doctest::Approx(h1[k]).epsilon(1e-12));
}

TEST_CASE("a unit prior leaves decode steps bitwise unchanged") {
  const Hyperparams hp = SmallHp();
  DampModel damp(ArchitectureFor(Strategy::kDamp, hp), kDims, hp, 11);
  DampModel vanilla(ArchitectureFor(Strategy::kCoarse2FineMix, hp), kDims, hp, 12);
  REQUIRE(damp.architecture().prior_attention);
  REQUIRE_FALSE(vanilla.architecture().prior_attention);
  CopyParameters(damp.store(), vanilla.store());

  std::mt19937_64 rng = SeededRng(5);
  std::uniform_int_distribution<int> length(1, 7);
  const int w = hp.EncoderWidth();
  for (int trial = 0; trial < 100; ++trial) {
    const int n = length(rng), m = length(rng);
    const Tensor u = RandomTensor(n, w, rng), sk = RandomTensor(m, w, rng);
    const Tensor h = RandomTensor(w, 1, rng), c = RandomTensor(w, 1, rng);
    const Vec ones(n, 1.0);
    const bool fine = trial % 2 == 1;
    const Stage stage = fine ? Stage::kFine : Stage::kCoarse;
    const int vocab = fine ? kDims.lf_vocab : kDims.sketch_vocab;
    const StepInput input = fine && trial % 4 == 1
                                ? StepInput::SketchRow(static_cast<int>(rng() % m))
                                : StepInput::Embedding(static_cast<int>(rng() % vocab));
    auto run = [&](const DampModel &model, const Vec *prior) {
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
                                 out.state.cell.value(), out.utterance_attention.weights.value(),
                                 out.utterance_attention.prior_weights.value()};
    };
    CHECK(run(damp, &ones) == run(vanilla, nullptr));
  }
}

TEST_CASE("input switching on the calendar pair") {
  const TokenSeq lf = SplitTokens(
      "listValue ( countComparative ( getProperty ( singleton en.meeting ) ( string !type ) ) "
      "( string attendee ) ( string >= ) ( number 2 ) )");
  const TokenSeq sketch = SplitTokens(
      "listValue ( countComparative ( getProperty ( singleton@1 ) ( string !type ) ) "
      "( string@1 ) ( string >= ) ( number@1 ) )");
  const Vocabulary vocab = BuildVocab(std::vector<TokenSeq>{lf});
  const std::vector<SketchItem> plan = MakeSketchPlan(sketch, vocab);
  const Alignment alignment = Align(lf, sketch);
  std::vector<int> covering(lf.size());
  for (std::size_t k = 0; k < alignment.spans.size(); ++k) {
    for (int i = 0; i < alignment.spans[k].length; ++i) {
      covering[alignment.spans[k].lf_begin + i] = static_cast<int>(k);
    }
  }

  SketchCursor cursor(&plan);
  std::vector<int> embedding_positions;
  int switches = 0;
  for (std::size_t t = 0; t < lf.size(); ++t) {
    const int token = vocab.Index(lf[t]);
    const std::optional<int> forced = cursor.ForcedToken();
    if (forced) CHECK(*forced == token);
    const int row = cursor.Advance(token);
    ++switches;
    if (row < 0) {
      embedding_positions.push_back(static_cast<int>(t));
    } else {
      CHECK(row == covering[t]);
    }
  }
  CHECK(switches == static_cast<int>(lf.size()));
  std::vector<int> specific;
  for (std::size_t t = 0; t < lf.size(); ++t) {
    if (lf[t] == "en.meeting" || lf[t] == "attendee" || lf[t] == "2") {
      specific.push_back(static_cast<int>(t));
    }
  }
  CHECK(embedding_positions == specific);
  CHECK(embedding_positions.size() == 3);
  CHECK_FALSE(cursor.derailed());
  CHECK(cursor.exhausted());
  CHECK(cursor.ForcedToken() == Vocabulary::kEos);

  SketchCursor derail(&plan);
  derail.Advance(vocab.Index("("));
  CHECK(derail.derailed());
}

struct ToySetup {
  Corpus corpus;
  AdaptationDataset data;
  WordVectors vectors;
};

ToySetup MakeToy() {
  ToySetup s;
  ToyCorpusOptions co;
  co.instances_per_domain = 6;
  s.corpus = MakeToyCorpus(co);
  SplitOptions so;
  so.target_fraction = 1.0;
  so.dev_fraction = 0.0;
  s.data = MakeAdaptationSplit(s.corpus, ToyDomainNames()[1], so);
  s.vectors = MakeToyVectors(s.corpus, 6, 1);
  return s;
}

TEST_CASE("losses combine cross entropy and domain terms") {
  const ToySetup toy = MakeToy();
  Hyperparams hp = SmallHp();
  hp.embed_dim = 6;
  for (double lambda : {0.0, 0.4}) {
    hp.lambda_coarse = lambda;
    hp.lambda_fine = lambda / 2;
    const ModelBundle b = BuildBundle(Strategy::kDamp, hp, toy.data, {}, &toy.vectors, 3);
    Preprocessor pre(b, &toy.vectors);
    for (const Instance &inst : toy.data.target_train) {
      const Example ex = pre.Prepare(inst);
      CHECK_FALSE(ex.is_source);
      Graph g;
      LossOptions coarse;
      coarse.include_fine = false;
      const InstanceLosses lc = b.model->BuildLosses(g, ex, coarse);
      CHECK(lc.total.value()[0] ==
            doctest::Approx(lc.coarse_ce + lambda * lc.coarse_domain).epsilon(1e-12));
      LossOptions fine;
      fine.include_coarse = false;
      const InstanceLosses lf = b.model->BuildLosses(g, ex, fine);
      CHECK(lf.total.value()[0] ==
            doctest::Approx(lf.fine_ce + lambda / 2 * lf.fine_domain).epsilon(1e-12));
      CHECK(lc.coarse_ce > 0.0);
      CHECK(lf.fine_ce > 0.0);
    }
  }
}

TEST_CASE("full model losses pass the gradient check") {
  for (Strategy s : {Strategy::kDamp, Strategy::kCoarse2FineMix, Strategy::kSeq2Seq}) {
    CAPTURE(StrategyName(s));
    const auto start = std::chrono::steady_clock::now();
    const ModelGradCheck r = CheckModelGradients(s, 1);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(r.coarse_error <= 1e-4);
    CHECK(r.fine_error <= 1e-4);
    CHECK(r.entries > 0);
    CHECK(seconds < 60.0);
  }
}

TEST_CASE("fine stage parameters") {
  const Hyperparams hp = SmallHp();
  DampModel model(ArchitectureFor(Strategy::kDamp, hp), kDims, hp, 1);
  CHECK(model.IsFineStageParameter("enc2.fw.W"));
  CHECK(model.IsFineStageParameter("dec2.out1.W"));
  CHECK(model.IsFineStageParameter("disc_f.w_d"));
  CHECK(model.IsFineStageParameter("emb.lf"));
  CHECK_FALSE(model.IsFineStageParameter("enc1.fw.W"));
  CHECK_FALSE(model.IsFineStageParameter("emb.utt"));
  for (const char *name : {"emb.utt", "emb.sketch", "emb.lf"}) {
    const Tensor &e = model.store().Get(name).value;
    for (int c = 0; c < e.cols(); ++c) CHECK(e.at(Vocabulary::kPad, c) == 0.0);
  }
}

}  // namespace
}  // namespace adaparse
