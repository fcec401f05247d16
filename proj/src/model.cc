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

#include "adaparse/model.h"

#include <cmath>

#include "adaparse/checkpoint.h"
#include "adaparse/error.h"
#include "adaparse/random.h"

namespace adaparse {

namespace {

constexpr struct {
  Strategy strategy;
  std::string_view name;
} kStrategyNames[] = {
    {Strategy::kDamp, "damp"},
    {Strategy::kSeq2Seq, "seq2seq"},
    {Strategy::kCoarse2FineMix, "coarse2fine_mix"},
    {Strategy::kPretrainFinetune, "pretrain_finetune"},
    {Strategy::kParamShare, "param_share"},
    {Strategy::kGradReversal, "grad_reversal"},
};

constexpr int kCoarseEncoder = 1;
constexpr int kFineEncoder = 2;
constexpr int kSketchEncoder = 3;

bool StartsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

}  // namespace

std::string_view StrategyName(Strategy s) {
  for (const auto &entry : kStrategyNames) {
    if (entry.strategy == s) return entry.name;
  }
  return "unknown";
}

Strategy ParseStrategy(std::string_view name) {
  for (const auto &entry : kStrategyNames) {
    if (entry.name == name) return entry.strategy;
  }
  throw UsageError("unknown strategy '" + std::string(name) +
                   "' (expected damp, seq2seq, coarse2fine_mix, pretrain_finetune, "
                   "param_share or grad_reversal)");
}

int Hyperparams::PerDirection() const {
  return hidden_per_direction ? encoder_hidden : encoder_hidden / 2;
}

void Hyperparams::Validate() const {
  auto require = [](bool ok, const std::string &what) {
    if (!ok) throw UsageError("invalid hyperparameter: " + what);
  };
  require(embed_dim > 0, "embed_dim must be positive");
  require(encoder_hidden > 0, "encoder_hidden must be positive");
  require(hidden_per_direction || encoder_hidden % 2 == 0,
          "encoder_hidden must be even when split across directions");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
  require(lambda_coarse >= 0.0 && lambda_fine >= 0.0, "lambdas must be non-negative");
  require(r_coarse > 1.0, "r_coarse must exceed 1");
  require(r_fine >= 1.0, "r_fine must be at least 1");
  require(l2 >= 0.0, "l2 must be non-negative");
  require(batch_size >= 1, "batch_size must be positive");
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(rmsprop_decay >= 0.0 && rmsprop_decay < 1.0, "rmsprop_decay must be in [0, 1)");
  require(rmsprop_epsilon > 0.0, "rmsprop_epsilon must be positive");
  require(clip_norm >= 0.0, "clip_norm must be non-negative");
  require(beam_size >= 1, "beam_size must be positive");
  require(relevant_k >= 0, "relevant_k must be non-negative");
  require(max_len_factor >= 1.0, "max_len_factor must be at least 1");
  require(init_range > 0.0, "init_range must be positive");
}

Architecture ArchitectureFor(Strategy strategy, const Hyperparams &hp) {
  Architecture a;
  switch (strategy) {
    case Strategy::kDamp:
      a.coarse_adversary =
          hp.reverse_grad_discriminator ? Adversary::kReversal : Adversary::kConfusion;
      a.fine_adversary = Adversary::kDiscrimination;
      break;
    case Strategy::kSeq2Seq:
      a.two_stage = false;
      a.prior_attention = false;
      a.coarse_adversary = Adversary::kNone;
      a.fine_adversary = Adversary::kNone;
      break;
    case Strategy::kCoarse2FineMix:
    case Strategy::kPretrainFinetune:
    case Strategy::kParamShare:
      a.prior_attention = false;
      a.shared_encoder = true;
      a.coarse_adversary = Adversary::kNone;
      a.fine_adversary = Adversary::kNone;
      break;
    case Strategy::kGradReversal:
      a.prior_attention = false;
      a.shared_encoder = true;
      a.coarse_adversary = Adversary::kReversal;
      a.fine_adversary = Adversary::kReversal;
      break;
  }
  return a;
}

std::vector<SketchItem> MakeSketchPlan(std::span<const std::string> sketch,
                                       const Vocabulary &lf_vocab) {
  std::vector<SketchItem> plan;
  plan.reserve(sketch.size());
  for (const std::string &t : sketch) {
    if (std::optional<Placeholder> ph = ParsePlaceholder(t)) {
      plan.push_back({ph->has_head() ? lf_vocab.Index(ph->head) : -1, ph->slots});
    } else {
      plan.push_back({lf_vocab.Index(t), 0});
    }
  }
  return plan;
}

SketchCursor::SketchCursor(const std::vector<SketchItem> *plan) : plan_(plan) { Normalize(); }

void SketchCursor::Normalize() {
  const int n = static_cast<int>(plan_->size());
  if (!derailed_ && slots_left_ == 0 && index_ < n && (*plan_)[index_].token < 0) {
    slots_left_ = (*plan_)[index_].slots;
  }
}

bool SketchCursor::exhausted() const {
  return !derailed_ && slots_left_ == 0 && index_ >= static_cast<int>(plan_->size());
}

std::optional<int> SketchCursor::ForcedToken() const {
  if (derailed_ || slots_left_ > 0) return std::nullopt;
  if (index_ >= static_cast<int>(plan_->size())) return Vocabulary::kEos;
  return (*plan_)[index_].token;
}

int SketchCursor::Advance(int token) {
  if (derailed_) return -1;
  if (slots_left_ > 0) {
    if (--slots_left_ == 0) {
      ++index_;
      Normalize();
    }
    return -1;
  }
  const int n = static_cast<int>(plan_->size());
  if (index_ < n && token == (*plan_)[index_].token) {
    const int row = index_;
    const SketchItem &item = (*plan_)[index_];
    if (item.slots > 0) {
      slots_left_ = item.slots;
    } else {
      ++index_;
      Normalize();
    }
    return row;
  }
  derailed_ = true;
  return -1;
}

Attention PriorAttention(Var utterance, Var utterance_t, Var query,
                         const std::vector<double> *prior) {
  Graph &g = utterance.graph();
  Attention att;
  Var scores = MatMul(utterance, query);
  att.weights = Softmax(scores);
  att.context = MatMul(utterance_t, att.weights);
  if (prior == nullptr) {
    att.prior_weights = att.weights;
    att.prior_context = att.context;
    return att;
  }
  if (static_cast<int>(prior->size()) != scores.rows()) {
    throw ShapeError("prior_attention: prior of length " + std::to_string(prior->size()) +
                     " for " + std::to_string(scores.rows()) + " tokens");
  }
  Var q = g.Constant(Tensor::Column(*prior));
  att.prior_weights = Softmax(Mul(scores, q));
  att.prior_context = MatMul(utterance_t, att.prior_weights);
  return att;
}

Pooled PoolAndDiscriminate(Var states, Var pool_weight, Var classifier_weight,
                           Var classifier_bias) {
  if (states.rows() == 0) throw ShapeError("pool_and_discriminate: empty input");
  if (pool_weight.rows() != states.cols() || classifier_weight.cols() != states.cols()) {
    throw ShapeError("pool_and_discriminate: weights " + pool_weight.value().ShapeString() +
                     " / " + classifier_weight.value().ShapeString() + " for states " +
                     states.value().ShapeString());
  }
  Var alpha = Softmax(MatMul(states, pool_weight));
  Pooled out;
  out.vector = MatMul(Transpose(states), alpha);
  out.probability = Sigmoid(Add(MatMul(classifier_weight, out.vector), classifier_bias));
  return out;
}

double DomainConfusionLoss(std::span<const double> probs, const std::vector<bool> &is_source) {
  if (probs.size() != is_source.size()) throw DataError("domain loss: size mismatch");
  if (probs.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    sum += is_source[i] ? std::log(probs[i]) : std::log(1.0 - probs[i]);
  }
  return sum / static_cast<double>(probs.size());
}

double DomainDiscriminationLoss(std::span<const double> probs,
                                const std::vector<bool> &is_source) {
  if (probs.size() != is_source.size()) throw DataError("domain loss: size mismatch");
  if (probs.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    sum -= is_source[i] ? std::log(probs[i]) : std::log(1.0 - probs[i]);
  }
  return sum / static_cast<double>(probs.size());
}

Var DomainLogLikelihood(Var probability, bool is_source) {
  return is_source ? Log(probability) : Log(Affine(probability, -1.0, 1.0));
}

// ---------------------------------------------------------------------------
// DampModel

DampModel::DampModel(const Architecture &arch, const ModelDims &dims, const Hyperparams &hp,
                     std::uint64_t seed)
    : arch_(arch), dims_(dims), hp_(hp) {
  hp_.Validate();
  std::mt19937_64 rng = SeededRng(seed, {0x1a17u});
  CreateParameters(rng);
  Bind();
}

DampModel::DampModel(const Architecture &arch, const ModelDims &dims, const Hyperparams &hp,
                     const ParameterStore &loaded)
    : arch_(arch), dims_(dims), hp_(hp) {
  hp_.Validate();
  std::mt19937_64 rng = SeededRng(0);
  CreateParameters(rng);
  if (loaded.size() != store_.size()) {
    throw ModelError("checkpoint holds " + std::to_string(loaded.size()) +
                     " parameters, model expects " + std::to_string(store_.size()));
  }
  CopyParameters(loaded, store_);
  Bind();
}

void DampModel::CreateParameters(std::mt19937_64 &rng) {
  const int e = hp_.embed_dim;
  const int h = hp_.PerDirection();
  const int w = hp_.EncoderWidth();
  const double r = hp_.init_range;
  auto embedding = [&](const std::string &name, int vocab) {
    if (vocab < Vocabulary::kNumReserved) {
      throw ModelError(name + ": vocabulary of size " + std::to_string(vocab));
    }
    Parameter &p = store_.Add(name, vocab, e, r, rng);
    for (int c = 0; c < e; ++c) p.value.at(Vocabulary::kPad, c) = 0.0;
  };
  auto encoder = [&](const std::string &name) {
    LstmParams::Create(store_, name + ".fw", e, h, r, rng);
    LstmParams::Create(store_, name + ".bw", e, h, r, rng);
  };
  auto decoder = [&](const std::string &name, int vocab, int features) {
    store_.Add(name + ".init.W", w, w, r, rng);
    store_.Add(name + ".init.b", Tensor(w, 1));
    LstmParams::Create(store_, name + ".lstm", e, w, r, rng);
    store_.Add(name + ".out1.W", w, features, r, rng);
    store_.Add(name + ".out1.b", Tensor(w, 1));
    store_.Add(name + ".out2.W", vocab, w, r, rng);
    store_.Add(name + ".out2.b", Tensor(vocab, 1));
  };
  auto head = [&](const std::string &name) {
    store_.Add(name + ".w_ae", w, 1, r, rng);
    store_.Add(name + ".w_d", 1, w, r, rng);
    store_.Add(name + ".b_d", Tensor(1, 1));
  };

  embedding("emb.utt", dims_.utterance_vocab);
  if (arch_.two_stage) embedding("emb.sketch", dims_.sketch_vocab);
  embedding("emb.lf", dims_.lf_vocab);
  if (arch_.two_stage) encoder("enc1");
  if (!arch_.two_stage || !arch_.shared_encoder) encoder("enc2");
  if (arch_.two_stage) encoder("enc3");
  if (arch_.two_stage) decoder("dec1", dims_.sketch_vocab, 3 * w);
  decoder("dec2", dims_.lf_vocab, arch_.two_stage ? 4 * w : 3 * w);
  if (arch_.two_stage && e != w) store_.Add("dec2.switch.W", e, w, r, rng);
  if (arch_.two_stage && arch_.coarse_adversary != Adversary::kNone) head("disc_c");
  if (arch_.fine_adversary != Adversary::kNone) head("disc_f");
}

void DampModel::Bind() {
  auto bind_encoder = [&](int index, const std::string &name, const std::string &emb) {
    encoders_[index].embedding = &store_.Get(emb);
    encoders_[index].forward = LstmParams::Bind(store_, name + ".fw");
    encoders_[index].backward = LstmParams::Bind(store_, name + ".bw");
  };
  auto bind_decoder = [&](DecoderParams &d, const std::string &name, const std::string &emb) {
    d.prefix = name;
    d.embedding = &store_.Get(emb);
    d.init_w = &store_.Get(name + ".init.W");
    d.init_b = &store_.Get(name + ".init.b");
    d.lstm = LstmParams::Bind(store_, name + ".lstm");
    d.out1_w = &store_.Get(name + ".out1.W");
    d.out1_b = &store_.Get(name + ".out1.b");
    d.out2_w = &store_.Get(name + ".out2.W");
    d.out2_b = &store_.Get(name + ".out2.b");
    d.switch_w = store_.Contains(name + ".switch.W") ? &store_.Get(name + ".switch.W") : nullptr;
  };
  auto bind_head = [&](HeadParams &hp, const std::string &name) {
    hp.pool = &store_.Get(name + ".w_ae");
    hp.weight = &store_.Get(name + ".w_d");
    hp.bias = &store_.Get(name + ".b_d");
  };

  if (arch_.two_stage) {
    bind_encoder(kCoarseEncoder, "enc1", "emb.utt");
    bind_encoder(kSketchEncoder, "enc3", "emb.sketch");
    bind_decoder(coarse_, "dec1", "emb.sketch");
  }
  if (!arch_.two_stage || !arch_.shared_encoder) bind_encoder(kFineEncoder, "enc2", "emb.utt");
  bind_decoder(fine_, "dec2", "emb.lf");
  if (store_.Contains("disc_c.w_ae")) bind_head(coarse_head_, "disc_c");
  if (store_.Contains("disc_f.w_ae")) bind_head(fine_head_, "disc_f");
}

void DampModel::SetEmbeddings(const std::string &name, const EmbeddingTable &table) {
  Parameter &p = store_.Get(name);
  if (!table.matrix.SameShape(p.value)) {
    throw ModelError(name + ": embedding table " + table.matrix.ShapeString() +
                     " does not match parameter " + p.value.ShapeString());
  }
  p.value = table.matrix;
  for (int c = 0; c < p.value.cols(); ++c) p.value.at(Vocabulary::kPad, c) = 0.0;
}

bool DampModel::IsFineStageParameter(const std::string &name) const {
  return StartsWith(name, "enc2.") || StartsWith(name, "enc3.") || StartsWith(name, "dec2.") ||
         StartsWith(name, "disc_f.") || name == "emb.lf";
}

const DampModel::DecoderParams &DampModel::decoder(Stage stage) const {
  if (stage == Stage::kCoarse && !arch_.two_stage) {
    throw ModelError("single-stage model has no coarse decoder");
  }
  return stage == Stage::kCoarse ? coarse_ : fine_;
}

int DampModel::UtteranceEncoder(Stage stage) const {
  if (!arch_.two_stage) return kFineEncoder;
  if (stage == Stage::kCoarse || arch_.shared_encoder) return kCoarseEncoder;
  return kFineEncoder;
}

bool DampModel::HasDiscriminator(Stage stage) const {
  return (stage == Stage::kCoarse ? coarse_head_ : fine_head_).pool != nullptr;
}

BiLstmOutput DampModel::Encode(Graph &g, int encoder, std::span<const int> ids,
                               std::mt19937_64 *dropout_rng) const {
  const EncoderParams &enc = encoders_[encoder];
  if (enc.embedding == nullptr) {
    throw ModelError("encoder " + std::to_string(encoder) + " is not part of this model");
  }
  if (ids.empty()) throw ShapeError("encode: empty input");
  Var table = g.Param(*enc.embedding);
  std::vector<Var> inputs;
  inputs.reserve(ids.size());
  for (int id : ids) {
    inputs.push_back(Dropout(EmbeddingGather(table, id), hp_.dropout, dropout_rng));
  }
  BiLstmOutput out = BiLstmEncode(g, enc.forward, enc.backward, inputs);
  out.states = Dropout(out.states, hp_.dropout, dropout_rng);
  return out;
}

DecoderState DampModel::InitialState(Graph &g, Stage stage, const BiLstmOutput &encoded) const {
  const DecoderParams &d = decoder(stage);
  Var last = ConcatRows({encoded.final_forward, encoded.final_backward});
  DecoderState s;
  s.hidden = Tanh(Add(MatMul(g.Param(*d.init_w), last), g.Param(*d.init_b)));
  s.cell = g.Constant(Tensor(hp_.EncoderWidth(), 1));
  return s;
}

StepOutput DampModel::DecodeStep(Graph &g, Stage stage, const DecoderContext &context,
                                 const DecoderState &state, StepInput input,
                                 std::mt19937_64 *dropout_rng) const {
  const DecoderParams &d = decoder(stage);
  Var x;
  if (input.sketch_row >= 0) {
    if (!context.sketch.valid()) throw ModelError("decode_step: sketch input without sketch");
    x = Row(context.sketch, input.sketch_row);
    if (d.switch_w != nullptr) x = MatMul(g.Param(*d.switch_w), x);
  } else {
    x = EmbeddingGather(g.Param(*d.embedding), input.embedding_id);
  }
  x = Dropout(x, hp_.dropout, dropout_rng);

  LstmState next = LstmCell(g, d.lstm, x, {state.hidden, state.cell});
  Var query = Dropout(next.hidden, hp_.dropout, dropout_rng);

  StepOutput out;
  out.state = {next.hidden, next.cell};
  out.utterance_attention =
      PriorAttention(context.utterance, context.utterance_t, query, context.prior);
  std::vector<Var> features = {query, out.utterance_attention.context,
                               out.utterance_attention.prior_context};
  if (context.sketch.valid()) {
    Attention sk = PriorAttention(context.sketch, context.sketch_t, query, nullptr);
    out.sketch_weights = sk.weights;
    features.push_back(sk.context);
  }
  Var f = ConcatRows(features);
  Var hidden = Tanh(Add(MatMul(g.Param(*d.out1_w), f), g.Param(*d.out1_b)));
  Var logits = Add(MatMul(g.Param(*d.out2_w), hidden), g.Param(*d.out2_b));
  out.distribution = Softmax(logits);
  return out;
}

Pooled DampModel::Discriminate(Graph &g, Stage stage, Var states) const {
  const HeadParams &h = stage == Stage::kCoarse ? coarse_head_ : fine_head_;
  if (h.pool == nullptr) return {};
  return PoolAndDiscriminate(states, g.Param(*h.pool), g.Param(*h.weight), g.Param(*h.bias));
}

Var DampModel::DomainTerm(Graph &g, Stage stage, Var states, bool is_source,
                          Adversary adversary) const {
  switch (adversary) {
    case Adversary::kConfusion:
      return DomainLogLikelihood(Discriminate(g, stage, states).probability, is_source);
    case Adversary::kDiscrimination:
      return Scale(DomainLogLikelihood(Discriminate(g, stage, states).probability, is_source),
                   -1.0);
    case Adversary::kReversal: {
      Var reversed = GradientReversal(states, 1.0);
      return Scale(
          DomainLogLikelihood(Discriminate(g, stage, reversed).probability, is_source), -1.0);
    }
    case Adversary::kNone:
      break;
  }
  throw ModelError("domain term requested without an adversary");
}

Var DampModel::TeacherForcedCoarse(Graph &g, const Example &ex, const BiLstmOutput &enc,
                                   Var states_t, std::mt19937_64 *rng) const {
  DecoderContext ctx;
  ctx.utterance = enc.states;
  ctx.utterance_t = states_t;
  if (arch_.prior_attention) ctx.prior = &ex.coarse_prior.q;
  DecoderState state = InitialState(g, Stage::kCoarse, enc);
  StepInput input = StepInput::Embedding(Vocabulary::kBos);
  std::vector<Var> losses;
  const std::size_t n = ex.sketch_ids.size();
  for (std::size_t t = 0; t <= n; ++t) {
    const int target = t < n ? ex.sketch_ids[t] : Vocabulary::kEos;
    StepOutput out = DecodeStep(g, Stage::kCoarse, ctx, state, input, rng);
    losses.push_back(CrossEntropy(out.distribution, target));
    state = out.state;
    input = StepInput::Embedding(target);
  }
  return Sum(ConcatRows(losses));
}

Var DampModel::TeacherForcedFine(Graph &g, const Example &ex, const BiLstmOutput &utt,
                                 Var states_t, const BiLstmOutput *sketch,
                                 std::mt19937_64 *rng) const {
  DecoderContext ctx;
  ctx.utterance = utt.states;
  ctx.utterance_t = states_t;
  if (arch_.prior_attention) ctx.prior = &ex.fine_prior.q;
  if (sketch != nullptr) {
    ctx.sketch = sketch->states;
    ctx.sketch_t = Transpose(sketch->states);
  }
  SketchCursor cursor(&ex.plan);
  DecoderState state = InitialState(g, Stage::kFine, utt);
  StepInput input = StepInput::Embedding(Vocabulary::kBos);
  std::vector<Var> losses;
  const std::size_t n = ex.lf_ids.size();
  for (std::size_t t = 0; t <= n; ++t) {
    const int target = t < n ? ex.lf_ids[t] : Vocabulary::kEos;
    StepOutput out = DecodeStep(g, Stage::kFine, ctx, state, input, rng);
    losses.push_back(CrossEntropy(out.distribution, target));
    state = out.state;
    if (t == n) break;
    if (sketch != nullptr) {
      const int row = cursor.Advance(target);
      if (cursor.derailed()) {
        throw ModelError("logical form does not follow its sketch at position " +
                         std::to_string(t));
      }
      input = row >= 0 ? StepInput::SketchRow(row) : StepInput::Embedding(target);
    } else {
      input = StepInput::Embedding(target);
    }
  }
  return Sum(ConcatRows(losses));
}

InstanceLosses DampModel::BuildLosses(Graph &g, const Example &ex,
                                      const LossOptions &options) const {
  std::mt19937_64 *rng = options.dropout_rng;
  InstanceLosses res;
  std::vector<Var> terms;

  if (arch_.two_stage) {
    if (ex.sketch_ids.empty() || ex.plan.size() != ex.sketch_ids.size()) {
      throw ModelError("example is missing its sketch");
    }
    std::optional<BiLstmOutput> coarse_enc;
    Var coarse_t;
    if (options.include_coarse) {
      coarse_enc = Encode(g, kCoarseEncoder, ex.utterance_ids, rng);
      coarse_t = Transpose(coarse_enc->states);
      Var ce = TeacherForcedCoarse(g, ex, *coarse_enc, coarse_t, rng);
      res.coarse_ce = ce.value()[0];
      res.has_coarse = true;
      terms.push_back(ce);
      if (arch_.coarse_adversary != Adversary::kNone) {
        Var dom = DomainTerm(g, Stage::kCoarse, coarse_enc->states, ex.is_source,
                             arch_.coarse_adversary);
        res.coarse_domain = dom.value()[0];
        terms.push_back(Scale(dom, hp_.lambda_coarse));
      }
    }
    if (options.include_fine) {
      BiLstmOutput fine_enc;
      Var fine_t;
      if (arch_.shared_encoder && coarse_enc.has_value()) {
        fine_enc = *coarse_enc;
        fine_t = coarse_t;
      } else {
        fine_enc = Encode(g, UtteranceEncoder(Stage::kFine), ex.utterance_ids, rng);
        fine_t = Transpose(fine_enc.states);
      }
      BiLstmOutput sketch_enc = Encode(g, kSketchEncoder, ex.sketch_ids, rng);
      Var ce = TeacherForcedFine(g, ex, fine_enc, fine_t, &sketch_enc, rng);
      res.fine_ce = ce.value()[0];
      res.has_fine = true;
      terms.push_back(ce);
      if (arch_.fine_adversary != Adversary::kNone) {
        Var dom =
            DomainTerm(g, Stage::kFine, fine_enc.states, ex.is_source, arch_.fine_adversary);
        res.fine_domain = dom.value()[0];
        terms.push_back(Scale(dom, hp_.lambda_fine));
      }
    }
  } else if (options.include_fine) {
    BiLstmOutput enc = Encode(g, kFineEncoder, ex.utterance_ids, rng);
    Var ce = TeacherForcedFine(g, ex, enc, Transpose(enc.states), nullptr, rng);
    res.fine_ce = ce.value()[0];
    res.has_fine = true;
    terms.push_back(ce);
  }

  if (terms.empty()) {
    res.total = g.Constant(Tensor::Scalar(0.0));
  } else {
    res.total = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) res.total = Add(res.total, terms[i]);
  }
  return res;
}

DampModel::EncodedUtterance DampModel::EncodeUtterance(std::span<const int> ids) const {
  Graph g(/*record_gradients=*/false);
  EncodedUtterance out;
  std::optional<BiLstmOutput> coarse;
  if (arch_.two_stage) {
    coarse = Encode(g, kCoarseEncoder, ids, nullptr);
    out.coarse_states = coarse->states.value();
    DecoderState s = InitialState(g, Stage::kCoarse, *coarse);
    out.coarse_init = {s.hidden.value(), s.cell.value()};
  }
  BiLstmOutput fine = (arch_.two_stage && arch_.shared_encoder)
                          ? *coarse
                          : Encode(g, UtteranceEncoder(Stage::kFine), ids, nullptr);
  out.fine_states = fine.states.value();
  DecoderState s = InitialState(g, Stage::kFine, fine);
  out.fine_init = {s.hidden.value(), s.cell.value()};
  return out;
}

Tensor DampModel::EncodeSketch(std::span<const int> sketch_ids) const {
  Graph g(/*record_gradients=*/false);
  return Encode(g, kSketchEncoder, sketch_ids, nullptr).states.value();
}

Tensor DampModel::PooledRepresentation(Stage stage, std::span<const int> ids) const {
  Graph g(/*record_gradients=*/false);
  Var states = Encode(g, UtteranceEncoder(stage), ids, nullptr).states;
  if (HasDiscriminator(stage)) return Discriminate(g, stage, states).vector.value();
  const Tensor &u = states.value();
  Tensor mean(u.cols(), 1);
  for (int r = 0; r < u.rows(); ++r)
    for (int c = 0; c < u.cols(); ++c) mean[c] += u.at(r, c) / u.rows();
  return mean;
}

// ---------------------------------------------------------------------------
// StageDecoder

namespace {

Tensor TransposeOf(const Tensor &t) {
  Tensor out(t.cols(), t.rows());
  for (int r = 0; r < t.rows(); ++r)
    for (int c = 0; c < t.cols(); ++c) out.at(c, r) = t.at(r, c);
  return out;
}

}  // namespace

StageDecoder::StageDecoder(const DampModel &model, Stage stage, Tensor utterance_states,
                           std::vector<double> prior, std::optional<Tensor> sketch_states,
                           FrozenState initial)
    : model_(&model),
      stage_(stage),
      utterance_(std::move(utterance_states)),
      utterance_t_(TransposeOf(utterance_)),
      prior_(std::move(prior)),
      sketch_(std::move(sketch_states)),
      initial_(std::move(initial)) {
  if (sketch_.has_value()) sketch_t_ = TransposeOf(*sketch_);
}

int StageDecoder::vocab_size() const {
  return stage_ == Stage::kCoarse ? model_->dims().sketch_vocab : model_->dims().lf_vocab;
}

FrozenStep StageDecoder::Step(const FrozenState &state, StepInput input) const {
  Graph g(/*record_gradients=*/false);
  DecoderContext ctx;
  ctx.utterance = g.ConstantRef(utterance_);
  ctx.utterance_t = g.ConstantRef(utterance_t_);
  if (!prior_.empty()) ctx.prior = &prior_;
  if (sketch_.has_value()) {
    ctx.sketch = g.ConstantRef(*sketch_);
    ctx.sketch_t = g.ConstantRef(*sketch_t_);
  }
  DecoderState s{g.ConstantRef(state.hidden), g.ConstantRef(state.cell)};
  StepOutput out = model_->DecodeStep(g, stage_, ctx, s, input, nullptr);
  FrozenStep step;
  step.distribution = out.distribution.value();
  step.state = {out.state.hidden.value(), out.state.cell.value()};
  step.weights = out.utterance_attention.weights.value();
  step.prior_weights = out.utterance_attention.prior_weights.value();
  if (out.sketch_weights.valid()) step.sketch_weights = out.sketch_weights.value();
  return step;
}

}  // namespace adaparse
