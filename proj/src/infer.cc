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

#include "adaparse/infer.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "adaparse/error.h"

namespace adaparse {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> LogProbs(const Tensor &dist) {
  std::vector<double> out(dist.values().begin(), dist.values().end());
  for (double &v : out) v = std::log(v);
  out[Vocabulary::kPad] = kNegInf;
  out[Vocabulary::kBos] = kNegInf;
  out[Vocabulary::kUnk] = kNegInf;
  return out;
}

std::vector<double> Column(const Tensor &t) {
  return std::vector<double>(t.values().begin(), t.values().end());
}

// A sketch the fine stage can follow.
bool UsableSketch(const TokenSeq &sketch, const Vocabulary &lf_vocab) {
  if (!IsWellFormedSketch(sketch)) return false;
  for (const std::string &t : sketch) {
    std::optional<Placeholder> ph = ParsePlaceholder(t);
    const std::string &head = ph ? ph->head : t;
    if (ph && !ph->has_head()) continue;
    if (!lf_vocab.Contains(head)) return false;
  }
  return true;
}

}  // namespace

CoarseStepModel::Expansion CoarseStepModel::Expand(const State &s) const {
  FrozenStep step = decoder_->Step(s.decoder, StepInput::Embedding(s.input));
  return {LogProbs(step.distribution), std::move(step.state)};
}

CoarseStepModel::State CoarseStepModel::Extend(const State &, const Expansion &e,
                                               int token) const {
  return {e.next, token};
}

FineStepModel::FineStepModel(const StageDecoder *decoder, const std::vector<SketchItem> *plan,
                             bool constrained)
    : decoder_(decoder), plan_(plan), constrained_(constrained) {}

FineStepModel::State FineStepModel::Start() const {
  static const std::vector<SketchItem> kEmptyPlan;
  return {decoder_->initial(), StepInput::Embedding(Vocabulary::kBos),
          SketchCursor(plan_ != nullptr ? plan_ : &kEmptyPlan)};
}

FineStepModel::Expansion FineStepModel::Expand(const State &s) const {
  FrozenStep step = decoder_->Step(s.decoder, s.input);
  Expansion e{LogProbs(step.distribution), std::move(step.state)};
  if (plan_ != nullptr && constrained_) {
    if (std::optional<int> forced = s.cursor.ForcedToken()) {
      // The forced token may itself be reserved (an unknown head), so its
      // score is taken from the raw distribution.
      const double forced_lp = std::log(step.distribution[*forced]);
      std::fill(e.log_probs.begin(), e.log_probs.end(), kNegInf);
      e.log_probs[*forced] = forced_lp;
    } else {
      e.log_probs[Vocabulary::kEos] = kNegInf;
    }
  }
  return e;
}

FineStepModel::State FineStepModel::Extend(const State &s, const Expansion &e,
                                           int token) const {
  State next{e.next, StepInput::Embedding(token), s.cursor};
  if (plan_ != nullptr) {
    const int row = next.cursor.Advance(token);
    if (row >= 0) next.input = StepInput::SketchRow(row);
  }
  return next;
}

Parser::Parser(const ModelBundle &bundle)
    : bundle_(&bundle), classify_(MakeClassifier(bundle.shares)) {}

StageDecoder Parser::CoarseDecoder(const Example &ex,
                                   const DampModel::EncodedUtterance &enc) const {
  std::vector<double> prior = bundle_->arch.prior_attention ? ex.coarse_prior.q
                                                            : std::vector<double>();
  return StageDecoder(*bundle_->model, Stage::kCoarse, enc.coarse_states, std::move(prior),
                      std::nullopt, enc.coarse_init);
}

StageDecoder Parser::FineDecoder(const Example &ex, const DampModel::EncodedUtterance &enc,
                                 const TokenSeq *sketch) const {
  std::vector<double> prior = bundle_->arch.prior_attention ? ex.fine_prior.q
                                                            : std::vector<double>();
  std::optional<Tensor> sketch_states;
  if (sketch != nullptr) {
    std::vector<int> ids = bundle_->vocabs.sketch.Encode(*sketch);
    if (ids.empty()) ids.push_back(Vocabulary::kUnk);
    sketch_states = bundle_->model->EncodeSketch(ids);
  }
  return StageDecoder(*bundle_->model, Stage::kFine, enc.fine_states, std::move(prior),
                      std::move(sketch_states), enc.fine_init);
}

TokenSeq Parser::DecodeSketch(const Example &ex, const DampModel::EncodedUtterance &enc,
                              int beam) const {
  StageDecoder decoder = CoarseDecoder(ex, enc);
  CoarseStepModel model(&decoder);
  BeamResult r = BeamSearch(model, beam, bundle_->max_sketch_len);
  return bundle_->vocabs.sketch.Decode(r.tokens);
}

TokenSeq Parser::DecodeFine(const Example &ex, const DampModel::EncodedUtterance &enc,
                            const TokenSeq *sketch, bool constrained, int beam) const {
  StageDecoder decoder = FineDecoder(ex, enc, sketch);
  std::vector<SketchItem> plan;
  if (sketch != nullptr) plan = MakeSketchPlan(*sketch, bundle_->vocabs.logical_form);
  FineStepModel model(&decoder, sketch != nullptr ? &plan : nullptr, constrained);
  // A constrained decode must be able to spell out the whole sketch plus EOS.
  int max_len = bundle_->max_lf_len;
  if (constrained) {
    int needed = 1;
    for (const SketchItem &item : plan) needed += (item.token >= 0 ? 1 : 0) + item.slots;
    max_len = std::max(max_len, needed);
  }
  BeamResult r = BeamSearch(model, beam, max_len);
  return bundle_->vocabs.logical_form.Decode(r.tokens);
}

TokenSeq Parser::DecodeSketch(const Example &ex, int beam) const {
  if (!bundle_->arch.two_stage) return SketchOf(Parse(ex, beam).logical_form);
  return DecodeSketch(ex, bundle_->model->EncodeUtterance(ex.utterance_ids), beam);
}

TokenSeq Parser::SketchOf(const TokenSeq &lf) const {
  return InduceSketch(lf, classify_).sketch;
}

ParseResult Parser::Parse(const Example &ex, int beam) const {
  const DampModel::EncodedUtterance enc = bundle_->model->EncodeUtterance(ex.utterance_ids);
  ParseResult out;
  if (!bundle_->arch.two_stage) {
    out.logical_form = DecodeFine(ex, enc, nullptr, false, beam);
    out.sketch = SketchOf(out.logical_form);
    return out;
  }
  out.sketch = DecodeSketch(ex, enc, beam);
  const bool usable = UsableSketch(out.sketch, bundle_->vocabs.logical_form);
  out.fallback = !usable;
  out.logical_form = DecodeFine(ex, enc, &out.sketch,
                                usable && bundle_->hp.constrained_fine_decoding, beam);
  return out;
}

TokenSeq Parser::ParseWithOracleSketch(const Example &ex, int beam) const {
  if (ex.sketch.empty()) throw DataError("oracle-sketch parsing needs a gold sketch");
  const DampModel::EncodedUtterance enc = bundle_->model->EncodeUtterance(ex.utterance_ids);
  if (!bundle_->arch.two_stage) return DecodeFine(ex, enc, nullptr, false, beam);
  return DecodeFine(ex, enc, &ex.sketch, bundle_->hp.constrained_fine_decoding, beam);
}

AttentionTrace Parser::TraceAttention(const Example &ex, const ParseResult &parse) const {
  const DampModel::EncodedUtterance enc = bundle_->model->EncodeUtterance(ex.utterance_ids);
  AttentionTrace trace;
  if (bundle_->arch.two_stage) {
    StageDecoder decoder = CoarseDecoder(ex, enc);
    std::vector<int> ids = bundle_->vocabs.sketch.Encode(parse.sketch);
    ids.push_back(Vocabulary::kEos);
    FrozenState state = decoder.initial();
    int input = Vocabulary::kBos;
    for (int id : ids) {
      FrozenStep step = decoder.Step(state, StepInput::Embedding(input));
      trace.coarse.push_back({bundle_->vocabs.sketch.Token(id), Column(step.weights),
                              Column(step.prior_weights), {}});
      state = std::move(step.state);
      input = id;
    }
  }
  const TokenSeq *sketch = bundle_->arch.two_stage ? &parse.sketch : nullptr;
  StageDecoder decoder = FineDecoder(ex, enc, sketch);
  std::vector<SketchItem> plan;
  if (sketch != nullptr) plan = MakeSketchPlan(*sketch, bundle_->vocabs.logical_form);
  FineStepModel model(&decoder, sketch != nullptr ? &plan : nullptr, false);
  FineStepModel::State state = model.Start();
  std::vector<int> ids = bundle_->vocabs.logical_form.Encode(parse.logical_form);
  ids.push_back(Vocabulary::kEos);
  for (int id : ids) {
    FrozenStep step = decoder.Step(state.decoder, state.input);
    trace.fine.push_back({bundle_->vocabs.logical_form.Token(id), Column(step.weights),
                          Column(step.prior_weights), Column(step.sketch_weights)});
    FineStepModel::Expansion e{{}, std::move(step.state)};
    state = model.Extend(state, e, id);
  }
  return trace;
}

}  // namespace adaparse
