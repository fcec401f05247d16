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

// Two-stage parsing over a frozen bundle: beam search for the sketch, then
// beam search for the logical form with input switching. Fine decoding
// follows the sketch at general positions and decodes placeholder slots
// freely, unless constrained_fine_decoding is off.

#ifndef ADAPARSE_INFER_H_
#define ADAPARSE_INFER_H_

#include <string>
#include <vector>

#include "adaparse/beam.h"
#include "adaparse/model.h"
#include "adaparse/pipeline.h"

namespace adaparse {

// Step models for BeamSearch.
class CoarseStepModel {
 public:
  struct State {
    FrozenState decoder;
    int input = Vocabulary::kBos;
  };
  struct Expansion {
    std::vector<double> log_probs;
    FrozenState next;
  };

  explicit CoarseStepModel(const StageDecoder *decoder) : decoder_(decoder) {}
  State Start() const { return {decoder_->initial(), Vocabulary::kBos}; }
  Expansion Expand(const State &s) const;
  State Extend(const State &s, const Expansion &e, int token) const;
  int eos() const { return Vocabulary::kEos; }

 private:
  const StageDecoder *decoder_;
};

class FineStepModel {
 public:
  struct State {
    FrozenState decoder;
    StepInput input;
    SketchCursor cursor;
  };
  struct Expansion {
    std::vector<double> log_probs;
    FrozenState next;
  };

  // `plan` null for single-stage models; it must outlive the model.
  FineStepModel(const StageDecoder *decoder, const std::vector<SketchItem> *plan,
                bool constrained);
  State Start() const;
  Expansion Expand(const State &s) const;
  State Extend(const State &s, const Expansion &e, int token) const;
  int eos() const { return Vocabulary::kEos; }

 private:
  const StageDecoder *decoder_;
  const std::vector<SketchItem> *plan_;
  bool constrained_;
};

struct ParseResult {
  TokenSeq sketch;
  TokenSeq logical_form;
  // The predicted sketch was unusable; the fine stage decoded without
  // following it.
  bool fallback = false;
};

struct AttentionStep {
  std::string token;  // token emitted at this step
  std::vector<double> weights;
  std::vector<double> prior_weights;
  std::vector<double> sketch_weights;  // fine stage only
};

struct AttentionTrace {
  std::vector<AttentionStep> coarse;
  std::vector<AttentionStep> fine;
};

class Parser {
 public:
  explicit Parser(const ModelBundle &bundle);

  ParseResult Parse(const Example &ex, int beam) const;
  // Fine stage driven by ex.sketch instead of a predicted sketch.
  TokenSeq ParseWithOracleSketch(const Example &ex, int beam) const;
  TokenSeq DecodeSketch(const Example &ex, int beam) const;

  // Replays `parse` through both decoders and records the attention rows.
  AttentionTrace TraceAttention(const Example &ex, const ParseResult &parse) const;

 private:
  TokenSeq DecodeSketch(const Example &ex, const DampModel::EncodedUtterance &enc,
                        int beam) const;
  TokenSeq DecodeFine(const Example &ex, const DampModel::EncodedUtterance &enc,
                      const TokenSeq *sketch, bool constrained, int beam) const;
  StageDecoder CoarseDecoder(const Example &ex, const DampModel::EncodedUtterance &enc) const;
  StageDecoder FineDecoder(const Example &ex, const DampModel::EncodedUtterance &enc,
                           const TokenSeq *sketch) const;
  TokenSeq SketchOf(const TokenSeq &lf) const;

  const ModelBundle *bundle_;
  TokenClassifier classify_;
};

}  // namespace adaparse

#endif  // ADAPARSE_INFER_H_
