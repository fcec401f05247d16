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

// Exact-match evaluation, Calinski-Harabasz scores of pooled utterance
// representations, attention dumps and target-fraction sweeps. All text
// outputs are tab-separated.

#ifndef ADAPARSE_EVAL_H_
#define ADAPARSE_EVAL_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaparse/corpus.h"
#include "adaparse/infer.h"
#include "adaparse/pipeline.h"
#include "adaparse/train.h"

namespace adaparse {

struct EmScores {
  int n = 0;
  double sketch_em = 0.0;
  double lf_oracle_em = 0.0;
  double lf_em = 0.0;
};

struct EvalReport {
  EmScores overall;
  std::vector<std::pair<std::string, EmScores>> per_domain;  // domain id order
  int fallbacks = 0;
};

struct PredictionRow {
  std::string domain;
  TokenSeq utterance;
  TokenSeq predicted_sketch;
  TokenSeq predicted_lf;
  TokenSeq gold_lf;
  bool match = false;
  // Extra diagnostics, not part of the dump.
  TokenSeq gold_sketch;
  TokenSeq oracle_lf;
  bool fallback = false;
};

// Decodes every example three ways: sketch only, logical form from the gold
// sketch, full pipeline.
EvalReport Evaluate(const ModelBundle &bundle, std::span<const Example> examples, int beam,
                    std::vector<PredictionRow> *rows = nullptr);
// Columns in the order sketch_em, lf_oracle_em, lf_em.
std::string FormatReport(const EvalReport &report);
// domain, utterance, predicted sketch, predicted LF, gold LF, match.
std::string FormatPredictions(std::span<const PredictionRow> rows);

// (B / (k - 1)) / (W / (n - k)). Labels must lie in [0, num_clusters); with
// num_clusters < 0 the clusters are the distinct labels. Throws DataError
// for k < 2, n <= k, an empty cluster or W = 0.
double CalinskiHarabasz(std::span<const std::vector<double>> points, std::span<const int> labels,
                        int num_clusters = -1);

struct RepresentationDump {
  std::vector<int> domains;
  std::vector<std::vector<double>> vectors;
  std::optional<double> ch;  // unset when degenerate
  std::string ch_error;
};

RepresentationDump DumpRepresentations(const ModelBundle &bundle,
                                       std::span<const Example> examples, Stage stage);
// domain then the vector components.
std::string FormatRepresentations(const ModelBundle &bundle, const RepresentationDump &dump);

// One row per decoder step and attention kind:
// stage, step, emitted token, kind (alpha / alpha_pri / alpha_sketch), weights.
std::string FormatAttention(const Example &ex, const ParseResult &parse,
                            const AttentionTrace &trace);

struct SweepRow {
  double fraction = 0.0;
  int n_target = 0;
  double sketch_em = 0.0;
  double lf_em = 0.0;
};

// Trains one model per fraction with `config` (its output paths ignored)
// and scores it on the target test split, or target dev without one.
std::vector<SweepRow> SweepTargetFraction(std::span<const double> fractions,
                                          const TrainConfig &config, const Corpus &corpus,
                                          const std::string &target_domain,
                                          const SplitOptions &split, const Corpus *test,
                                          const WordVectors *vectors);
std::string FormatSweep(std::span<const SweepRow> rows);

}  // namespace adaparse

#endif  // ADAPARSE_EVAL_H_
