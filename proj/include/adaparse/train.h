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

// Training loop for all adaptation strategies.
//
// Each epoch shuffles the phase's instance pool with an rng derived from
// (seed, phase, epoch), so a run resumed from its state file replays exactly
// what an uninterrupted run would have done. pretrain_finetune runs two
// phases: source only (model selection on source dev), then target only.

#ifndef ADAPARSE_TRAIN_H_
#define ADAPARSE_TRAIN_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "adaparse/corpus.h"
#include "adaparse/model.h"
#include "adaparse/pipeline.h"

namespace adaparse {

enum class SelectOn { kTargetDev, kTrain };

struct TrainConfig {
  Strategy strategy = Strategy::kDamp;
  Hyperparams hp;
  int epochs = 100;
  int patience = 10;
  std::uint64_t seed = 1;
  SelectOn select_on = SelectOn::kTargetDev;
  // Stop once the selection set is parsed perfectly (sketch and LF).
  bool stop_when_perfect = true;
  // Beam used for the per-epoch selection decode.
  int dev_beam = 1;
  RelevanceSettings relevance;

  std::filesystem::path checkpoint;  // best bundle; empty to skip
  std::filesystem::path log;         // per-epoch TSV; empty to skip
  std::filesystem::path state;       // resumable trainer state; empty to skip
  bool resume = false;

  // Throws UsageError.
  void Validate() const;
};

struct EpochRecord {
  int phase = 1;
  int epoch = 0;
  double coarse_ce = 0.0;
  double coarse_domain = 0.0;  // L_c^D
  double coarse_loss = 0.0;    // L_c
  double fine_ce = 0.0;
  double fine_domain = 0.0;    // L_f^D
  double fine_loss = 0.0;      // L_f
  double dev_sketch_em = 0.0;
  double dev_lf_em = 0.0;
  int n_source = 0;
  int n_target = 0;
  int n_fine = 0;  // instances that contributed a fine-stage loss

  friend bool operator==(const EpochRecord &, const EpochRecord &) = default;
};

// Header plus one line per record.
std::string FormatTrainingLog(std::span<const EpochRecord> records);

struct BatchStats {
  double coarse_ce = 0.0;
  double coarse_domain = 0.0;
  double fine_ce = 0.0;
  double fine_domain = 0.0;
  int n_coarse = 0;
  int n_fine = 0;
  int n_source = 0;
  int n_target = 0;
};

struct SelectionScore {
  double sketch_em = 0.0;
  double lf_em = 0.0;
};

class Trainer {
 public:
  // Builds the bundle (vocabularies, fresh weights) from `data`.
  Trainer(const TrainConfig &config, const AdaptationDataset &data, const WordVectors *vectors);

  // Runs (or resumes) training, restores the best weights and writes the
  // configured outputs. The best epoch has the highest selection LF EM, ties
  // broken by sketch EM.
  void Run();

  // One RMSProp update over `batch`. Instance i draws dropout noise from
  // (seed, phase, epoch, first_position + i).
  BatchStats TrainBatch(std::span<const Example *const> batch, int phase, int epoch,
                        int first_position);
  SelectionScore Score(std::span<const Example> examples, int beam) const;

  ModelBundle &bundle() { return bundle_; }
  const std::vector<EpochRecord> &log() const { return log_; }
  int best_epoch() const { return best_epoch_; }
  double best_em() const { return best_em_; }
  const std::vector<Example> &source_train() const { return source_train_; }
  const std::vector<Example> &target_train() const { return target_train_; }

 private:
  struct PhasePlan {
    int phase;
    std::vector<const Example *> pool;
    const std::vector<Example> *selection;
  };
  std::vector<PhasePlan> Phases() const;
  void SaveState(int phase, int next_epoch) const;
  // Returns (phase, next epoch).
  std::pair<int, int> LoadState();
  void FinishPhase(int phase);

  TrainConfig config_;
  const WordVectors *vectors_;
  ModelBundle bundle_;
  std::vector<Example> source_train_;
  std::vector<Example> source_dev_;
  std::vector<Example> target_train_;
  std::vector<Example> target_dev_;
  std::vector<Example> train_all_;

  std::vector<EpochRecord> log_;
  std::vector<Tensor> best_values_;
  double best_em_ = -1.0;
  double best_sketch_em_ = -1.0;
  int best_epoch_ = 0;
  int bad_epochs_ = 0;
};

std::filesystem::path PhaseOnePath(const std::filesystem::path &checkpoint);

}  // namespace adaparse

#endif  // ADAPARSE_TRAIN_H_
