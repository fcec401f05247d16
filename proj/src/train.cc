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

#include "adaparse/train.h"

#include <algorithm>
#include <sstream>

#include "adaparse/checkpoint.h"
#include "adaparse/error.h"
#include "adaparse/fileutil.h"
#include "adaparse/infer.h"
#include "adaparse/random.h"

namespace adaparse {

namespace {

constexpr std::uint64_t kShuffleTag = 0x5f0c;
constexpr std::uint64_t kDropoutTag = 0xd40;
constexpr int kLogColumns = 13;
const char kBestPrefix[] = "state/best/";

Tensor ScalarTensor(double v) { return Tensor::Scalar(v); }

double Mean(double sum, int n) { return n > 0 ? sum / n : 0.0; }

const NamedTensor *FindExtra(const std::vector<NamedTensor> &extras, const std::string &name) {
  for (const NamedTensor &t : extras) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

}  // namespace

void TrainConfig::Validate() const {
  hp.Validate();
  if (epochs < 1) throw UsageError("epochs must be at least 1");
  if (patience < 1) throw UsageError("patience must be at least 1");
  if (dev_beam < 1) throw UsageError("dev beam must be at least 1");
  if (resume && state.empty()) throw UsageError("resuming needs a state file");
}

std::filesystem::path PhaseOnePath(const std::filesystem::path &checkpoint) {
  std::filesystem::path p = checkpoint;
  p += ".phase1";
  return p;
}

std::string FormatTrainingLog(std::span<const EpochRecord> records) {
  std::ostringstream out;
  out << "epoch\tcoarse_ce\tcoarse_domain_loss\tfine_ce\tfine_domain_loss\tdev_sketch_em\t"
         "dev_lf_em\tcoarse_loss\tfine_loss\tphase\tn_source\tn_target\tn_fine\n";
  for (const EpochRecord &r : records) {
    out << r.epoch << '\t' << FormatDouble(r.coarse_ce) << '\t' << FormatDouble(r.coarse_domain)
        << '\t' << FormatDouble(r.fine_ce) << '\t' << FormatDouble(r.fine_domain) << '\t'
        << FormatDouble(r.dev_sketch_em) << '\t' << FormatDouble(r.dev_lf_em) << '\t'
        << FormatDouble(r.coarse_loss) << '\t' << FormatDouble(r.fine_loss) << '\t' << r.phase
        << '\t' << r.n_source << '\t' << r.n_target << '\t' << r.n_fine << '\n';
  }
  return out.str();
}

Trainer::Trainer(const TrainConfig &config, const AdaptationDataset &data,
                 const WordVectors *vectors)
    : config_(config), vectors_(vectors) {
  config_.Validate();
  bundle_ = BuildBundle(config_.strategy, config_.hp, data, config_.relevance, vectors,
                        config_.seed);
  Preprocessor pre(bundle_, vectors_);
  source_train_ = pre.PrepareAll(data.source_train);
  source_dev_ = pre.PrepareAll(data.source_dev);
  target_train_ = pre.PrepareAll(data.target_train);
  target_dev_ = pre.PrepareAll(data.target_dev);
  train_all_ = source_train_;
  train_all_.insert(train_all_.end(), target_train_.begin(), target_train_.end());
}

std::vector<Trainer::PhasePlan> Trainer::Phases() const {
  auto pointers = [](const std::vector<Example> &a, const std::vector<Example> *b) {
    std::vector<const Example *> out;
    for (const Example &e : a) out.push_back(&e);
    if (b != nullptr) {
      for (const Example &e : *b) out.push_back(&e);
    }
    return out;
  };
  auto pick = [&](const std::vector<Example> &dev, const std::vector<Example> &train) {
    if (config_.select_on == SelectOn::kTrain || dev.empty()) return &train;
    return &dev;
  };
  std::vector<PhasePlan> phases;
  if (config_.strategy == Strategy::kPretrainFinetune) {
    phases.push_back({1, pointers(source_train_, nullptr), pick(source_dev_, source_train_)});
    phases.push_back({2, pointers(target_train_, nullptr), pick(target_dev_, target_train_)});
  } else {
    const std::vector<Example> *selection =
        config_.select_on == SelectOn::kTrain ? &train_all_ : pick(target_dev_, target_train_);
    phases.push_back({1, pointers(source_train_, &target_train_), selection});
  }
  return phases;
}

BatchStats Trainer::TrainBatch(std::span<const Example *const> batch, int phase, int epoch,
                               int first_position) {
  BatchStats stats;
  if (batch.empty()) return stats;
  const DampModel &model = *bundle_.model;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Example &ex = *batch[i];
    (ex.is_source ? stats.n_source : stats.n_target) += 1;
    std::mt19937_64 rng =
        SeededRng(config_.seed, {kDropoutTag, static_cast<std::uint64_t>(phase),
                                 static_cast<std::uint64_t>(epoch),
                                 static_cast<std::uint64_t>(first_position + i)});
    LossOptions options;
    options.include_coarse = model.architecture().two_stage;
    options.include_fine = !(config_.strategy == Strategy::kParamShare && ex.is_source);
    options.dropout_rng = config_.hp.dropout > 0.0 ? &rng : nullptr;
    if (!options.include_coarse && !options.include_fine) continue;

    Graph g;
    InstanceLosses losses = model.BuildLosses(g, ex, options);
    g.Backward(losses.total, scale);
    if (losses.has_coarse) {
      stats.coarse_ce += losses.coarse_ce;
      stats.coarse_domain += losses.coarse_domain;
      ++stats.n_coarse;
    }
    if (losses.has_fine) {
      stats.fine_ce += losses.fine_ce;
      stats.fine_domain += losses.fine_domain;
      ++stats.n_fine;
    }
  }
  RmsPropOptions opt;
  opt.learning_rate = config_.hp.learning_rate;
  opt.decay = config_.hp.rmsprop_decay;
  opt.epsilon = config_.hp.rmsprop_epsilon;
  opt.l2 = config_.hp.l2;
  opt.clip_norm = config_.hp.clip_norm;
  RmsPropStep(bundle_.model->store(), opt);
  return stats;
}

SelectionScore Trainer::Score(std::span<const Example> examples, int beam) const {
  SelectionScore score;
  if (examples.empty()) return score;
  Parser parser(bundle_);
  int sketch_hits = 0, lf_hits = 0;
  for (const Example &ex : examples) {
    ParseResult r = parser.Parse(ex, beam);
    sketch_hits += ExactMatch(r.sketch, ex.sketch) ? 1 : 0;
    lf_hits += ExactMatch(r.logical_form, ex.logical_form) ? 1 : 0;
  }
  score.sketch_em = static_cast<double>(sketch_hits) / examples.size();
  score.lf_em = static_cast<double>(lf_hits) / examples.size();
  return score;
}

void Trainer::SaveState(int phase, int next_epoch) const {
  std::vector<NamedTensor> extras;
  extras.push_back({"state/phase", ScalarTensor(phase)});
  extras.push_back({"state/next_epoch", ScalarTensor(next_epoch)});
  extras.push_back({"state/best_em", ScalarTensor(best_em_)});
  extras.push_back({"state/best_sketch_em", ScalarTensor(best_sketch_em_)});
  extras.push_back({"state/best_epoch", ScalarTensor(best_epoch_)});
  extras.push_back({"state/bad_epochs", ScalarTensor(bad_epochs_)});
  Tensor log(static_cast<int>(log_.size()), kLogColumns);
  for (int r = 0; r < log.rows(); ++r) {
    const EpochRecord &e = log_[r];
    const double row[kLogColumns] = {
        double(e.phase),   double(e.epoch),    e.coarse_ce,      e.coarse_domain, e.coarse_loss,
        e.fine_ce,         e.fine_domain,      e.fine_loss,      e.dev_sketch_em, e.dev_lf_em,
        double(e.n_source), double(e.n_target), double(e.n_fine)};
    for (int c = 0; c < kLogColumns; ++c) log.at(r, c) = row[c];
  }
  extras.push_back({"state/log", std::move(log)});
  const ParameterStore &store = bundle_.model->store();
  for (std::size_t i = 0; i < best_values_.size(); ++i) {
    extras.push_back({kBestPrefix + store.at(i).name, best_values_[i]});
  }
  SaveCheckpoint(config_.state, store, extras);
}

std::pair<int, int> Trainer::LoadState() {
  std::vector<NamedTensor> extras;
  ParameterStore loaded = LoadCheckpoint(config_.state, &extras);
  ParameterStore &store = bundle_.model->store();
  if (loaded.size() != store.size()) {
    throw ModelError("state " + config_.state.string() + " does not match the model");
  }
  CopyParameters(loaded, store);
  auto scalar = [&](const char *name) {
    const NamedTensor *t = FindExtra(extras, name);
    if (t == nullptr || t->value.size() != 1) {
      throw ModelError("state " + config_.state.string() + " lacks " + name);
    }
    return t->value[0];
  };
  const int phase = static_cast<int>(scalar("state/phase"));
  const int next_epoch = static_cast<int>(scalar("state/next_epoch"));
  best_em_ = scalar("state/best_em");
  best_sketch_em_ = scalar("state/best_sketch_em");
  best_epoch_ = static_cast<int>(scalar("state/best_epoch"));
  bad_epochs_ = static_cast<int>(scalar("state/bad_epochs"));

  const NamedTensor *log = FindExtra(extras, "state/log");
  if (log == nullptr || (log->value.rows() > 0 && log->value.cols() != kLogColumns)) {
    throw ModelError("state " + config_.state.string() + " has no usable log");
  }
  log_.clear();
  for (int r = 0; r < log->value.rows(); ++r) {
    auto v = [&](int c) { return log->value.at(r, c); };
    EpochRecord e;
    e.phase = static_cast<int>(v(0));
    e.epoch = static_cast<int>(v(1));
    e.coarse_ce = v(2);
    e.coarse_domain = v(3);
    e.coarse_loss = v(4);
    e.fine_ce = v(5);
    e.fine_domain = v(6);
    e.fine_loss = v(7);
    e.dev_sketch_em = v(8);
    e.dev_lf_em = v(9);
    e.n_source = static_cast<int>(v(10));
    e.n_target = static_cast<int>(v(11));
    e.n_fine = static_cast<int>(v(12));
    log_.push_back(e);
  }
  best_values_.clear();
  if (FindExtra(extras, kBestPrefix + store.at(0).name) != nullptr) {
    for (std::size_t i = 0; i < store.size(); ++i) {
      const NamedTensor *t = FindExtra(extras, kBestPrefix + store.at(i).name);
      if (t == nullptr || !t->value.SameShape(store.at(i).value)) {
        throw ModelError("state " + config_.state.string() + ": bad best snapshot for " +
                         store.at(i).name);
      }
      best_values_.push_back(t->value);
    }
  }
  return {phase, next_epoch};
}

void Trainer::FinishPhase(int phase) {
  if (!best_values_.empty()) bundle_.model->store().RestoreValues(best_values_);
  if (config_.strategy == Strategy::kPretrainFinetune && phase == 1 &&
      !config_.checkpoint.empty()) {
    SaveBundle(PhaseOnePath(config_.checkpoint), bundle_);
  }
}

void Trainer::Run() {
  const std::vector<PhasePlan> phases = Phases();
  std::size_t first_phase = 0;
  int first_epoch = 1;
  if (config_.resume && std::filesystem::exists(config_.state)) {
    auto [phase, next_epoch] = LoadState();
    auto it = std::find_if(phases.begin(), phases.end(),
                           [&](const PhasePlan &p) { return p.phase == phase; });
    if (it == phases.end()) throw ModelError("state refers to an unknown phase");
    first_phase = it - phases.begin();
    first_epoch = next_epoch;
  }

  const int batch_size = config_.hp.batch_size;
  for (std::size_t pi = first_phase; pi < phases.size(); ++pi) {
    const PhasePlan &plan = phases[pi];
    const int start = pi == first_phase ? first_epoch : 1;
    if (start == 1 && pi > 0) {
      best_em_ = -1.0;
      best_sketch_em_ = -1.0;
      best_epoch_ = 0;
      bad_epochs_ = 0;
      best_values_.clear();
    }
    const int n = static_cast<int>(plan.pool.size());
    for (int epoch = start; epoch <= config_.epochs; ++epoch) {
      std::mt19937_64 shuffle =
          SeededRng(config_.seed, {kShuffleTag, static_cast<std::uint64_t>(plan.phase),
                                   static_cast<std::uint64_t>(epoch)});
      const std::vector<int> order = Permutation(n, shuffle);
      BatchStats total;
      for (int b = 0; b < n; b += batch_size) {
        std::vector<const Example *> batch;
        for (int i = b; i < std::min(n, b + batch_size); ++i) batch.push_back(plan.pool[order[i]]);
        BatchStats s = TrainBatch(batch, plan.phase, epoch, b);
        total.coarse_ce += s.coarse_ce;
        total.coarse_domain += s.coarse_domain;
        total.fine_ce += s.fine_ce;
        total.fine_domain += s.fine_domain;
        total.n_coarse += s.n_coarse;
        total.n_fine += s.n_fine;
        total.n_source += s.n_source;
        total.n_target += s.n_target;
      }

      EpochRecord rec;
      rec.phase = plan.phase;
      rec.epoch = epoch;
      rec.coarse_ce = Mean(total.coarse_ce, total.n_coarse);
      rec.coarse_domain = Mean(total.coarse_domain, total.n_coarse);
      rec.coarse_loss = config_.hp.lambda_coarse * rec.coarse_domain + rec.coarse_ce;
      rec.fine_ce = Mean(total.fine_ce, total.n_fine);
      rec.fine_domain = Mean(total.fine_domain, total.n_fine);
      rec.fine_loss = config_.hp.lambda_fine * rec.fine_domain + rec.fine_ce;
      rec.n_source = total.n_source;
      rec.n_target = total.n_target;
      rec.n_fine = total.n_fine;
      const SelectionScore score = Score(*plan.selection, config_.dev_beam);
      rec.dev_sketch_em = score.sketch_em;
      rec.dev_lf_em = score.lf_em;
      log_.push_back(rec);

      // LF EM decides; sketch EM breaks ties.
      if (score.lf_em > best_em_ ||
          (score.lf_em == best_em_ && score.sketch_em > best_sketch_em_)) {
        best_em_ = score.lf_em;
        best_sketch_em_ = score.sketch_em;
        best_epoch_ = epoch;
        bad_epochs_ = 0;
        best_values_ = bundle_.model->store().SnapshotValues();
      } else {
        ++bad_epochs_;
      }
      const bool perfect =
          config_.stop_when_perfect && score.sketch_em == 1.0 && score.lf_em == 1.0;
      const bool stop = perfect || bad_epochs_ >= config_.patience;

      if (!config_.log.empty()) WriteFileAtomically(config_.log, FormatTrainingLog(log_));
      if (!config_.state.empty()) SaveState(plan.phase, stop ? config_.epochs + 1 : epoch + 1);
      if (stop) break;
    }
    FinishPhase(plan.phase);
  }
  if (!config_.checkpoint.empty()) SaveBundle(config_.checkpoint, bundle_);
}

}  // namespace adaparse
