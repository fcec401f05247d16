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


#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "adaparse/checkpoint.h"
#include "adaparse/error.h"
#include "adaparse/fileutil.h"
#include "adaparse/infer.h"
#include "adaparse/random.h"
#include "adaparse/toy.h"
#include "adaparse/train.h"

namespace adaparse {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / ("adaparse_train_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Toy {
  Corpus corpus;
  AdaptationDataset data;
  WordVectors vectors;
};

Toy MakeToy(double target_fraction, int per_domain = 30) {
  Toy t;
  ToyCorpusOptions co;
  co.instances_per_domain = per_domain;
  t.corpus = MakeToyCorpus(co);
  SplitOptions so;
  so.target_fraction = target_fraction;
  so.dev_fraction = 0.2;
  so.seed = 5;
  t.data = MakeAdaptationSplit(t.corpus, ToyDomainNames()[1], so);
  t.vectors = MakeToyVectors(t.corpus, 8, 1);
  return t;
}

TrainConfig SmallConfig(Strategy strategy, int epochs) {
  TrainConfig c;
  c.strategy = strategy;
  c.hp.embed_dim = 8;
  c.hp.encoder_hidden = 8;
  c.hp.batch_size = 8;
  c.hp.dropout = 0.3;
  c.hp.learning_rate = 5e-3;
  c.epochs = epochs;
  c.patience = 100;
  c.seed = 9;
  return c;
}

TEST_CASE("tensor archives round trip byte for byte") {
  const fs::path dir = TempDir("archive");
  std::mt19937_64 rng = SeededRng(1);
  ParameterStore store;
  store.Add("a", 3, 4, 1.0, rng);
  store.Add("b", 5, 1, 1.0, rng);
  store.Get("a").accum.Fill(0.25);
  const NamedTensor extra[] = {{"state/x", Tensor::Scalar(-1.5e-300)}};
  SaveCheckpoint(dir / "one.bin", store, extra);
  std::vector<NamedTensor> extras;
  const ParameterStore loaded = LoadCheckpoint(dir / "one.bin", &extras);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.Get("a").value == store.Get("a").value);
  CHECK(loaded.Get("a").accum == store.Get("a").accum);
  CHECK(loaded.Get("b").value == store.Get("b").value);
  REQUIRE(extras.size() == 1);
  CHECK(extras[0].value[0] == -1.5e-300);
  SaveCheckpoint(dir / "two.bin", loaded, extras);
  CHECK(ReadFile(dir / "one.bin") == ReadFile(dir / "two.bin"));
}

TEST_CASE("corrupted archives are rejected") {
  const fs::path dir = TempDir("corrupt");
  std::mt19937_64 rng = SeededRng(2);
  ParameterStore store;
  store.Add("a", 4, 4, 1.0, rng);
  SaveCheckpoint(dir / "good.bin", store);
  const std::string bytes = ReadFile(dir / "good.bin");

  CHECK_THROWS_AS(LoadCheckpoint(dir / "missing.bin"), ModelError);
  WriteFileAtomically(dir / "short.bin", bytes.substr(0, bytes.size() - 9));
  CHECK_THROWS_AS(LoadCheckpoint(dir / "short.bin"), ModelError);
  WriteFileAtomically(dir / "header.bin", "not an archive\n" + bytes);
  CHECK_THROWS_AS(LoadCheckpoint(dir / "header.bin"), ModelError);
  WriteFileAtomically(dir / "trailing.bin", bytes + "x");
  CHECK_THROWS_AS(LoadCheckpoint(dir / "trailing.bin"), ModelError);
}

TEST_CASE("bundles round trip") {
  const fs::path dir = TempDir("bundle");
  const Toy toy = MakeToy(0.5, 10);
  TrainConfig c = SmallConfig(Strategy::kDamp, 2);
  c.checkpoint = dir / "model.bin";
  Trainer trainer(c, toy.data, &toy.vectors);
  trainer.Run();
  const ModelBundle loaded = LoadBundle(c.checkpoint);
  CHECK(loaded.strategy == Strategy::kDamp);
  CHECK(loaded.vocabs.logical_form == trainer.bundle().vocabs.logical_form);
  CHECK(loaded.shares == trainer.bundle().shares);
  CHECK(loaded.model->store().SnapshotValues() == trainer.bundle().model->store().SnapshotValues());

  Preprocessor a(trainer.bundle(), &toy.vectors), b(loaded, &toy.vectors);
  const Parser pa(trainer.bundle()), pb(loaded);
  for (const Instance &inst : toy.data.target_dev) {
    CHECK(pa.Parse(a.Prepare(inst), 3).logical_form == pb.Parse(b.Prepare(inst), 3).logical_form);
  }

  fs::remove(MetaPath(c.checkpoint));
  CHECK_THROWS_AS(LoadBundle(c.checkpoint), ModelError);
}

TEST_CASE("identical runs give identical logs and checkpoints") {
  const fs::path dir = TempDir("determinism");
  const Toy toy = MakeToy(0.5, 12);
  auto run = [&](const std::string &name) {
    TrainConfig c = SmallConfig(Strategy::kDamp, 3);
    c.checkpoint = dir / (name + ".bin");
    c.log = dir / (name + ".tsv");
    Trainer t(c, toy.data, &toy.vectors);
    t.Run();
  };
  run("a");
  run("b");
  CHECK(ReadFile(dir / "a.tsv") == ReadFile(dir / "b.tsv"));
  CHECK(ReadFile(dir / "a.bin") == ReadFile(dir / "b.bin"));
  CHECK(ReadFile(dir / "a.bin.meta") == ReadFile(dir / "b.bin.meta"));
}

TEST_CASE("resumed training matches an uninterrupted run") {
  const fs::path dir = TempDir("resume");
  const Toy toy = MakeToy(0.5, 12);
  TrainConfig full = SmallConfig(Strategy::kDamp, 4);
  Trainer straight(full, toy.data, &toy.vectors);
  straight.Run();

  TrainConfig part = SmallConfig(Strategy::kDamp, 2);
  part.state = dir / "state.bin";
  {
    Trainer first(part, toy.data, &toy.vectors);
    first.Run();
  }
  TrainConfig rest = full;
  rest.state = part.state;
  rest.resume = true;
  Trainer resumed(rest, toy.data, &toy.vectors);
  resumed.Run();

  REQUIRE(resumed.log().size() == straight.log().size());
  for (std::size_t i = 0; i < straight.log().size(); ++i) {
    const EpochRecord &a = straight.log()[i], &b = resumed.log()[i];
    CHECK(a.epoch == b.epoch);
    CHECK(std::abs(a.coarse_loss - b.coarse_loss) <= 1e-12);
    CHECK(std::abs(a.fine_loss - b.fine_loss) <= 1e-12);
    CHECK(a.dev_lf_em == b.dev_lf_em);
  }
  const auto va = straight.bundle().model->store().SnapshotValues();
  const auto vb = resumed.bundle().model->store().SnapshotValues();
  REQUIRE(va.size() == vb.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    for (std::size_t j = 0; j < va[i].size(); ++j) worst = std::max(worst, std::abs(va[i][j] - vb[i][j]));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("param_share keeps fine-stage parameters out of source batches") {
  const Toy toy = MakeToy(0.1);
  Trainer t(SmallConfig(Strategy::kParamShare, 1), toy.data, &toy.vectors);
  ParameterStore &store = t.bundle().model->store();
  auto fine_values = [&] {
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < store.size(); ++i) {
      if (t.bundle().model->IsFineStageParameter(store.at(i).name)) out.push_back(store.at(i).value);
    }
    return out;
  };
  REQUIRE_FALSE(fine_values().empty());
  REQUIRE(t.target_train().size() == static_cast<std::size_t>(std::round(0.1 * 24)));

  for (int step = 0; step < 5; ++step) {
    const auto before_fine = fine_values();
    const auto before_all = store.SnapshotValues();
    std::vector<const Example *> batch;
    for (std::size_t i = step; i < t.source_train().size() && batch.size() < 4; ++i) {
      batch.push_back(&t.source_train()[i]);
    }
    const BatchStats s = t.TrainBatch(batch, 1, 1, step * 4);
    CHECK(s.n_fine == 0);
    CHECK(s.n_source == static_cast<int>(batch.size()));
    CHECK(fine_values() == before_fine);
    CHECK_FALSE(store.SnapshotValues() == before_all);
  }
  const auto before_fine = fine_values();
  std::vector<const Example *> target = {&t.target_train()[0]};
  CHECK(t.TrainBatch(target, 1, 1, 0).n_fine == 1);
  CHECK_FALSE(fine_values() == before_fine);
}

TEST_CASE("pretrain_finetune phase one sees no target instances") {
  const fs::path dir = TempDir("pretrain");
  const Toy toy = MakeToy(0.1);
  TrainConfig c = SmallConfig(Strategy::kPretrainFinetune, 2);
  c.checkpoint = dir / "model.bin";
  c.log = dir / "log.tsv";
  Trainer t(c, toy.data, &toy.vectors);
  t.Run();
  int phase_one = 0, phase_two = 0;
  for (const EpochRecord &r : t.log()) {
    if (r.phase == 1) {
      ++phase_one;
      CHECK(r.n_target == 0);
      CHECK(r.n_source == static_cast<int>(toy.data.source_train.size()));
    } else {
      ++phase_two;
      CHECK(r.n_source == 0);
      CHECK(r.n_target == static_cast<int>(toy.data.target_train.size()));
    }
  }
  CHECK(phase_one > 0);
  CHECK(phase_two > 0);
  CHECK(fs::exists(PhaseOnePath(c.checkpoint)));
  CHECK(LoadBundle(PhaseOnePath(c.checkpoint)).strategy == Strategy::kPretrainFinetune);
  const std::string log = ReadFile(c.log);
  CHECK(log.rfind("epoch\tcoarse_ce\tcoarse_domain_loss\tfine_ce\tfine_domain_loss\tdev_sketch_em\t"
                  "dev_lf_em",
                  0) == 0);
}

TEST_CASE("training configuration is validated") {
  TrainConfig c = SmallConfig(Strategy::kDamp, 0);
  CHECK_THROWS_AS(c.Validate(), UsageError);
  c.epochs = 1;
  c.patience = 0;
  CHECK_THROWS_AS(c.Validate(), UsageError);
  c.patience = 1;
  c.hp.dropout = 1.0;
  CHECK_THROWS_AS(c.Validate(), UsageError);

  const Toy toy = MakeToy(0.5, 10);
  CHECK_THROWS_AS(Trainer(SmallConfig(Strategy::kDamp, 1), toy.data, nullptr), UsageError);
  CHECK_NOTHROW(Trainer(SmallConfig(Strategy::kCoarse2FineMix, 1), toy.data, nullptr));
}

}  // namespace
}  // namespace adaparse
