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


#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <doctest.h>

#include "adaparse/cli.h"
#include "adaparse/error.h"
#include "adaparse/fileutil.h"
#include "adaparse/toy.h"

namespace adaparse {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result Run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = RunCli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string Join(const TokenSeq &tokens) {
  std::string s;
  for (const std::string &t : tokens) s += (s.empty() ? "" : " ") + t;
  return s;
}

// A toy corpus, matching vectors and a small-model config in a fresh directory.
struct Workspace {
  fs::path dir;
  std::string data, vectors, config;

  Workspace() {
    dir = fs::temp_directory_path() / "adaparse_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    ToyCorpusOptions co;
    co.instances_per_domain = 12;
    const Corpus corpus = MakeToyCorpus(co);
    std::ostringstream tsv;
    for (const Domain &d : corpus.domains()) {
      for (const Instance &inst : corpus.instances(d.id)) {
        tsv << d.name << '\t' << Join(inst.utterance) << '\t' << Join(inst.logical_form) << '\n';
      }
    }
    data = (dir / "toy.tsv").string();
    WriteFileAtomically(data, tsv.str());

    const WordVectors wv = MakeToyVectors(corpus, 8, 1);
    std::ostringstream vec;
    std::set<std::string> words;
    for (const Domain &d : corpus.domains()) {
      words.insert(d.name);
      for (const Instance &inst : corpus.instances(d.id)) {
        words.insert(inst.utterance.begin(), inst.utterance.end());
      }
    }
    for (const std::string &w : words) {
      const std::vector<double> *v = wv.Find(w);
      if (v == nullptr) continue;
      vec << w;
      for (double x : *v) vec << ' ' << FormatDouble(x);
      vec << '\n';
    }
    vectors = (dir / "vectors.txt").string();
    WriteFileAtomically(vectors, vec.str());

    config = (dir / "small.cfg").string();
    WriteFileAtomically(config,
                        "# tiny model\n"
                        "embed-dim = 8\n"
                        "encoder_hidden = 8\n"
                        "batch_size = 8\n"
                        "epochs = 2\n"
                        "target_fraction = 0.5\n"
                        "dev_fraction = 0.2\n");
  }

  std::string Path(const std::string &name) const { return (dir / name).string(); }
};

TEST_CASE("usage errors exit with 1") {
  CHECK(Run({}).code == kExitUsage);
  CHECK(Run({"frobnicate"}).code == kExitUsage);
  CHECK(Run({"train", "--no-such-flag", "x"}).code == kExitUsage);
  CHECK(Run({"gradcheck", "--strategy", "c2f"}).code == kExitUsage);
  CHECK(Run({"--help"}).code == kExitOk);
}

TEST_CASE("config files reject unknown keys and malformed lines") {
  const Workspace ws;
  WriteFileAtomically(ws.Path("bad.cfg"), "epochs = 2\nlearning_rat = 0.1\n");
  try {
    ReadConfigFile(ws.Path("bad.cfg"));
    FAIL("expected a usage error");
  } catch (const UsageError &e) {
    CHECK(std::string(e.what()).find("bad.cfg:2") != std::string::npos);
    CHECK(std::string(e.what()).find("learning_rat") != std::string::npos);
  }
  WriteFileAtomically(ws.Path("noeq.cfg"), "epochs 2\n");
  CHECK_THROWS_AS(ReadConfigFile(ws.Path("noeq.cfg")), UsageError);

  const auto cfg = ReadConfigFile(ws.config);
  CHECK(cfg.at("embed_dim") == "8");
  CHECK(cfg.at("epochs") == "2");

  const Result r = Run({"induce-sketch", "--config", ws.Path("bad.cfg"), "--data", ws.data,
                        "--target", "housing"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("learning_rat") != std::string::npos);
}

TEST_CASE("data problems exit with 2 and model problems with 3") {
  const Workspace ws;
  CHECK(Run({"induce-sketch", "--data", ws.Path("missing.tsv"), "--target", "housing"}).code ==
        kExitData);
  WriteFileAtomically(ws.Path("broken.tsv"), "calendar\tonly two fields\n");
  CHECK(Run({"induce-sketch", "--data", ws.Path("broken.tsv"), "--target", "calendar"}).code ==
        kExitData);
  CHECK(Run({"induce-sketch", "--data", ws.data, "--target", "atlantis"}).code != kExitOk);
  CHECK(Run({"evaluate", "--checkpoint", ws.Path("missing.bin"), "--data", ws.data}).code ==
        kExitModel);
  WriteFileAtomically(ws.Path("junk.bin"), "junk");
  CHECK(Run({"parse", "--checkpoint", ws.Path("junk.bin"), "--utterance", "x"}).code ==
        kExitModel);
}

TEST_CASE("induce-sketch reports shares and writes the sketch table") {
  const Workspace ws;
  const Result r = Run({"induce-sketch", "--data", ws.data, "--target", "housing", "--out",
                        ws.Path("sketches.tsv")});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("source domains: 1") != std::string::npos);
  CHECK(r.out.find("instances: 24") != std::string::npos);
  const std::string table = ReadFile(ws.Path("sketches.tsv"));
  CHECK(table.rfind("domain\tlogical_form\tsketch\talignment\n", 0) == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 25);
}

TEST_CASE("train, evaluate, parse and dump commands work end to end") {
  const Workspace ws;
  const std::string ckpt = ws.Path("model.bin");
  const Result train = Run({"train", "--config", ws.config, "--data", ws.data, "--target",
                            "housing", "--embeddings", ws.vectors, "--strategy", "damp",
                            "--checkpoint", ckpt});
  INFO(train.err);
  REQUIRE(train.code == kExitOk);
  CHECK(train.out.find("strategy damp: 2 epochs") != std::string::npos);
  CHECK(fs::exists(ckpt));
  CHECK(fs::exists(ckpt + ".log.tsv"));

  const Result eval = Run({"evaluate", "--config", ws.config, "--checkpoint", ckpt, "--data",
                           ws.data, "--embeddings", ws.vectors, "--out", ws.Path("pred.tsv")});
  INFO(eval.err);
  REQUIRE(eval.code == kExitOk);
  CHECK(eval.out.find("sketch_em") != std::string::npos);
  CHECK(fs::exists(ws.Path("pred.tsv")));

  // Priors need vectors.
  CHECK(Run({"evaluate", "--config", ws.config, "--checkpoint", ckpt, "--data", ws.data})
            .code == kExitUsage);

  const Result parse = Run({"parse", "--checkpoint", ckpt, "--embeddings", ws.vectors,
                            "--utterance", "list housing units with 2 bedrooms"});
  INFO(parse.err);
  CHECK(parse.code == kExitOk);
  CHECK_FALSE(parse.out.empty());

  const Result attn = Run({"dump-attention", "--config", ws.config, "--checkpoint", ckpt,
                           "--embeddings", ws.vectors, "--data", ws.data, "--index", "0"});
  INFO(attn.err);
  CHECK(attn.code == kExitOk);
  CHECK(Run({"dump-attention", "--config", ws.config, "--checkpoint", ckpt, "--embeddings",
             ws.vectors, "--data", ws.data, "--index", "9999"})
            .code == kExitUsage);

  for (const std::string stage : {"coarse", "fine"}) {
    const Result reprs =
        Run({"dump-reprs", "--config", ws.config, "--checkpoint", ckpt, "--embeddings",
             ws.vectors, "--data", ws.data, "--stage", stage, "--split", "train", "--out",
             ws.Path("reprs_" + stage + ".tsv")});
    INFO(reprs.err);
    CHECK(reprs.code == kExitOk);
    CHECK(reprs.out.find("stage " + stage) != std::string::npos);
    CHECK(fs::exists(ws.Path("reprs_" + stage + ".tsv")));
  }
  CHECK(Run({"dump-reprs", "--config", ws.config, "--checkpoint", ckpt, "--embeddings",
             ws.vectors, "--data", ws.data, "--stage", "middle"})
            .code == kExitUsage);

  // Resuming a finished run with more epochs continues the log.
  const Result resumed = Run({"train", "--config", ws.config, "--data", ws.data, "--target",
                              "housing", "--embeddings", ws.vectors, "--checkpoint", ckpt,
                              "--epochs", "3", "--resume"});
  INFO(resumed.err);
  CHECK(resumed.code == kExitOk);
  CHECK(resumed.out.find("3 epochs") != std::string::npos);
}

TEST_CASE("damp without embeddings is a usage error") {
  const Workspace ws;
  CHECK(Run({"train", "--config", ws.config, "--data", ws.data, "--target", "housing",
             "--checkpoint", ws.Path("m.bin")})
            .code == kExitUsage);
}

TEST_CASE("gradcheck passes for the full model") {
  const Result r = Run({"gradcheck", "--strategy", "coarse2fine_mix"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("PASS") != std::string::npos);
}

}  // namespace
}  // namespace adaparse
