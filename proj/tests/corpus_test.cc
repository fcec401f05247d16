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
#include <cmath>
#include <set>
#include <sstream>

#include <doctest.h>

#include "adaparse/corpus.h"
#include "adaparse/error.h"
#include "adaparse/fileutil.h"

namespace adaparse {
namespace {

Corpus SyntheticCorpus(int recipes, int others) {
  std::ostringstream text;
  for (int i = 0; i < recipes; ++i) {
    text << "recipes\trecipe number " << i << "\t( call listValue r" << i << " )\n";
  }
  for (int i = 0; i < others; ++i) {
    text << "housing\thouse number " << i << "\t( call listValue h" << i << " )\n";
  }
  std::istringstream in(text.str());
  return ParseCorpus(in);
}

std::set<TokenSeq> Utterance(const std::vector<Instance> &list) {
  std::set<TokenSeq> out;
  for (const Instance &i : list) out.insert(i.utterance);
  return out;
}

TEST_CASE("corpus parsing") {
  std::istringstream one("recipes\tmeetings attended\tlistValue ( x )\n");
  const Corpus c = ParseCorpus(one);
  REQUIRE(c.domains().size() == 1);
  CHECK(c.domains()[0].name == "recipes");
  REQUIRE(c.instances(0).size() == 1);
  CHECK(c.instances(0)[0].utterance.size() == 2);

  std::istringstream empty("");
  CHECK(ParseCorpus(empty).domains().empty());

  std::istringstream bad("recipes\tok\tlistValue\nrecipes\tmissing field\n");
  try {
    ParseCorpus(bad);
    FAIL("expected a data error");
  } catch (const DataError &e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::istringstream blank_field("recipes\t\tlistValue\n");
  CHECK_THROWS_AS(ParseCorpus(blank_field), DataError);

  std::istringstream long_utt("recipes\ta b c d\tx\n");
  try {
    ParseCorpus(long_utt, 3, 10);
    FAIL("expected a data error");
  } catch (const DataError &e) {
    CHECK(std::string(e.what()).find('3') != std::string::npos);
  }
  std::istringstream long_lf("recipes\ta\tx y z\n");
  CHECK_THROWS_AS(ParseCorpus(long_lf, 3, 2), DataError);
}

TEST_CASE("corpus keeps line order within a domain") {
  const Corpus c = SyntheticCorpus(5, 3);
  REQUIRE(c.domains().size() == 2);
  for (int i = 0; i < 5; ++i) CHECK(c.instances(0)[i].utterance[2] == std::to_string(i));
}

TEST_CASE("adaptation split sizes") {
  const Corpus c = SyntheticCorpus(864, 50);
  SplitOptions opt;
  opt.dev_fraction = 0.20;
  opt.target_fraction = 1.0;
  opt.seed = 3;
  const AdaptationDataset full = MakeAdaptationSplit(c, "recipes", opt);
  const int dev = static_cast<int>(std::round(0.20 * 864));
  CHECK(full.target_dev.size() == static_cast<std::size_t>(dev));
  CHECK(full.target_train.size() == static_cast<std::size_t>(864 - dev));
  CHECK(full.target_train.size() == 691);
  CHECK(full.target_dev.size() == 173);
  CHECK(full.source_dev.size() == static_cast<std::size_t>(std::round(0.2 * 50)));

  opt.target_fraction = 0.10;
  const AdaptationDataset tenth = MakeAdaptationSplit(c, "recipes", opt);
  CHECK(tenth.target_train.size() == static_cast<std::size_t>(std::round(0.10 * 691)));
  CHECK(tenth.target_train.size() == 69);
  CHECK(tenth.target_dev == full.target_dev);

  opt.target_fraction = 0.0001;
  CHECK(MakeAdaptationSplit(c, "recipes", opt).target_train.size() == 1);
}

TEST_CASE("adaptation split partitions, is deterministic and monotone") {
  const Corpus c = SyntheticCorpus(120, 80);
  SplitOptions opt;
  opt.seed = 17;
  opt.target_fraction = 1.0;
  const AdaptationDataset a = MakeAdaptationSplit(c, "recipes", opt);
  const AdaptationDataset b = MakeAdaptationSplit(c, "recipes", opt);
  CHECK(a.target_train == b.target_train);
  CHECK(a.source_train == b.source_train);
  CHECK(a.target_dev == b.target_dev);

  std::set<TokenSeq> train = Utterance(a.target_train), dev = Utterance(a.target_dev);
  for (const TokenSeq &t : dev) CHECK(train.count(t) == 0);
  CHECK(train.size() + dev.size() == 120);
  for (const Instance &i : a.source_train) CHECK(i.domain == c.FindDomain("housing"));

  opt.seed = 18;
  CHECK_FALSE(MakeAdaptationSplit(c, "recipes", opt).target_dev == a.target_dev);
  opt.seed = 17;

  std::set<TokenSeq> previous;
  for (double f : {0.05, 0.1, 0.3, 0.7, 1.0}) {
    opt.target_fraction = f;
    const std::set<TokenSeq> now = Utterance(MakeAdaptationSplit(c, "recipes", opt).target_train);
    CHECK(std::includes(now.begin(), now.end(), previous.begin(), previous.end()));
    previous = now;
  }
}

TEST_CASE("adaptation split errors") {
  const Corpus c = SyntheticCorpus(10, 10);
  SplitOptions opt;
  CHECK_THROWS_AS(MakeAdaptationSplit(c, "calendar", opt), Error);
  opt.target_fraction = 0.0;
  CHECK_THROWS_AS(MakeAdaptationSplit(c, "recipes", opt), UsageError);
  opt.target_fraction = 1.5;
  CHECK_THROWS_AS(MakeAdaptationSplit(c, "recipes", opt), UsageError);
  opt.target_fraction = 0.5;
  opt.dev_fraction = 1.0;
  CHECK_THROWS_AS(MakeAdaptationSplit(c, "recipes", opt), UsageError);
}

TEST_CASE("vocabulary") {
  const std::vector<TokenSeq> seqs = {{"a", "b", "a"}};
  const Vocabulary v = BuildVocab(seqs);
  REQUIRE(v.size() == 6);
  CHECK(v.Token(Vocabulary::kPad) == kReservedTokens[0]);
  CHECK(v.Token(4) == "a");
  CHECK(v.Token(5) == "b");
  const Vocabulary v2 = BuildVocab(seqs, 2);
  CHECK(v2.size() == 5);
  CHECK(v2.Index("b") == Vocabulary::kUnk);

  const std::vector<TokenSeq> lf = {
      SplitTokens("listValue ( countComparative ( getProperty ( singleton en.meeting ) "
                  "( string !type ) ) ( string attendee ) ( string >= ) ( number 2 ) ) )")};
  const Vocabulary table = BuildVocab(lf);
  std::set<int> ids;
  for (const std::string &t : lf[0]) ids.insert(table.Index(t));
  CHECK(ids.count(Vocabulary::kUnk) == 0);
  CHECK(table.Index("countComparative") != table.Index("en.meeting"));
  CHECK(table.Decode(table.Encode(lf[0])) == lf[0]);
}

TEST_CASE("embedding tables") {
  const std::vector<TokenSeq> seqs = {{"w1", "w2", "w3", "w4", "w5"}};
  const Vocabulary vocab = BuildVocab(seqs);
  std::istringstream file("w2 0.1 0.2\nother 1 1\n");
  const WordVectors vectors = WordVectors::Parse(file, 2);
  const EmbeddingTable t = LoadEmbeddings(vectors, vocab, 4);
  CHECK(t.matrix.rows() == vocab.size());
  CHECK(t.matrix.at(vocab.Index("w2"), 0) == 0.1);
  CHECK(t.matrix.at(vocab.Index("w2"), 1) == 0.2);
  CHECK(t.matrix.at(Vocabulary::kPad, 0) == 0.0);
  CHECK(t.matrix.at(Vocabulary::kPad, 1) == 0.0);
  for (int r = 1; r < vocab.size(); ++r) {
    if (r == vocab.Index("w2")) continue;
    for (int c = 0; c < 2; ++c) CHECK(std::abs(t.matrix.at(r, c)) <= kEmbeddingInitRange);
  }
  CHECK(LoadEmbeddings(vectors, vocab, 4).matrix == t.matrix);

  std::istringstream none("");
  const EmbeddingTable blank = LoadEmbeddings(WordVectors::Parse(none, 2), vocab, 5);
  CHECK(LoadEmbeddings(WordVectors::Parse(none, 2), vocab, 5).matrix == blank.matrix);

  std::istringstream bad("w1 0.1 0.2\nw2 0.3\n");
  try {
    WordVectors::Parse(bad, 2);
    FAIL("expected a data error");
  } catch (const DataError &e) {
    CHECK(std::string(e.what()).find("w2") != std::string::npos);
  }
}

}  // namespace
}  // namespace adaparse
