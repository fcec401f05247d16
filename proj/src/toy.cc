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

#include "adaparse/toy.h"

#include <cmath>
#include <set>

#include "adaparse/error.h"
#include "adaparse/fileutil.h"
#include "adaparse/gradcheck.h"
#include "adaparse/random.h"

namespace adaparse {

namespace {

struct Word {
  const char *word;
  const char *symbol;
};

struct Property {
  Word name;
  Word values[3];
};

struct ToyDomain {
  const char *name;
  Word types[3];
  Property props[3];
};

const ToyDomain kDomains[] = {
    {"calendar",
     {{"meetings", "en.meeting"}, {"events", "en.event"}, {"people", "en.person"}},
     {{{"attendee", "attendee"},
       {{"alice", "en.person.alice"}, {"bob", "en.person.bob"}, {"carol", "en.person.carol"}}},
      {{"location", "location"},
       {{"office", "en.location.office"},
        {"cafe", "en.location.cafe"},
        {"lobby", "en.location.lobby"}}},
      {{"duration", "length"},
       {{"short", "en.length.short"}, {"long", "en.length.long"}, {"hourlong", "en.length.hour"}}}}},
    {"housing",
     {{"apartments", "en.housing_unit"}, {"houses", "en.house"}, {"rooms", "en.room"}},
     {{{"neighborhood", "neighborhood"},
       {{"midtown", "en.neighborhood.midtown"},
        {"chelsea", "en.neighborhood.chelsea"},
        {"soho", "en.neighborhood.soho"}}},
      {{"rent", "monthly_rent"},
       {{"cheap", "en.rent.cheap"}, {"pricey", "en.rent.pricey"}, {"moderate", "en.rent.moderate"}}},
      {{"size", "size"},
       {{"small", "en.size.small"}, {"large", "en.size.large"}, {"medium", "en.size.medium"}}}}},
    {"restaurants",
     {{"restaurants", "en.restaurant"}, {"diners", "en.diner"}, {"bars", "en.bar"}},
     {{{"cuisine", "cuisine"},
       {{"thai", "en.cuisine.thai"}, {"italian", "en.cuisine.italian"}, {"mexican", "en.cuisine.mexican"}}},
      {{"price", "price_rating"},
       {{"budget", "en.price.budget"}, {"upscale", "en.price.upscale"}, {"average", "en.price.average"}}},
      {{"rating", "star_rating"},
       {{"fivestar", "en.stars.five"}, {"fourstar", "en.stars.four"}, {"threestar", "en.stars.three"}}}}},
    {"recipes",
     {{"recipes", "en.recipe"}, {"meals", "en.meal"}, {"dishes", "en.dish"}},
     {{{"ingredient", "ingredient"},
       {{"rice", "en.ingredient.rice"}, {"beans", "en.ingredient.beans"}, {"tofu", "en.ingredient.tofu"}}},
      {{"course", "course"},
       {{"lunch", "en.course.lunch"}, {"dinner", "en.course.dinner"}, {"dessert", "en.course.dessert"}}},
      {{"time", "preparation_time"},
       {{"quick", "en.time.quick"}, {"slow", "en.time.slow"}, {"overnight", "en.time.overnight"}}}}},
};

constexpr Word kNumbers[] = {{"two", "2"}, {"three", "3"}};

TokenSeq Tokens(const std::string &text) { return SplitTokens(text); }

std::string TypeQuery(const Word &type) {
  return std::string("( call getProperty ( call singleton ") + type.symbol +
         " ) ( string ! type ) )";
}

// All template fillings of one domain.
std::vector<Instance> Fillings(const ToyDomain &d, int domain_id) {
  std::vector<Instance> out;
  for (const Word &type : d.types) {
    out.push_back({domain_id, Tokens(std::string("list all ") + type.word),
                   Tokens("( call listValue " + TypeQuery(type) + " )")});
    for (const Property &p : d.props) {
      for (const Word &v : p.values) {
        out.push_back(
            {domain_id,
             Tokens(std::string(type.word) + " whose " + p.name.word + " is " + v.word),
             Tokens("( call listValue ( call filter " + TypeQuery(type) + " ( string " +
                    p.name.symbol + " ) ( string = ) " + v.symbol + " ) )")});
      }
      for (const Word &n : kNumbers) {
        out.push_back(
            {domain_id,
             Tokens(std::string(type.word) + " with at least " + n.word + " " + p.name.word),
             Tokens("( call listValue ( call countComparative " + TypeQuery(type) +
                    " ( string " + p.name.symbol + " ) ( string >= ) ( number " + n.symbol +
                    " ) ) )")});
      }
    }
  }
  return out;
}

std::vector<double> Direction(int dim, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double norm = 0.0;
  for (double &x : v) {
    x = normal(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double &x : v) x /= norm;
  return v;
}

}  // namespace

const std::vector<std::string> &ToyDomainNames() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const ToyDomain &d : kDomains) out.push_back(d.name);
    return out;
  }();
  return names;
}

Corpus MakeToyCorpus(const ToyCorpusOptions &options) {
  const int available = static_cast<int>(std::size(kDomains));
  if (options.num_domains < 1 || options.num_domains > available) {
    throw UsageError("toy corpus supports 1 to " + std::to_string(available) + " domains");
  }
  if (options.instances_per_domain < 1) throw UsageError("toy corpus needs instances");
  Corpus corpus;
  for (int d = 0; d < options.num_domains; ++d) {
    const int id = corpus.AddDomain(kDomains[d].name);
    const std::vector<Instance> all = Fillings(kDomains[d], id);
    std::mt19937_64 rng = SeededRng(options.seed, {0x70f, static_cast<std::uint64_t>(d)});
    const std::vector<int> order = Permutation(static_cast<int>(all.size()), rng);
    for (int i = 0; i < options.instances_per_domain; ++i) {
      corpus.Add(all[order[i % all.size()]]);
    }
  }
  return corpus;
}

WordVectors MakeToyVectors(const Corpus &corpus, int dim, std::uint64_t seed) {
  WordVectors vectors;
  std::mt19937_64 rng = SeededRng(seed, {0x7ec});
  std::normal_distribution<double> noise(0.0, 0.3 / std::sqrt(static_cast<double>(dim)));
  std::set<std::string> function_words;
  for (const Domain &domain : corpus.domains()) {
    const std::vector<double> dir = Direction(dim, rng);
    vectors.Set(domain.name, dir);
    std::set<std::string> specific;
    for (const ToyDomain &d : kDomains) {
      if (domain.name != d.name) continue;
      for (const Word &t : d.types) specific.insert(t.word);
      for (const Property &p : d.props) {
        specific.insert(p.name.word);
        for (const Word &v : p.values) specific.insert(v.word);
      }
    }
    std::set<std::string> words;
    for (const Instance &inst : corpus.instances(domain.id)) {
      words.insert(inst.utterance.begin(), inst.utterance.end());
    }
    for (const std::string &w : words) {
      if (!specific.count(w)) {
        function_words.insert(w);
        continue;
      }
      std::vector<double> v(dim);
      for (int i = 0; i < dim; ++i) v[i] = 0.8 * dir[i] + noise(rng);
      vectors.Set(w, std::move(v));
    }
  }
  for (const std::string &w : function_words) {
    if (vectors.Find(w) != nullptr) continue;
    std::vector<double> v(dim);
    for (double &x : v) x = noise(rng);
    vectors.Set(w, std::move(v));
  }
  return vectors;
}

ModelGradCheck CheckModelGradients(Strategy strategy, std::uint64_t seed) {
  ToyCorpusOptions corpus_options;
  corpus_options.num_domains = 2;
  corpus_options.instances_per_domain = 1;
  corpus_options.seed = seed;
  const Corpus corpus = MakeToyCorpus(corpus_options);

  AdaptationDataset data;
  data.domains = corpus.domains();
  data.target_domain = 1;
  data.source_train = corpus.instances(0);
  data.target_train = corpus.instances(1);
  data.seed = seed;

  Hyperparams hp;
  hp.embed_dim = 6;
  hp.encoder_hidden = 8;
  hp.dropout = 0.0;
  hp.init_range = 0.3;
  const WordVectors vectors = MakeToyVectors(corpus, hp.embed_dim, seed);
  ModelBundle bundle = BuildBundle(strategy, hp, data, RelevanceSettings{}, &vectors, seed);
  Preprocessor pre(bundle, &vectors);
  std::vector<Example> batch = pre.PrepareAll(data.source_train);
  for (Example &e : pre.PrepareAll(data.target_train)) batch.push_back(std::move(e));

  const DampModel &model = *bundle.model;
  auto loss = [&](bool coarse) {
    return [&, coarse](Graph &g) {
      Var total;
      for (const Example &ex : batch) {
        LossOptions options;
        options.include_coarse = coarse;
        options.include_fine = !coarse;
        Var l = model.BuildLosses(g, ex, options).total;
        total = total.valid() ? Add(total, l) : l;
      }
      return total;
    };
  };
  GradCheckOptions check;
  check.step = 1e-3;
  check.five_point = true;
  check.floor = 1e-6;
  ModelGradCheck out;
  if (model.architecture().two_stage) {
    GradCheckResult r = GradCheck(bundle.model->store(), loss(true), check);
    out.coarse_error = r.max_relative_error;
    out.worst_coarse = r.worst_parameter;
    out.entries += r.entries_checked;
  }
  GradCheckResult r = GradCheck(bundle.model->store(), loss(false), check);
  out.fine_error = r.max_relative_error;
  out.worst_fine = r.worst_parameter;
  out.entries += r.entries_checked;
  return out;
}

}  // namespace adaparse
