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

#include "adaparse/eval.h"

#include <map>
#include <sstream>

#include "adaparse/error.h"
#include "adaparse/fileutil.h"

namespace adaparse {

namespace {

struct Counts {
  int n = 0;
  int sketch = 0;
  int oracle = 0;
  int lf = 0;

  EmScores Scores() const {
    EmScores s;
    s.n = n;
    if (n > 0) {
      s.sketch_em = static_cast<double>(sketch) / n;
      s.lf_oracle_em = static_cast<double>(oracle) / n;
      s.lf_em = static_cast<double>(lf) / n;
    }
    return s;
  }
};

void AppendRow(std::ostringstream &out, const std::string &name, const EmScores &s) {
  out << name << '\t' << s.n << '\t' << FormatDouble(s.sketch_em) << '\t'
      << FormatDouble(s.lf_oracle_em) << '\t' << FormatDouble(s.lf_em) << '\n';
}

void AppendWeights(std::ostringstream &out, const std::string &stage, int step,
                   const std::string &token, const char *kind, const std::vector<double> &w) {
  out << stage << '\t' << step << '\t' << token << '\t' << kind;
  for (double v : w) out << '\t' << FormatDouble(v);
  out << '\n';
}

}  // namespace

EvalReport Evaluate(const ModelBundle &bundle, std::span<const Example> examples, int beam,
                    std::vector<PredictionRow> *rows) {
  Parser parser(bundle);
  Counts all;
  std::map<int, Counts> by_domain;
  EvalReport report;
  for (const Example &ex : examples) {
    if (ex.logical_form.empty()) throw DataError("evaluation instance without a logical form");
    const ParseResult r = parser.Parse(ex, beam);
    const TokenSeq oracle = parser.ParseWithOracleSketch(ex, beam);
    const bool sketch_ok = ExactMatch(r.sketch, ex.sketch);
    const bool oracle_ok = ExactMatch(oracle, ex.logical_form);
    const bool lf_ok = ExactMatch(r.logical_form, ex.logical_form);
    for (Counts *c : {&all, &by_domain[ex.domain]}) {
      ++c->n;
      c->sketch += sketch_ok;
      c->oracle += oracle_ok;
      c->lf += lf_ok;
    }
    report.fallbacks += r.fallback ? 1 : 0;
    if (rows != nullptr) {
      PredictionRow row;
      row.domain = bundle.DomainName(ex.domain);
      row.utterance = ex.utterance;
      row.predicted_sketch = r.sketch;
      row.predicted_lf = r.logical_form;
      row.gold_lf = ex.logical_form;
      row.match = lf_ok;
      row.gold_sketch = ex.sketch;
      row.oracle_lf = oracle;
      row.fallback = r.fallback;
      rows->push_back(std::move(row));
    }
  }
  report.overall = all.Scores();
  for (const auto &[domain, counts] : by_domain) {
    report.per_domain.emplace_back(bundle.DomainName(domain), counts.Scores());
  }
  return report;
}

std::string FormatReport(const EvalReport &report) {
  std::ostringstream out;
  out << "scope\tn\tsketch_em\tlf_oracle_em\tlf_em\n";
  AppendRow(out, "all", report.overall);
  for (const auto &[name, scores] : report.per_domain) AppendRow(out, name, scores);
  return out.str();
}

std::string FormatPredictions(std::span<const PredictionRow> rows) {
  std::ostringstream out;
  out << "domain\tutterance\tpredicted_sketch\tpredicted_lf\tgold_lf\tmatch\n";
  for (const PredictionRow &r : rows) {
    out << r.domain << '\t' << Join(r.utterance) << '\t' << Join(r.predicted_sketch) << '\t'
        << Join(r.predicted_lf) << '\t' << Join(r.gold_lf) << '\t' << (r.match ? 1 : 0) << '\n';
  }
  return out.str();
}

double CalinskiHarabasz(std::span<const std::vector<double>> points, std::span<const int> labels,
                        int num_clusters) {
  if (points.size() != labels.size()) {
    throw DataError("calinski_harabasz: " + std::to_string(points.size()) + " points but " +
                    std::to_string(labels.size()) + " labels");
  }
  std::vector<int> ids(labels.begin(), labels.end());
  if (num_clusters < 0) {
    std::map<int, int> remap;
    for (int l : labels) remap.emplace(l, 0);
    int next = 0;
    for (auto &[label, id] : remap) id = next++;
    for (int &l : ids) l = remap[l];
    num_clusters = next;
  }
  const int n = static_cast<int>(points.size());
  const int k = num_clusters;
  if (k < 2) throw DataError("calinski_harabasz: need at least 2 clusters, got " +
                             std::to_string(k));
  if (n <= k) throw DataError("calinski_harabasz: need more points than clusters");
  const std::size_t d = points[0].size();
  for (const auto &p : points) {
    if (p.size() != d) throw DataError("calinski_harabasz: points differ in dimension");
  }

  std::vector<std::vector<double>> centroid(k, std::vector<double>(d, 0.0));
  std::vector<int> size(k, 0);
  std::vector<double> mean(d, 0.0);
  for (int i = 0; i < n; ++i) {
    const int c = ids[i];
    if (c < 0 || c >= k) throw DataError("calinski_harabasz: label out of range");
    ++size[c];
    for (std::size_t j = 0; j < d; ++j) {
      centroid[c][j] += points[i][j];
      mean[j] += points[i][j];
    }
  }
  for (int c = 0; c < k; ++c) {
    if (size[c] == 0) throw DataError("calinski_harabasz: cluster " + std::to_string(c) +
                                      " is empty");
    for (double &v : centroid[c]) v /= size[c];
  }
  for (double &v : mean) v /= n;

  double between = 0.0, within = 0.0;
  for (int c = 0; c < k; ++c) {
    double dist = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = centroid[c][j] - mean[j];
      dist += diff * diff;
    }
    between += size[c] * dist;
  }
  for (int i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = points[i][j] - centroid[ids[i]][j];
      within += diff * diff;
    }
  }
  if (within == 0.0) throw DataError("calinski_harabasz: zero within-cluster dispersion");
  return (between / (k - 1)) / (within / (n - k));
}

RepresentationDump DumpRepresentations(const ModelBundle &bundle,
                                       std::span<const Example> examples, Stage stage) {
  RepresentationDump dump;
  for (const Example &ex : examples) {
    const Tensor u = bundle.model->PooledRepresentation(stage, ex.utterance_ids);
    dump.domains.push_back(ex.domain);
    dump.vectors.emplace_back(u.values().begin(), u.values().end());
  }
  try {
    dump.ch = CalinskiHarabasz(dump.vectors, dump.domains);
  } catch (const DataError &e) {
    dump.ch_error = e.what();
  }
  return dump;
}

std::string FormatRepresentations(const ModelBundle &bundle, const RepresentationDump &dump) {
  std::ostringstream out;
  for (std::size_t i = 0; i < dump.vectors.size(); ++i) {
    out << bundle.DomainName(dump.domains[i]);
    for (double v : dump.vectors[i]) out << '\t' << FormatDouble(v);
    out << '\n';
  }
  return out.str();
}

std::string FormatAttention(const Example &ex, const ParseResult &parse,
                            const AttentionTrace &trace) {
  std::ostringstream out;
  out << "#utterance\t" << Join(ex.utterance, "\t") << '\n';
  out << "#sketch\t" << Join(parse.sketch, "\t") << '\n';
  out << "#logical_form\t" << Join(parse.logical_form, "\t") << '\n';
  out << "stage\tstep\ttoken\tkind\tweights\n";
  for (std::size_t t = 0; t < trace.coarse.size(); ++t) {
    const AttentionStep &s = trace.coarse[t];
    AppendWeights(out, "coarse", static_cast<int>(t), s.token, "alpha", s.weights);
    AppendWeights(out, "coarse", static_cast<int>(t), s.token, "alpha_pri", s.prior_weights);
  }
  for (std::size_t t = 0; t < trace.fine.size(); ++t) {
    const AttentionStep &s = trace.fine[t];
    AppendWeights(out, "fine", static_cast<int>(t), s.token, "alpha", s.weights);
    AppendWeights(out, "fine", static_cast<int>(t), s.token, "alpha_pri", s.prior_weights);
    if (!s.sketch_weights.empty()) {
      AppendWeights(out, "fine", static_cast<int>(t), s.token, "alpha_sketch", s.sketch_weights);
    }
  }
  return out.str();
}

std::vector<SweepRow> SweepTargetFraction(std::span<const double> fractions,
                                          const TrainConfig &config, const Corpus &corpus,
                                          const std::string &target_domain,
                                          const SplitOptions &split, const Corpus *test,
                                          const WordVectors *vectors) {
  if (fractions.empty()) throw UsageError("sweep needs at least one fraction");
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) {
      throw UsageError("sweep fraction " + FormatDouble(f) + " is outside (0, 1]");
    }
  }
  TrainConfig run = config;
  run.checkpoint.clear();
  run.log.clear();
  run.state.clear();
  run.resume = false;
  std::vector<SweepRow> rows;
  for (double f : fractions) {
    SplitOptions options = split;
    options.target_fraction = f;
    const AdaptationDataset data = MakeAdaptationSplit(corpus, target_domain, options, test);
    Trainer trainer(run, data, vectors);
    trainer.Run();
    Preprocessor pre(trainer.bundle(), vectors);
    const std::vector<Example> eval_set =
        pre.PrepareAll(data.target_test.empty() ? data.target_dev : data.target_test);
    Parser parser(trainer.bundle());
    int sketch_hits = 0, lf_hits = 0;
    for (const Example &ex : eval_set) {
      const ParseResult r = parser.Parse(ex, config.hp.beam_size);
      sketch_hits += ExactMatch(r.sketch, ex.sketch) ? 1 : 0;
      lf_hits += ExactMatch(r.logical_form, ex.logical_form) ? 1 : 0;
    }
    SweepRow row;
    row.fraction = f;
    row.n_target = static_cast<int>(data.target_train.size());
    if (!eval_set.empty()) {
      row.sketch_em = static_cast<double>(sketch_hits) / eval_set.size();
      row.lf_em = static_cast<double>(lf_hits) / eval_set.size();
    }
    rows.push_back(row);
  }
  return rows;
}

std::string FormatSweep(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out << "fraction\tn_target\tsketch_em\tlf_em\n";
  for (const SweepRow &r : rows) {
    out << FormatDouble(r.fraction) << '\t' << r.n_target << '\t' << FormatDouble(r.sketch_em)
        << '\t' << FormatDouble(r.lf_em) << '\n';
  }
  return out.str();
}

}  // namespace adaparse
