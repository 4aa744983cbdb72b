// src/eval.cc

// Copyright 2026  The asem authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "asem/eval.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "asem/autodiff.h"
#include "asem/error.h"
#include "asem/format.h"
#include "asem/optim.h"

namespace asem {

void EmbeddingTable::Insert(const std::string &id, std::vector<double> embedding) {
  if (entries_.count(id)) Fail(ErrorKind::kData, "embedding table: duplicate id ", id);
  if (embedding.empty()) Fail(ErrorKind::kData, "embedding table: empty vector for ", id);
  double ss = 0.0;
  for (double v : embedding) ss += v * v;
  const double norm = std::sqrt(ss);
  if (!(norm > 0.0) || !std::isfinite(norm))
    Fail(ErrorKind::kNumeric, "embedding table: cannot normalize embedding of ", id);
  for (double &v : embedding) v /= norm;
  entries_.emplace(id, std::move(embedding));
}

const std::vector<double> *EmbeddingTable::Find(const std::string &id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

EmbeddingTable Extract(const Corpus &corpus, const ModelState &model) {
  EmbeddingTable table;
  for (const Recording &r : corpus.recordings) {
    if (r.frames.rank() != 2 || r.frames.dim(0) == 0)
      Fail(ErrorKind::kData, "extract: recording ", r.id, " has zero frames");
    Tensor batch = r.frames.Reshaped({1, r.frames.dim(0), r.frames.dim(1)});
    Tensor emb = Encode(model, batch, Mode::kEval);
    table.Insert(r.id, emb.values());
  }
  return table;
}

Tensor EmbeddingMatrix(const EmbeddingTable &table,
                       const std::vector<std::string> &ids) {
  if (ids.empty()) Fail(ErrorKind::kData, "embedding matrix: no ids");
  std::vector<double> data;
  std::size_t dim = 0;
  for (const std::string &id : ids) {
    const std::vector<double> *v = table.Find(id);
    if (!v) Fail(ErrorKind::kData, "embedding matrix: unknown id ", id);
    if (dim == 0) dim = v->size();
    if (v->size() != dim) Fail(ErrorKind::kData, "embedding matrix: ragged rows");
    data.insert(data.end(), v->begin(), v->end());
  }
  return Tensor({ids.size(), dim}, std::move(data));
}

void TrialList::Validate() const {
  std::set<std::pair<std::string, std::string>> seen;
  for (const Trial &t : trials)
    if (!seen.emplace(t.enroll, t.test).second)
      Fail(ErrorKind::kData, "trial list: duplicate trial ", t.enroll, " ", t.test);
}

TrialList MakeTrials(const Corpus &corpus) {
  TrialList out;
  const auto &recs = corpus.recordings;
  for (std::size_t i = 0; i < recs.size(); ++i)
    for (std::size_t j = i + 1; j < recs.size(); ++j)
      out.trials.push_back(
          {recs[i].id, recs[j].id, recs[i].speaker == recs[j].speaker});
  return out;
}

ScoreSet ScoreTrials(const TrialList &trials, const EmbeddingTable &table) {
  std::set<std::string> missing;
  for (const Trial &t : trials.trials) {
    if (!table.Find(t.enroll)) missing.insert(t.enroll);
    if (!table.Find(t.test)) missing.insert(t.test);
  }
  if (!missing.empty()) {
    std::ostringstream os;
    for (const std::string &id : missing) os << ' ' << id;
    Fail(ErrorKind::kData, "score: ", missing.size(), " ids missing from embeddings:",
         os.str());
  }
  ScoreSet out;
  out.scores.reserve(trials.trials.size());
  for (const Trial &t : trials.trials) {
    const std::vector<double> &a = *table.Find(t.enroll), &b = *table.Find(t.test);
    if (a.size() != b.size())
      Fail(ErrorKind::kData, "score: dimension mismatch between ", t.enroll, " and ",
           t.test);
    double dot = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
    out.scores.push_back({t.enroll, t.test, dot});
  }
  return out;
}

double ComputeEer(std::span<const double> target_scores,
                  std::span<const double> nontarget_scores) {
  if (target_scores.empty() || nontarget_scores.empty())
    Fail(ErrorKind::kData, "eer: need at least one target and one nontarget trial");
  struct Item {
    double score;
    bool target;
  };
  std::vector<Item> items;
  for (double s : target_scores) items.push_back({s, true});
  for (double s : nontarget_scores) items.push_back({s, false});
  for (const Item &it : items)
    if (!std::isfinite(it.score)) Fail(ErrorKind::kData, "eer: non-finite score");
  std::sort(items.begin(), items.end(),
            [](const Item &a, const Item &b) { return a.score < b.score; });
  const double nt = static_cast<double>(target_scores.size());
  const double nn = static_cast<double>(nontarget_scores.size());

  // ROC points in threshold order: t = -inf, each unique score, t = +inf.
  std::vector<double> far{1.0}, frr{0.0};
  std::size_t targets_below = 0, nontargets_below = 0;
  for (std::size_t i = 0; i < items.size();) {
    const double t = items[i].score;
    far.push_back(static_cast<double>(nontarget_scores.size() - nontargets_below) / nn);
    frr.push_back(static_cast<double>(targets_below) / nt);
    for (; i < items.size() && items[i].score == t; ++i)
      (items[i].target ? targets_below : nontargets_below)++;
  }
  far.push_back(0.0);
  frr.push_back(1.0);

  for (std::size_t i = 1; i < far.size(); ++i) {
    if (frr[i] < far[i]) continue;
    if (frr[i] == far[i]) return frr[i];
    const double d0 = far[i - 1] - frr[i - 1], d1 = far[i] - frr[i];
    const double alpha = d0 / (d0 - d1);
    return frr[i - 1] + alpha * (frr[i] - frr[i - 1]);
  }
  return 1.0;  // unreachable: the +inf point always has FRR >= FAR
}

double ComputeEer(const ScoreSet &scores, const TrialList &trials) {
  if (scores.scores.size() != trials.trials.size())
    Fail(ErrorKind::kData, "eer: ", scores.scores.size(), " scores for ",
         trials.trials.size(), " trials");
  std::vector<double> tar, non;
  for (std::size_t i = 0; i < trials.trials.size(); ++i) {
    const Trial &t = trials.trials[i];
    const ScoredTrial &s = scores.scores[i];
    if (s.enroll != t.enroll || s.test != t.test)
      Fail(ErrorKind::kData, "eer: score ", i, " (", s.enroll, ", ", s.test,
           ") does not match trial (", t.enroll, ", ", t.test, ")");
    (t.target ? tar : non).push_back(s.score);
  }
  return ComputeEer(tar, non);
}

ScoreSet Fuse(const std::vector<ScoreSet> &sets) {
  if (sets.empty()) Fail(ErrorKind::kData, "fuse: no score sets");
  const std::size_t n = sets[0].scores.size();
  for (const ScoreSet &s : sets) {
    if (s.scores.size() != n)
      Fail(ErrorKind::kData, "fuse: score sets have different trial counts");
    for (std::size_t i = 0; i < n; ++i)
      if (s.scores[i].enroll != sets[0].scores[i].enroll ||
          s.scores[i].test != sets[0].scores[i].test)
        Fail(ErrorKind::kData, "fuse: misaligned trial at line ", i + 1, ": (",
             s.scores[i].enroll, ", ", s.scores[i].test, ") vs (",
             sets[0].scores[i].enroll, ", ", sets[0].scores[i].test, ")");
  }
  ScoreSet out = sets[0];
  std::vector<double> vals(sets.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < sets.size(); ++k) vals[k] = sets[k].scores[i].score;
    // Sorted summation of deviations from the smallest value keeps the mean
    // order-independent and exact for identical inputs.
    std::sort(vals.begin(), vals.end());
    double dev = 0.0;
    for (double v : vals) dev += v - vals[0];
    out.scores[i].score = vals[0] + dev / static_cast<double>(vals.size());
  }
  return out;
}

double DomainProbe(const Tensor &source, const Tensor &target,
                   const ProbeConfig &config) {
  if (source.rank() != 2 || target.rank() != 2 || source.dim(1) != target.dim(1))
    Fail(ErrorKind::kShape, "probe: embeddings must be [n, d] with matching d, got ",
         ShapeString(source.shape()), " and ", ShapeString(target.shape()));
  const std::size_t ns = source.dim(0), nt = target.dim(0), d = source.dim(1);
  if (ns < 20 || nt < 20)
    Fail(ErrorKind::kData, "probe: need >= 20 embeddings per domain, got ", ns,
         " and ", nt);
  if (std::max(ns, nt) > 10 * std::min(ns, nt))
    Fail(ErrorKind::kData, "probe: class imbalance above 10:1 (", ns, " vs ", nt, ")");
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0))
    Fail(ErrorKind::kUsage, "probe: train_fraction must lie in (0, 1)");

  // Stratified split.  Label 1 = source, 0 = target.  Each class is shuffled
  // by its own generator so that the split of a class depends only on the
  // seed and its size; together with the zero-initialized output layer
  // below this makes the result symmetric in the two domains.
  std::vector<std::pair<const double *, double>> train, test;
  auto split = [&](const Tensor &x, double label) {
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> idx(x.dim(0));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n_train = static_cast<std::size_t>(
        std::floor(config.train_fraction * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < idx.size(); ++i)
      (i < n_train ? train : test).emplace_back(&x.data()[idx[i] * d], label);
  };
  split(source, 1.0);
  split(target, 0.0);

  std::vector<double> mean(d, 0.0), stdev(d, 0.0);
  for (auto &[row, label] : train)
    for (std::size_t k = 0; k < d; ++k) mean[k] += row[k];
  for (double &m : mean) m /= static_cast<double>(train.size());
  for (auto &[row, label] : train)
    for (std::size_t k = 0; k < d; ++k) stdev[k] += (row[k] - mean[k]) * (row[k] - mean[k]);
  for (double &s : stdev) s = std::sqrt(s / static_cast<double>(train.size())) + 1e-8;

  auto pack = [&](const std::vector<std::pair<const double *, double>> &rows,
                  Tensor &x, Tensor &y) {
    x = Tensor({rows.size(), d});
    y = Tensor({rows.size()});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t k = 0; k < d; ++k)
        x.at(i, k) = (rows[i].first[k] - mean[k]) / stdev[k];
      y[i] = rows[i].second;
    }
  };
  Tensor x_train, y_train, x_test, y_test;
  pack(train, x_train, y_train);
  pack(test, x_test, y_test);

  // Swapping the labels maps a training run with parameters (W1, b1, W2,
  // b2) onto one with (W1, b1, -W2, -b2); starting from W2 = b2 = 0 both
  // runs stay mirror images under RMSprop.
  TensorMap params;
  {
    std::mt19937_64 rng(config.seed ^ 0x5bd1e995ULL);
    auto glorot = [&](std::size_t in, std::size_t out) {
      const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      Tensor w({in, out});
      for (double &v : w.data()) v = dist(rng);
      return w;
    };
    params["fc1.W"] = glorot(d, config.hidden);
    params["fc1.b"] = Tensor({config.hidden});
    params["fc2.W"] = Tensor({config.hidden, 1});
    params["fc2.b"] = Tensor({1});
  }
  auto logits = [&](const ad::VarMap &p, const Tensor &x) {
    ad::Var h = ad::Elu(ad::AddBias(ad::MatMul(ad::Constant(x), p.at("fc1.W")),
                                    p.at("fc1.b")));
    ad::Var z = ad::AddBias(ad::MatMul(h, p.at("fc2.W")), p.at("fc2.b"));
    return ad::Reshape(z, {x.dim(0)});
  };
  // Signs that turn logits into "log-likelihood of the true label" terms.
  Tensor sign({y_train.size()});
  for (std::size_t i = 0; i < sign.size(); ++i) sign[i] = y_train[i] > 0.5 ? 1.0 : -1.0;
  Optimizer opt({OptimizerKind::kRmsprop, config.lr, 0.9, 1e-8});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    ad::VarMap p = ad::Bind(params, true);
    ad::Var loss = ad::Neg(
        ad::Mean(ad::LogSigmoid(ad::Mul(logits(p, x_train), ad::Constant(sign)))));
    ad::Backward(loss);
    opt.Step(params, ad::Gradients(p));
  }
  ad::VarMap p = ad::Bind(params, false);
  const Tensor z = logits(p, x_test).value();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < z.size(); ++i)
    if ((z[i] >= 0.0) == (y_test[i] > 0.5)) ++correct;
  return static_cast<double>(correct) / static_cast<double>(z.size());
}

std::string TrialsToText(const TrialList &trials) {
  std::string out;
  for (const Trial &t : trials.trials)
    out += t.enroll + '\t' + t.test + '\t' + (t.target ? "target" : "nontarget") + '\n';
  return out;
}

namespace {

std::vector<std::string_view> Lines(const std::string &text) {
  std::vector<std::string_view> lines = SplitOn(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace

TrialList TrialsFromText(const std::string &text, const std::string &source) {
  TrialList out;
  std::size_t line_no = 0;
  for (std::string_view line : Lines(text)) {
    ++line_no;
    auto f = SplitOn(line, '\t');
    if (f.size() != 3 || f[0].empty() || f[1].empty() ||
        (f[2] != "target" && f[2] != "nontarget"))
      Fail(ErrorKind::kData, source, ":", line_no,
           ": expected enroll<TAB>test<TAB>target|nontarget");
    out.trials.push_back({std::string(f[0]), std::string(f[1]), f[2] == "target"});
  }
  out.Validate();
  return out;
}

std::string ScoresToText(const ScoreSet &scores) {
  std::string out = "# polarity=similarity\n";
  for (const ScoredTrial &s : scores.scores)
    out += s.enroll + '\t' + s.test + '\t' + FormatShortest(s.score) + '\n';
  return out;
}

ScoreSet ScoresFromText(const std::string &text, const std::string &source) {
  auto lines = Lines(text);
  if (lines.empty() || lines[0] != "# polarity=similarity")
    Fail(ErrorKind::kData, source, ":1: missing '# polarity=similarity' header");
  ScoreSet out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto f = SplitOn(lines[i], '\t');
    if (f.size() != 3 || f[0].empty() || f[1].empty())
      Fail(ErrorKind::kData, source, ":", i + 1, ": expected enroll<TAB>test<TAB>score");
    out.scores.push_back(
        {std::string(f[0]), std::string(f[1]), ParseDouble(f[2], "score")});
  }
  return out;
}

std::string EmbeddingsToText(const EmbeddingTable &table) {
  std::string out;
  for (const auto &[id, v] : table.entries()) {
    out += id;
    out += '\t';
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (k > 0) out += ',';
      out += FormatShortest(static_cast<float>(v[k]));
    }
    out += '\n';
  }
  return out;
}

EmbeddingTable EmbeddingsFromText(const std::string &text, const std::string &source) {
  EmbeddingTable table;
  std::size_t line_no = 0;
  for (std::string_view line : Lines(text)) {
    ++line_no;
    auto f = SplitOn(line, '\t');
    if (f.size() != 2 || f[0].empty())
      Fail(ErrorKind::kData, source, ":", line_no, ": expected id<TAB>v1,v2,...");
    std::vector<double> v;
    for (std::string_view x : SplitOn(f[1], ','))
      v.push_back(static_cast<double>(ParseFloat(x, "embedding value")));
    table.Insert(std::string(f[0]), std::move(v));
  }
  return table;
}

void WriteTextFile(const std::string &path, const std::string &text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Fail(ErrorKind::kData, "cannot open ", path, " for writing");
  os << text;
  if (!os) Fail(ErrorKind::kData, "write to ", path, " failed");
}

std::string ReadTextFile(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(ErrorKind::kData, "cannot open ", path, " for reading");
  return std::string(std::istreambuf_iterator<char>(is),
                     std::istreambuf_iterator<char>());
}

}  // namespace asem
