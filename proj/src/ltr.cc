#include "carrank/ltr.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "carrank/evaluation.h"
#include "carrank/random.h"

namespace carrank {

namespace {

// Rows regrouped by query (ascending id, then paragraph id) with the data
// needed to compute MAP from a score vector.
class MapProblem {
 public:
  MapProblem(const std::vector<FeatureVector>& rows, const Qrels& qrels) {
    order_.resize(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) order_[i] = i;
    std::sort(order_.begin(), order_.end(), [&](size_t a, size_t b) {
      if (rows[a].query_id != rows[b].query_id) return rows[a].query_id < rows[b].query_id;
      return rows[a].paragraph_id < rows[b].paragraph_id;
    });
    arity_ = rows.empty() ? 0 : rows[0].features.size();
    x_.reserve(rows.size() * arity_);
    for (size_t i = 0; i < order_.size(); ++i) {
      const FeatureVector& r = rows[order_[i]];
      if (r.features.size() != arity_)
        throw std::invalid_argument("feature vectors differ in arity");
      for (double v : r.features) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
        x_.push_back(v);
      }
      if (i > 0 && rows[order_[i - 1]].query_id == r.query_id &&
          rows[order_[i - 1]].paragraph_id == r.paragraph_id)
        throw std::invalid_argument("duplicate feature row for " + r.query_id + " " +
                                    r.paragraph_id);
    }
    size_t i = 0;
    while (i < order_.size()) {
      const std::string& q = rows[order_[i]].query_id;
      size_t j = i;
      while (j < order_.size() && rows[order_[j]].query_id == q) ++j;
      auto it = qrels.entries.find(q);
      Block b{i, j, {}, 0};
      if (it != qrels.entries.end()) {
        for (const auto& [p, g] : it->second)
          if (g > 0) ++b.r;
        for (size_t k = i; k < j; ++k) {
          auto g = it->second.find(rows[order_[k]].paragraph_id);
          if (g != it->second.end() && g->second > 0) b.positives.push_back(k);
        }
      }
      if (b.r > 0) blocks_.push_back(std::move(b));
      i = j;
    }
    for (const Block& b : blocks_) positives_ += b.positives.size();
  }

  size_t arity() const { return arity_; }
  size_t rows() const { return order_.size(); }
  size_t retrieved_positives() const { return positives_; }
  const std::vector<size_t>& order() const { return order_; }

  void scores(const std::vector<double>& w, std::vector<double>& s) const {
    s.resize(order_.size());
    for (size_t i = 0; i < order_.size(); ++i) {
      double v = 0.0;
      for (size_t f = 0; f < arity_; ++f) v += w[f] * x_[i * arity_ + f];
      s[i] = v;
    }
  }

  double map(const std::vector<double>& s) const {
    if (blocks_.empty()) return 0.0;
    double total = 0.0;
    std::vector<size_t> ranks;
    for (const Block& b : blocks_) {
      ranks.clear();
      for (size_t p : b.positives) {
        size_t rank = 1;
        for (size_t k = b.begin; k < b.end; ++k)
          if (s[k] > s[p] || (s[k] == s[p] && k < p)) ++rank;
        ranks.push_back(rank);
      }
      std::sort(ranks.begin(), ranks.end());
      double ap = 0.0;
      for (size_t i = 0; i < ranks.size(); ++i)
        ap += static_cast<double>(i + 1) / static_cast<double>(ranks[i]);
      total += ap / static_cast<double>(b.r);
    }
    return total / static_cast<double>(blocks_.size());
  }

 private:
  struct Block {
    size_t begin, end;
    std::vector<size_t> positives;
    size_t r;
  };
  std::vector<size_t> order_;
  size_t arity_ = 0;
  std::vector<double> x_;
  std::vector<Block> blocks_;
  size_t positives_ = 0;
};

std::vector<std::string> default_names(size_t n) {
  std::vector<std::string> names;
  for (size_t i = 0; i < n; ++i) names.push_back("f" + std::to_string(i + 1));
  return names;
}

bool all_zero(const std::vector<double>& w) {
  return std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; });
}

std::vector<std::string> query_ids(const std::vector<FeatureVector>& rows) {
  std::vector<std::string> q;
  for (const auto& r : rows) q.push_back(r.query_id);
  std::sort(q.begin(), q.end());
  q.erase(std::unique(q.begin(), q.end()), q.end());
  return q;
}

}  // namespace

Ranking min_max_normalize(const Ranking& r) {
  Ranking out = r;
  if (r.entries.empty()) return out;
  double lo = r.entries[0].score, hi = lo;
  for (const auto& e : r.entries) {
    lo = std::min(lo, e.score);
    hi = std::max(hi, e.score);
  }
  for (auto& e : out.entries) e.score = hi > lo ? (e.score - lo) / (hi - lo) : 0.5;
  return out;
}

std::vector<FeatureVector> assemble_features(std::span<const Ranking> runs,
                                             const std::string& query_id) {
  std::map<std::string, std::vector<double>> table;
  for (size_t s = 0; s < runs.size(); ++s) {
    if (runs[s].query_id != query_id && !runs[s].entries.empty())
      throw std::invalid_argument("run for query \"" + runs[s].query_id +
                                  "\" assembled under \"" + query_id + "\"");
    for (const auto& e : min_max_normalize(runs[s]).entries) {
      auto& v = table[e.paragraph_id];
      v.resize(runs.size(), 0.0);
      v[s] = e.score;
    }
  }
  std::vector<FeatureVector> out;
  for (auto& [pid, v] : table) out.push_back({query_id, pid, std::move(v)});
  return out;
}

std::vector<FeatureVector> assemble_features(
    const std::vector<std::vector<Ranking>>& runs) {
  std::map<std::string, std::vector<Ranking>> by_query;
  for (size_t s = 0; s < runs.size(); ++s)
    for (const Ranking& r : runs[s]) {
      auto& slot = by_query[r.query_id];
      slot.resize(runs.size());
      if (!slot[s].entries.empty())
        throw std::invalid_argument("scorer " + std::to_string(s) +
                                    " ranks query \"" + r.query_id + "\" twice");
      slot[s] = r;
    }
  std::vector<FeatureVector> out;
  for (auto& [q, list] : by_query) {
    for (Ranking& r : list) r.query_id = q;
    auto rows = assemble_features(list, q);
    std::move(rows.begin(), rows.end(), std::back_inserter(out));
  }
  return out;
}

double LinearModel::score(std::span<const double> features) const {
  if (features.size() != weights.size())
    throw std::invalid_argument("feature arity does not match the model");
  double v = 0.0;
  for (size_t f = 0; f < weights.size(); ++f) v += weights[f] * features[f];
  return v;
}

void LinearModel::save(std::ostream& out) const {
  out << "feature\tweight\n";
  char buf[40];
  for (size_t i = 0; i < weights.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", weights[i]);
    out << names[i] << '\t' << buf << '\n';
  }
}

LinearModel LinearModel::load(std::istream& in) {
  LinearModel m;
  std::string line;
  size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "feature\tweight") throw ParseError(line_no, "missing model header");
      header = true;
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(line_no, "expected feature<TAB>weight");
    try {
      size_t used = 0;
      std::string num = line.substr(tab + 1);
      double w = std::stod(num, &used);
      if (used != num.size() || !std::isfinite(w)) throw std::invalid_argument(num);
      m.names.push_back(line.substr(0, tab));
      m.weights.push_back(w);
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad weight");
    }
  }
  if (m.weights.empty()) throw ParseError(0, "model has no weights");
  if (all_zero(m.weights)) throw ParseError(0, "model weights are all zero");
  return m;
}

void CaConfig::validate() const {
  if (restarts == 0) throw std::invalid_argument("coordinate ascent needs restarts >= 1");
  if (step_sizes.empty()) throw std::invalid_argument("coordinate ascent needs step sizes");
  for (double s : step_sizes)
    if (!(s > 0.0) || !std::isfinite(s))
      throw std::invalid_argument("step sizes must be positive");
}

double training_map(const LinearModel& model, const std::vector<FeatureVector>& rows,
                    const Qrels& qrels) {
  MapProblem p(rows, qrels);
  if (p.rows() > 0 && p.arity() != model.weights.size())
    throw std::invalid_argument("feature arity does not match the model");
  std::vector<double> s;
  p.scores(model.weights, s);
  return p.map(s);
}

LinearModel train_coordinate_ascent(const std::vector<FeatureVector>& rows,
                                    const Qrels& qrels, const CaConfig& cfg,
                                    std::vector<std::string> names,
                                    std::vector<double>* trace) {
  cfg.validate();
  MapProblem p(rows, qrels);
  if (p.retrieved_positives() == 0)
    throw std::invalid_argument("no positive paragraphs among the training rows");
  const size_t n = p.arity();
  if (n == 0) throw std::invalid_argument("no features");
  if (names.empty()) names = default_names(n);
  if (names.size() != n) throw std::invalid_argument("feature names do not match arity");

  std::vector<std::vector<double>> starts;
  for (size_t f = 0; f < n; ++f) {
    std::vector<double> w(n, 0.0);
    w[f] = 1.0;
    starts.push_back(std::move(w));
  }
  Rng rng(cfg.seed);
  for (size_t r = 0; r < cfg.restarts; ++r) {
    std::vector<double> w(n);
    for (double& x : w) x = rng.uniform();
    if (all_zero(w)) w[0] = 1.0;
    starts.push_back(std::move(w));
  }

  std::vector<double> best_w;
  double best_map = -1.0;
  std::vector<double> best_trace;
  std::vector<double> s, cand;
  for (std::vector<double>& w : starts) {
    p.scores(w, s);
    double cur = p.map(s);
    std::vector<double> this_trace{cur};
    for (size_t it = 0; it < cfg.iterations; ++it) {
      bool improved = false;
      for (size_t f = 0; f < n; ++f) {
        const double orig = w[f];
        double step_best = cur, step_value = orig;
        for (double step : cfg.step_sizes) {
          for (double v : {orig + step, orig - step, orig * (1 + step), orig * (1 - step)}) {
            if (v == orig) continue;
            w[f] = v;
            if (all_zero(w)) continue;
            p.scores(w, cand);
            const double m = p.map(cand);
            if (m > step_best + 1e-12) {
              step_best = m;
              step_value = v;
            }
          }
        }
        w[f] = step_value;
        if (step_value != orig) {
          cur = step_best;
          improved = true;
          this_trace.push_back(cur);
        }
      }
      if (!improved) break;
    }
    if (cur > best_map) {
      best_map = cur;
      best_w = w;
      best_trace = std::move(this_trace);
    }
  }
  if (trace) *trace = std::move(best_trace);
  return LinearModel{std::move(names), std::move(best_w)};
}

std::vector<Ranking> apply_model(const LinearModel& model,
                                 const std::vector<FeatureVector>& rows) {
  std::map<std::string, std::vector<ScoredDoc>> by_query;
  for (const FeatureVector& r : rows)
    by_query[r.query_id].push_back({r.paragraph_id, model.score(r.features)});
  std::vector<Ranking> out;
  for (auto& [q, list] : by_query) {
    std::sort(list.begin(), list.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.paragraph_id < b.paragraph_id;
    });
    out.push_back({q, std::move(list)});
  }
  return out;
}

CvResult cross_validate(const std::vector<FeatureVector>& rows, const Qrels& qrels,
                        size_t k, const CaConfig& cfg, std::vector<std::string> names) {
  cfg.validate();
  std::vector<std::string> queries = query_ids(rows);
  if (k < 2 || k > queries.size())
    throw std::invalid_argument("cross-validation needs 2 <= k <= " +
                                std::to_string(queries.size()) + " folds");
  const size_t n = rows.empty() ? 0 : rows[0].features.size();
  if (names.empty()) names = default_names(n);

  Rng rng(stable_hash(cfg.seed, "cv-folds"));
  std::vector<std::string> shuffled = queries;
  rng.shuffle(shuffled);
  std::map<std::string, int> fold_of;
  for (size_t i = 0; i < shuffled.size(); ++i) fold_of[shuffled[i]] = static_cast<int>(i % k);

  CvResult result;
  std::vector<Ranking> merged;
  for (int f = 0; f < static_cast<int>(k); ++f) {
    FoldReport report;
    report.fold = f;
    std::vector<FeatureVector> train, test;
    for (const FeatureVector& r : rows) (fold_of.at(r.query_id) == f ? test : train).push_back(r);
    for (const auto& q : queries)
      (fold_of.at(q) == f ? report.test_queries : report.train_queries).push_back(q);
    if (MapProblem(train, qrels).retrieved_positives() == 0) {
      report.trained = false;
      report.model = LinearModel{names, std::vector<double>(n, 1.0)};
    } else {
      report.model = train_coordinate_ascent(train, qrels, cfg, names);
    }
    report.train_map = training_map(report.model, train, qrels);
    for (Ranking& r : apply_model(report.model, test)) merged.push_back(std::move(r));
    result.folds.push_back(std::move(report));
  }
  std::sort(merged.begin(), merged.end(),
            [](const Ranking& a, const Ranking& b) { return a.query_id < b.query_id; });
  result.rankings = std::move(merged);
  return result;
}

std::vector<Ranking> ingest_external_scores(std::istream& in) {
  return read_run(in).rankings();
}

}  // namespace carrank
