#include "carrank/evaluation.h"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_set>

namespace carrank {

namespace {

struct IndexedRow {
  size_t line;
  const RunRow* row;
};

void check_relevant(const RelevantSet& relevant) {
  if (relevant.empty())
    throw std::invalid_argument("metric undefined for a query with no relevant items");
}

std::string format_score(double s) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", s);
  return buf;
}

std::string format_metric(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::vector<Ranking> RunFile::rankings() const {
  std::map<std::string, std::vector<const RunRow*>> by_query;
  for (const RunRow& r : rows) by_query[r.query_id].push_back(&r);
  std::vector<Ranking> out;
  out.reserve(by_query.size());
  for (auto& [q, list] : by_query) {
    std::stable_sort(list.begin(), list.end(),
                     [](const RunRow* a, const RunRow* b) { return a->rank < b->rank; });
    Ranking r;
    r.query_id = q;
    for (const RunRow* row : list) r.entries.push_back({row->paragraph_id, row->score});
    out.push_back(std::move(r));
  }
  return out;
}

RunFile RunFile::from_rankings(const std::vector<Ranking>& rankings,
                               const std::string& run_name) {
  RunFile run;
  for (const Ranking& r : rankings) {
    int rank = 0;
    for (const ScoredDoc& e : r.entries)
      run.rows.push_back({r.query_id, e.paragraph_id, ++rank, e.score, run_name});
  }
  return run;
}

RunFile read_run(std::istream& in) {
  RunFile run;
  std::vector<size_t> lines;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream f(line);
    RunRow row;
    std::string q0, rank_s, score_s, extra;
    if (!(f >> row.query_id >> q0 >> row.paragraph_id >> rank_s >> score_s >>
          row.run_name) ||
        (f >> extra))
      throw ParseError(line_no, "run row must have 6 fields");
    try {
      size_t used = 0;
      row.rank = std::stoi(rank_s, &used);
      if (used != rank_s.size()) throw std::invalid_argument(rank_s);
      row.score = std::stod(score_s, &used);
      if (used != score_s.size() || !std::isfinite(row.score))
        throw std::invalid_argument(score_s);
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad rank or score");
    }
    if (row.rank < 1) throw ParseError(line_no, "rank must be >= 1");
    run.rows.push_back(std::move(row));
    lines.push_back(line_no);
  }

  std::map<std::string, std::vector<IndexedRow>> by_query;
  for (size_t i = 0; i < run.rows.size(); ++i)
    by_query[run.rows[i].query_id].push_back({lines[i], &run.rows[i]});
  for (auto& [q, list] : by_query) {
    std::unordered_set<std::string> seen;
    for (const IndexedRow& r : list)
      if (!seen.insert(r.row->paragraph_id).second)
        throw ParseError(r.line, "paragraph \"" + r.row->paragraph_id +
                                     "\" repeated for query \"" + q + "\"");
    std::stable_sort(list.begin(), list.end(), [](const IndexedRow& a, const IndexedRow& b) {
      return a.row->rank < b.row->rank;
    });
    for (size_t i = 0; i < list.size(); ++i) {
      if (list[i].row->rank != static_cast<int>(i + 1))
        throw ParseError(list[i].line, "ranks for query \"" + q +
                                           "\" are not 1..n (tie or gap at rank " +
                                           std::to_string(list[i].row->rank) + ")");
      if (i > 0 && list[i].row->score > list[i - 1].row->score)
        throw ParseError(list[i].line, "score increases with rank for query \"" + q + "\"");
    }
  }
  return run;
}

void write_run(std::ostream& out, const RunFile& run) {
  for (const RunRow& r : run.rows)
    out << r.query_id << " Q0 " << r.paragraph_id << ' ' << r.rank << ' '
        << format_score(r.score) << ' ' << r.run_name << '\n';
}

void write_run(std::ostream& out, const std::vector<Ranking>& rankings,
               const std::string& run_name) {
  write_run(out, RunFile::from_rankings(rankings, run_name));
}

double average_precision(const Ranking& ranking, const RelevantSet& relevant) {
  check_relevant(relevant);
  double sum = 0.0;
  size_t hits = 0;
  for (size_t i = 0; i < ranking.entries.size(); ++i) {
    if (relevant.count(ranking.entries[i].paragraph_id)) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(relevant.size());
}

double r_precision(const Ranking& ranking, const RelevantSet& relevant) {
  check_relevant(relevant);
  const size_t r = relevant.size();
  size_t hits = 0;
  for (size_t i = 0; i < r && i < ranking.entries.size(); ++i)
    if (relevant.count(ranking.entries[i].paragraph_id)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(r);
}

double reciprocal_rank(const Ranking& ranking, const RelevantSet& relevant) {
  check_relevant(relevant);
  for (size_t i = 0; i < ranking.entries.size(); ++i)
    if (relevant.count(ranking.entries[i].paragraph_id))
      return 1.0 / static_cast<double>(i + 1);
  return 0.0;
}

MetricsReport evaluate_run(const std::vector<Ranking>& rankings,
                           const Qrels& qrels) {
  std::map<std::string, const Ranking*> by_query;
  for (const Ranking& r : rankings) by_query[r.query_id] = &r;

  MetricsReport report;
  for (const auto& [q, rows] : qrels.entries) {
    RelevantSet relevant;
    for (const auto& [p, grade] : rows)
      if (grade > 0) relevant.insert(p);
    if (relevant.empty()) continue;
    QueryMetrics m;
    auto it = by_query.find(q);
    if (it != by_query.end()) {
      m.ap = average_precision(*it->second, relevant);
      m.r_prec = r_precision(*it->second, relevant);
      m.rr = reciprocal_rank(*it->second, relevant);
    }
    report.per_query.emplace(q, m);
  }
  for (const auto& [q, r] : by_query)
    if (!report.per_query.count(q)) ++report.skipped_no_positives;

  if (!report.per_query.empty()) {
    for (const auto& [q, m] : report.per_query) {
      report.map += m.ap;
      report.r_prec += m.r_prec;
      report.mrr += m.rr;
    }
    const double n = static_cast<double>(report.per_query.size());
    report.map /= n;
    report.r_prec /= n;
    report.mrr /= n;
  }
  return report;
}

MetricsReport evaluate_run(const RunFile& run, const Qrels& qrels) {
  return evaluate_run(run.rankings(), qrels);
}

void write_metrics(std::ostream& out, const MetricsReport& report,
                   bool per_query) {
  out << "map\t" << format_metric(report.map) << '\n'
      << "Rprec\t" << format_metric(report.r_prec) << '\n'
      << "recip_rank\t" << format_metric(report.mrr) << '\n'
      << "num_q\t" << report.evaluated() << '\n'
      << "num_q_no_rel\t" << report.skipped_no_positives << '\n';
  if (!per_query) return;
  out << "# per-query\tap\tRprec\trecip_rank\n";
  for (const auto& [q, m] : report.per_query)
    out << q << '\t' << format_metric(m.ap) << '\t' << format_metric(m.r_prec)
        << '\t' << format_metric(m.rr) << '\n';
}

TTestResult paired_t_test(const std::map<std::string, double>& a,
                          const std::map<std::string, double>& b,
                          double alpha) {
  std::vector<std::string> only_a, only_b;
  for (const auto& [q, v] : a)
    if (!b.count(q)) only_a.push_back(q);
  for (const auto& [q, v] : b)
    if (!a.count(q)) only_b.push_back(q);
  if (!only_a.empty() || !only_b.empty()) {
    std::string msg = "paired t-test: query sets differ;";
    for (const auto& q : only_a) msg += " only in A: " + q + ";";
    for (const auto& q : only_b) msg += " only in B: " + q + ";";
    throw std::invalid_argument(msg);
  }
  TTestResult res;
  res.n = a.size();
  if (res.n < 2) throw std::invalid_argument("paired t-test needs n >= 2");

  std::vector<double> d;
  d.reserve(res.n);
  for (const auto& [q, v] : a) d.push_back(v - b.at(q));
  const double n = static_cast<double>(res.n);
  double mean = 0.0;
  for (double x : d) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  res.mean_diff = mean;

  if (sd == 0.0) {
    if (mean == 0.0) {
      res.t_statistic = 0.0;
      res.p_value = 1.0;
    } else {
      // Identical non-zero differences: infinitely significant.
      res.t_statistic = mean > 0 ? INFINITY : -INFINITY;
      res.p_value = 0.0;
    }
  } else {
    res.t_statistic = mean / (sd / std::sqrt(n));
    boost::math::students_t dist(n - 1.0);
    res.p_value = 2.0 * boost::math::cdf(boost::math::complement(
                            dist, std::fabs(res.t_statistic)));
    res.p_value = std::min(1.0, std::max(0.0, res.p_value));
  }
  res.significant_worse = res.p_value < alpha && res.mean_diff < 0.0;
  return res;
}

std::map<std::string, double> per_query_ap(const MetricsReport& report) {
  std::map<std::string, double> out;
  for (const auto& [q, m] : report.per_query) out.emplace(q, m.ap);
  return out;
}

}  // namespace carrank
