#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "carrank/corpus.h"
#include "carrank/index.h"

namespace carrank {

struct RunRow {
  std::string query_id;
  std::string paragraph_id;
  int rank;
  double score;
  std::string run_name;
};

// Rows of a TREC run. Per query: ranks are 1..n with no gaps, scores do not
// increase with rank, and no paragraph repeats.
struct RunFile {
  std::vector<RunRow> rows;

  // One Ranking per query in rank order, sorted by query id.
  std::vector<Ranking> rankings() const;
  static RunFile from_rankings(const std::vector<Ranking>& rankings,
                               const std::string& run_name);
};

// `<queryId> Q0 <paragraphId> <rank> <score> <runName>`. Throws ParseError
// with the 1-based row number on format or consistency violations.
RunFile read_run(std::istream& in);
// Scores are printed with 10 significant digits.
void write_run(std::ostream& out, const RunFile& run);
void write_run(std::ostream& out, const std::vector<Ranking>& rankings,
               const std::string& run_name);

using RelevantSet = std::set<std::string, std::less<>>;

// Mean over relevant items of precision at their ranks; relevant items that
// were not retrieved contribute 0. Throws std::invalid_argument when the
// relevant set is empty (such queries are excluded upstream).
double average_precision(const Ranking& ranking, const RelevantSet& relevant);
// |relevant in top R| / R with R = |relevant|.
double r_precision(const Ranking& ranking, const RelevantSet& relevant);
// 1 / rank of the first relevant item, 0 when none is retrieved.
double reciprocal_rank(const Ranking& ranking, const RelevantSet& relevant);

struct QueryMetrics {
  double ap = 0.0;
  double r_prec = 0.0;
  double rr = 0.0;
};

struct MetricsReport {
  std::map<std::string, QueryMetrics> per_query;
  double map = 0.0;
  double r_prec = 0.0;
  double mrr = 0.0;
  // Run queries with no positive judgments; not evaluated.
  size_t skipped_no_positives = 0;

  size_t evaluated() const { return per_query.size(); }
};

// Evaluates every qrels query with at least one positive. Queries missing
// from the run score 0 on every metric; run queries without positives are
// counted in skipped_no_positives.
MetricsReport evaluate_run(const std::vector<Ranking>& rankings,
                           const Qrels& qrels);
MetricsReport evaluate_run(const RunFile& run, const Qrels& qrels);

// `metric<TAB>value` lines; with per_query, a `# per-query` header followed by
// `queryId<TAB>ap<TAB>r_prec<TAB>rr` rows.
void write_metrics(std::ostream& out, const MetricsReport& report,
                   bool per_query = false);

struct TTestResult {
  double mean_diff = 0.0;  // mean of (A - B)
  double t_statistic = 0.0;
  double p_value = 1.0;
  size_t n = 0;
  bool significant_worse = false;
};

// Two-tailed paired t-test on per-query values keyed by query id, with the
// sample standard deviation and n - 1 degrees of freedom. All-zero
// differences give t = 0, p = 1. significant_worse is p < alpha with A below
// B on average. Throws std::invalid_argument when the key sets differ (the
// message lists the symmetric difference) or n < 2.
TTestResult paired_t_test(const std::map<std::string, double>& a,
                          const std::map<std::string, double>& b,
                          double alpha = 0.05);

std::map<std::string, double> per_query_ap(const MetricsReport& report);

}  // namespace carrank
