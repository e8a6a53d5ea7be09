#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "carrank/corpus.h"
#include "carrank/index.h"

namespace carrank {

struct FeatureVector {
  std::string query_id;
  std::string paragraph_id;
  std::vector<double> features;
};

// Scores rescaled to [0, 1] within the ranking; a constant ranking maps to
// 0.5 everywhere.
Ranking min_max_normalize(const Ranking& r);

// One vector per paragraph found in any of the runs (one run per scorer,
// all for `query_id`), ordered by paragraph id. Scores are min-max
// normalized per run; a paragraph missing from a run gets 0 in that slot.
std::vector<FeatureVector> assemble_features(std::span<const Ranking> runs,
                                             const std::string& query_id);
// runs[s] holds scorer s's rankings for any number of queries. Output is
// grouped by query id, ascending.
std::vector<FeatureVector> assemble_features(
    const std::vector<std::vector<Ranking>>& runs);

struct LinearModel {
  std::vector<std::string> names;
  std::vector<double> weights;

  double score(std::span<const double> features) const;
  // A `feature<TAB>weight` header, then one row per feature. Weights are
  // written with 17 significant digits so they load back exactly.
  void save(std::ostream& out) const;
  static LinearModel load(std::istream& in);
};

struct CaConfig {
  size_t restarts = 5;
  size_t iterations = 25;
  // Each step s is tried as w += s, w -= s, w *= 1 + s and w *= 1 - s.
  std::vector<double> step_sizes{1.0, 0.5, 0.1, 0.02};
  uint64_t seed = 0;

  // Throws std::invalid_argument on restarts == 0 or non-positive steps.
  void validate() const;
};

// MAP over the queries in `rows` that have positives in `qrels`, ranking
// each query's rows by model score (ties by paragraph id). R counts every
// positive in qrels, retrieved or not.
double training_map(const LinearModel& model, const std::vector<FeatureVector>& rows,
                    const Qrels& qrels);

// Coordinate ascent on training MAP. Starts from each unit vector, then from
// `restarts` seeded random vectors; returns the best end point (earliest on
// ties). When `trace` is given it receives the MAP after every accepted step
// of the winning start, beginning with its starting MAP. Throws
// std::invalid_argument when no row is a positive.
LinearModel train_coordinate_ascent(const std::vector<FeatureVector>& rows,
                                    const Qrels& qrels, const CaConfig& cfg,
                                    std::vector<std::string> names = {},
                                    std::vector<double>* trace = nullptr);

// Rankings sorted by query id; within a query, descending score and then
// ascending paragraph id.
std::vector<Ranking> apply_model(const LinearModel& model,
                                 const std::vector<FeatureVector>& rows);

struct FoldReport {
  int fold;
  LinearModel model;
  std::vector<std::string> train_queries;
  std::vector<std::string> test_queries;
  // False when the training queries had no positives; the model is then
  // all ones.
  bool trained = true;
  double train_map = 0.0;
};

struct CvResult {
  std::vector<Ranking> rankings;
  std::vector<FoldReport> folds;
};

// Queries are shuffled with the config seed and dealt round-robin into k
// folds; each fold is ranked by a model trained on the other k - 1. Throws
// std::invalid_argument unless 2 <= k <= number of queries.
CvResult cross_validate(const std::vector<FeatureVector>& rows, const Qrels& qrels,
                        size_t k, const CaConfig& cfg,
                        std::vector<std::string> names = {});

// Reads a TREC run of externally produced scores (see read_run).
std::vector<Ranking> ingest_external_scores(std::istream& in);

}  // namespace carrank
