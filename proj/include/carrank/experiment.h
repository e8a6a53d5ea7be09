#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "carrank/corpus.h"
#include "carrank/envgen.h"
#include "carrank/evaluation.h"
#include "carrank/expansion.h"
#include "carrank/index.h"
#include "carrank/ltr.h"
#include "carrank/semvec.h"

namespace carrank {

// Bad flags, missing resources or an unsupported method/expansion pairing.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Method { Bm25, TfidfCs, GloveCs, EntityCs };
enum class Expansion { None, Rm1, EntRm1, Rocchio };

std::string_view to_string(Method m);
std::string_view to_string(Expansion e);
// Throw UsageError on unknown names.
Method parse_method(std::string_view s);
Expansion parse_expansion(std::string_view s);

// bm25 takes none or rm1; tfidf-cs and glove-cs take none, rm1 or rocchio;
// entity-cs takes none, ent-rm1 or rocchio. Throws UsageError otherwise.
void check_combination(Method m, Expansion e);

struct RunParams {
  Method method = Method::Bm25;
  Expansion expansion = Expansion::None;
  size_t fb_docs = 10;
  size_t fb_terms = 10;
  size_t fb_entities = 10;
  size_t rocchio_passages = 5;
  double lambda = 0.5;
  double mu = 1500.0;
  Bm25Params bm25;
  // Ranking depth for full-index retrieval.
  size_t k = 100;
};

// Borrowed inputs; the pointers must outlive any Ranker built from them.
struct Resources {
  const Corpus* corpus = nullptr;
  const Index* index = nullptr;
  const EmbeddingStore* word_embeddings = nullptr;
  const EmbeddingStore* entity_embeddings = nullptr;
  const EntityLinker* linker = nullptr;
  // Defaults to link frequencies over the corpus when null.
  const EntityStats* entity_stats = nullptr;
  // Rocchio material. When it is the corpus itself, `folds` decides which
  // pages may support a query (never its own fold); a separate support
  // corpus is used whole.
  const Corpus* support_corpus = nullptr;
  const FoldAssignment* folds = nullptr;
};

// One configured method, ready to rank any query of the corpus.
class Ranker {
 public:
  // Throws UsageError on a bad combination or missing resource.
  Ranker(const Resources& res, const RunParams& params);
  ~Ranker();
  Ranker(Ranker&&) noexcept;

  // With candidates: every candidate, scored and sorted. Without: the top k
  // of the whole index. Sorted by descending score then paragraph id.
  Ranking rank(const HeadingQuery& q, const CandidateSet* candidates = nullptr) const;

  const RunParams& params() const;
  // Setup notes such as a Rocchio fallback to query-only ranking.
  const std::vector<std::string>& warnings() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Ranks every query (in parallel, output in input order). Queries lacking a
// candidate set are skipped when `candidates` is given.
std::vector<Ranking> run_queries(const Ranker& ranker, std::span<const HeadingQuery> queries,
                                 const std::map<std::string, CandidateSet>* candidates = nullptr);

// A scorer spec is a method optionally followed by "+expansion", e.g.
// "tfidf-cs+rocchio".
RunParams parse_scorer(std::string_view spec, const RunParams& base);

struct PipelineConfig {
  size_t k = 100;
  std::vector<std::string> scorers{"bm25", "tfidf-cs"};
  RunParams base;
  CaConfig ca;
  size_t ltr_folds = 5;
  // Features dropped in a second, ablated fusion.
  std::vector<std::string> without;
  // Extra feature columns from external runs, keyed by feature name.
  std::map<std::string, std::vector<Ranking>> external;
};

struct PipelineResult {
  std::vector<CandidateSet> candidates;
  std::vector<std::string> feature_names;
  std::vector<std::vector<Ranking>> feature_runs;
  std::vector<MetricsReport> feature_metrics;
  CvResult fused;
  MetricsReport fused_metrics;
  std::vector<std::string> ablated_names;
  std::optional<CvResult> ablated;
  std::optional<MetricsReport> ablated_metrics;
  // Ablated against full fusion, per-query AP.
  std::optional<TTestResult> ablation_test;
  std::vector<std::string> warnings;
};

// BM25 candidates, per-scorer reranking, feature assembly and k-fold LTR.
// Errors are rethrown with the failing stage's name.
PipelineResult run_pipeline(const Resources& res, std::span<const HeadingQuery> queries,
                            const Qrels& qrels, const PipelineConfig& cfg);

}  // namespace carrank
