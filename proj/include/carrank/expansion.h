#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "carrank/corpus.h"
#include "carrank/index.h"
#include "carrank/semvec.h"

namespace carrank {

struct ExpandedQuery {
  HeadingQuery original;
  std::vector<WeightedTerm> added_terms;
  std::vector<WeightedEntity> added_entities;
  // Set by Rocchio: the support centroid in the active space.
  std::optional<AnyVector> expansion_vector;
  double lambda = 1.0;
  // Paragraph ids the Rocchio centroid was built from.
  std::vector<std::string> support_used;
};

// Relevance-model feedback terms. The top fb_docs Dirichlet-LM documents d
// vote with P(q|d) (their exponentiated scores, normalized over the feedback
// set) times tf(t,d)/|d|. Query terms are excluded; the best fb_terms terms
// (ties by term) are returned renormalized to sum 1. Empty when nothing
// matches. Throws std::invalid_argument when fb_docs or fb_terms is 0.
std::vector<WeightedTerm> rm1_terms(const Index& ix, const HeadingQuery& q,
                                    size_t fb_docs, size_t fb_terms,
                                    double mu = 1500.0);

// Entities linked in the top fb_docs feedback paragraphs, weighted by
// sum of count(e,d) * P(q|d), best fb_entities kept and renormalized. A
// paragraph whose linking fails contributes nothing; its id is appended to
// `failed` when given.
std::vector<WeightedEntity> rm1_entities(const Index& ix, const Corpus& corpus,
                                         const HeadingQuery& q,
                                         const EntityLinker& linker,
                                         size_t fb_docs, size_t fb_entities,
                                         double mu = 1500.0,
                                         std::vector<std::string>* failed = nullptr);

// Throws std::invalid_argument unless 0 <= lambda <= 1.
ExpandedQuery expand_rm3(const HeadingQuery& q, std::vector<WeightedTerm> terms,
                         double lambda);
ExpandedQuery expand_entities(const HeadingQuery& q,
                              std::vector<WeightedEntity> entities, double lambda);

// lambda * (original term counts / query length) + (1 - lambda) * feedback
// weights, resolved against the index. For term scorers such as BM25.
WeightedQuery rm3_weighted_query(const Index& ix, const ExpandedQuery& eq);

// The original query vector, mixed with the expansion (Rocchio centroid,
// feedback terms or feedback entities, in that order of preference) when
// there is one.
AnyVector expanded_query_vector(const VectorSpace& space, const ExpandedQuery& eq);

struct SupportEntry {
  std::string page_id;
  std::string paragraph_id;
  int fold;

  auto operator<=>(const SupportEntry&) const = default;
};

// Normalized heading key -> paragraphs filed under that heading in the
// training folds, ascending by (page id, paragraph id).
struct HeadingSupportIndex {
  std::map<std::string, std::vector<SupportEntry>> entries;
  // -1 when every fold contributes.
  int held_out = -1;

  const std::vector<SupportEntry>* find(std::string_view key) const;
};

// Throws std::invalid_argument when a page has no fold.
HeadingSupportIndex build_heading_support(const Corpus& corpus,
                                          const FoldAssignment& folds,
                                          int held_out);
// Every page contributes.
HeadingSupportIndex build_heading_support(const Corpus& corpus);

// Centroid of the first max_passages support paragraphs under the query's
// own heading (never from the query's own page), mixed with the query by
// lambda. No support leaves the query unexpanded. Paragraph text comes from
// `support_corpus`.
ExpandedQuery rocchio_expand(const HeadingQuery& q, const HeadingSupportIndex& support,
                             size_t max_passages, const VectorSpace& space,
                             const Corpus& support_corpus, double lambda);

}  // namespace carrank
