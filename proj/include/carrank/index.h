#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "carrank/corpus.h"
#include "carrank/textproc.h"

namespace carrank {

// Dense internal ids. Documents are numbered in ascending paragraph-id order,
// so comparing DocIds is the same as comparing paragraph ids. Terms are
// numbered in ascending byte order.
using DocId = uint32_t;
using TermId = uint32_t;

struct Posting {
  DocId doc;
  uint32_t tf;
};

struct TermCount {
  TermId term;
  uint32_t tf;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  // Throws std::invalid_argument unless k1 > 0 and 0 <= b <= 1.
  void validate() const;
};

// Term-id keyed sparse weights, sorted by term id with no duplicates.
struct SparseVector {
  std::vector<std::pair<TermId, double>> entries;

  bool empty() const { return entries.empty(); }
  double norm() const;
  double dot(const SparseVector& other) const;
  double weight(TermId t) const;
  // In-place L2 normalization; no-op on a zero vector.
  void normalize();
};

struct ScoredDoc {
  std::string paragraph_id;
  double score;

  bool operator==(const ScoredDoc&) const = default;
};

// Descending score, ties by ascending paragraph id.
struct Ranking {
  std::string query_id;
  std::vector<ScoredDoc> entries;
};

// Query terms resolved against an index with per-term weights. Plain queries
// carry term multiplicities as weights.
struct WeightedQuery {
  std::vector<std::pair<TermId, double>> terms;

  std::vector<TermId> term_ids() const;
};

class Index {
 public:
  // Throws std::invalid_argument on an empty map.
  static Index build(const std::unordered_map<std::string, std::string>& texts,
                     const TokenPipelineConfig& cfg);
  static Index build(const Corpus& corpus, const TokenPipelineConfig& cfg);

  // Line-oriented text format; identical input gives identical bytes.
  void save(std::ostream& out) const;
  static Index load(std::istream& in);

  size_t doc_count() const { return doc_ids_.size(); }
  size_t term_count() const { return terms_.size(); }
  double avg_doc_length() const { return avg_doc_length_; }
  uint64_t collection_length() const { return collection_length_; }
  const TokenPipelineConfig& config() const { return config_; }

  std::optional<DocId> find_doc(std::string_view paragraph_id) const;
  // Throws std::out_of_range for an unknown paragraph.
  DocId doc(std::string_view paragraph_id) const;
  const std::string& paragraph_id(DocId d) const { return doc_ids_[d]; }
  uint32_t doc_length(DocId d) const { return doc_lengths_[d]; }
  std::span<const TermCount> doc_terms(DocId d) const { return forward_[d]; }
  uint32_t tf(TermId t, DocId d) const;

  std::optional<TermId> find_term(std::string_view term) const;
  const std::string& term(TermId t) const { return terms_[t]; }
  uint32_t doc_freq(TermId t) const {
    return static_cast<uint32_t>(postings_[t].size());
  }
  uint64_t collection_freq(TermId t) const { return collection_freq_[t]; }
  std::span<const Posting> postings(TermId t) const { return postings_[t]; }

  // Analyzes text with the index's own pipeline.
  std::vector<Token> analyze(std::string_view text) const {
    return tokenize(text, config_);
  }
  // The index term a surface word maps to (stemmed when the index stems).
  Token term_key(std::string_view surface) const;

  // Known tokens with multiplicity as weight; unknown tokens dropped.
  WeightedQuery resolve(std::span<const Token> tokens) const;

 private:
  void finish_stats();

  TokenPipelineConfig config_;
  std::vector<std::string> doc_ids_;
  std::unordered_map<std::string, DocId> doc_lookup_;
  std::vector<uint32_t> doc_lengths_;
  std::vector<std::vector<TermCount>> forward_;
  std::vector<std::string> terms_;
  std::unordered_map<std::string, TermId> term_lookup_;
  std::vector<std::vector<Posting>> postings_;
  std::vector<uint64_t> collection_freq_;
  uint64_t collection_length_ = 0;
  double avg_doc_length_ = 0.0;
};

// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).
double bm25_idf(const Index& ix, TermId t);

// Sum over query tokens (with multiplicity) of idf * tf * (k1 + 1) /
// (tf + k1 * (1 - b + b * len / avgLen)). Throws std::out_of_range for an
// unknown paragraph.
double bm25_score(const Index& ix, std::span<const Token> query,
                  std::string_view paragraph_id,
                  const Bm25Params& params = {});
double bm25_score(const Index& ix, const WeightedQuery& query, DocId doc,
                  const Bm25Params& params = {});

// (1 + ln tf) * ln(N / df) per known term, L2-normalized. Terms with zero
// weight are dropped.
SparseVector tfidf_vector(const Index& ix, std::span<const Token> bag);
SparseVector tfidf_vector(const Index& ix, DocId doc);
// TF-IDF weight of a term occurring tf times; 0 for unknown terms.
double tfidf_weight(const Index& ix, TermId t, double tf);

// Sum of ln((tf + mu * cf / |C|) / (len + mu)) over query tokens found in
// the collection. Throws std::out_of_range for an unknown paragraph and
// std::invalid_argument unless mu > 0.
double lm_dirichlet_score(const Index& ix, std::span<const Token> query,
                          std::string_view paragraph_id, double mu = 1500.0);
double lm_dirichlet_score(const Index& ix, const WeightedQuery& query,
                          DocId doc, double mu = 1500.0);

// Documents containing at least one of the terms, ascending.
std::vector<DocId> matching_docs(const Index& ix, std::span<const TermId> terms);

// Orders (doc, score) pairs by descending score then ascending doc and keeps
// the first k.
std::vector<std::pair<DocId, double>> top_k(
    std::vector<std::pair<DocId, double>> scored, size_t k);

// Top k of the documents matching at least one pool term, under `score`.
template <class ScoreFn>
Ranking retrieve_topk(const Index& ix, std::span<const TermId> pool_terms,
                      size_t k, ScoreFn&& score, std::string query_id = {}) {
  if (k == 0) throw std::invalid_argument("retrieve_topk: k must be >= 1");
  std::vector<std::pair<DocId, double>> scored;
  for (DocId d : matching_docs(ix, pool_terms)) scored.emplace_back(d, score(d));
  Ranking r;
  r.query_id = std::move(query_id);
  for (const auto& [d, s] : top_k(std::move(scored), k))
    r.entries.push_back({ix.paragraph_id(d), s});
  return r;
}

Ranking retrieve_bm25(const Index& ix, std::span<const Token> query, size_t k,
                      const Bm25Params& params = {},
                      std::string query_id = {});
Ranking retrieve_tfidf_cosine(const Index& ix, std::span<const Token> query,
                              size_t k, std::string query_id = {});
Ranking retrieve_lm(const Index& ix, std::span<const Token> query, size_t k,
                    double mu = 1500.0, std::string query_id = {});

}  // namespace carrank
