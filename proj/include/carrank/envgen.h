#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "carrank/corpus.h"
#include "carrank/index.h"

namespace carrank {

enum class Provenance { TrueSection, SameArticle, OtherArticle, Retrieved };

std::string_view to_string(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view s);

struct CandidateSet {
  std::string query_id;
  std::vector<std::string> paragraph_ids;
  std::vector<Provenance> provenance;  // parallel to paragraph_ids
  // Negatives that could not be drawn because the pool ran dry.
  size_t same_article_deficit = 0;
  size_t other_article_deficit = 0;

  size_t size() const { return paragraph_ids.size(); }
};

struct EnvSpec {
  size_t neg_same_article = 5;
  size_t neg_other_article = 5;
  uint64_t seed = 0;
};

// Per heading with at least one paragraph: its paragraphs, then
// neg_same_article negatives per true paragraph from other sections of the
// page, then neg_other_article per true paragraph from other pages. Draws are
// uniform without replacement, seeded per query id. Paragraphs not attached
// to any page are never drawn. Throws std::invalid_argument with fewer than
// two pages.
std::vector<CandidateSet> build_train_env(const Corpus& corpus, const EnvSpec& spec);

// Per heading: every paragraph of the page plus as many drawn from other
// pages, in a seeded shuffled order.
std::vector<CandidateSet> build_test_env(const Corpus& corpus, uint64_t seed);

// Top k paragraphs by BM25 over the query terms, provenance Retrieved.
CandidateSet generate_candidates(const Index& ix, const HeadingQuery& q, size_t k,
                                 const Bm25Params& params = {});

// `queryId<TAB>paragraphId<TAB>provenance` rows, sets in the given order.
void write_candidates(std::ostream& out, std::span<const CandidateSet> sets);
// Sets in first-appearance order. Throws ParseError on malformed rows or a
// paragraph repeated within a query.
std::vector<CandidateSet> read_candidates(std::istream& in);

}  // namespace carrank
