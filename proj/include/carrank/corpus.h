#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "carrank/textproc.h"

namespace carrank {

// Malformed input. line() is 1-based; 0 when the error is not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(size_t line, const std::string& what)
      : std::runtime_error(line == 0 ? what
                                     : "line " + std::to_string(line) + ": " +
                                           what),
        line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

// Well-formed input that violates a cross-record invariant.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Paragraph {
  std::string id;
  std::string text;
};

struct Section {
  std::string heading;
  // Ancestor headings from the root, excluding the page title and this
  // section's own heading.
  std::vector<std::string> path;
  std::vector<std::string> paragraphs;
  std::vector<Section> children;
};

struct Page {
  std::string id;
  std::string title;
  std::vector<Section> sections;
};

struct Corpus {
  std::vector<Page> pages;
  std::unordered_map<std::string, Paragraph> paragraphs;

  const Paragraph& paragraph(const std::string& id) const;
  // Paragraph ids in ascending order.
  std::vector<std::string> paragraph_ids() const;
  size_t section_count() const;
};

struct HeadingQuery {
  std::string query_id;
  std::string page_id;
  // The section's own heading (Rocchio matches on this).
  std::string heading;
  std::string raw_text;
  std::vector<Token> terms;
};

// queryId -> paragraphId -> grade. Ordered so writers are deterministic.
struct Qrels {
  std::map<std::string, std::map<std::string, int>> entries;

  size_t positive_count() const;
  // Paragraph ids with grade > 0 for the query (empty when unknown).
  std::vector<std::string> relevant(const std::string& query_id) const;
};

struct FoldAssignment {
  int k = 5;
  std::map<std::string, int> fold_of_page;

  int fold(const std::string& page_id) const;
  std::vector<std::string> pages_in(int fold) const;
};

// One page record per line:
//   {"id": ..., "title": ..., "sections": [{"heading": ...,
//     "paragraphs": [{"id": ..., "text": ...}], "children": [...]}]}
// A paragraph object without "text" references a paragraph defined elsewhere
// in the stream. A line of the form {"paragraphs": [{"id", "text"}, ...]}
// (no "title") adds paragraphs that no page references. Blank lines are
// skipped.
Corpus parse_corpus(std::istream& in);

// Percent-encodes bytes that cannot appear in whitespace-delimited TREC
// files or in the query-id path ('%', '/', whitespace, control bytes).
std::string encode_id_component(std::string_view s);

// One query per section at every depth. raw_text is the heading, then its
// ancestors leaf-to-root, then the page title, joined by single spaces.
std::vector<HeadingQuery> build_queries(
    const Page& page,
    const TokenPipelineConfig& cfg = TokenPipelineConfig::standard());
std::vector<HeadingQuery> build_queries(
    const Corpus& corpus,
    const TokenPipelineConfig& cfg = TokenPipelineConfig::standard());

// queryId for a section given its full heading path (ancestors + heading).
std::string make_query_id(const std::string& page_id,
                          const std::vector<std::string>& heading_path);

// Grade 1 for paragraphs attached directly to a query's section. Paragraphs
// of descendant sections are not credited to ancestors.
Qrels derive_qrels(const Corpus& corpus);

// Balanced seeded partition of pages into k folds.
FoldAssignment assign_folds(const Corpus& corpus, int k, uint64_t seed);

// `<queryId> 0 <paragraphId> <grade>` per row, LF endings.
void write_qrels(std::ostream& out, const Qrels& qrels,
                 bool positives_only = true);
Qrels read_qrels(std::istream& in);

// Visits every section in pre-order together with its page.
template <class Fn>
void for_each_section(const Page& page, Fn&& fn) {
  struct Walker {
    const Page& page;
    Fn& fn;
    void operator()(const std::vector<Section>& sections) const {
      for (const Section& s : sections) {
        fn(page, s);
        (*this)(s.children);
      }
    }
  };
  Walker{page, fn}(page.sections);
}

}  // namespace carrank
