#include "carrank/index.h"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace carrank {

namespace {

constexpr const char* kIndexMagic = "carrank-index";
constexpr int kIndexVersion = 1;

bool doc_before(const std::pair<DocId, double>& a,
                const std::pair<DocId, double>& b) {
  if (a.second != b.second) return a.second > b.second;
  return a.first < b.first;
}

[[noreturn]] void bad_index(const std::string& what) {
  throw ParseError(0, "index file: " + what);
}

}  // namespace

void Bm25Params::validate() const {
  if (!(k1 > 0.0)) throw std::invalid_argument("bm25: k1 must be > 0");
  if (!(b >= 0.0 && b <= 1.0))
    throw std::invalid_argument("bm25: b must be in [0, 1]");
}

double SparseVector::norm() const {
  double s = 0.0;
  for (const auto& [t, w] : entries) s += w * w;
  return std::sqrt(s);
}

double SparseVector::dot(const SparseVector& other) const {
  double s = 0.0;
  auto a = entries.begin();
  auto b = other.entries.begin();
  while (a != entries.end() && b != other.entries.end()) {
    if (a->first < b->first) {
      ++a;
    } else if (b->first < a->first) {
      ++b;
    } else {
      s += a->second * b->second;
      ++a;
      ++b;
    }
  }
  return s;
}

double SparseVector::weight(TermId t) const {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), t,
      [](const std::pair<TermId, double>& e, TermId id) { return e.first < id; });
  return it != entries.end() && it->first == t ? it->second : 0.0;
}

void SparseVector::normalize() {
  double n = norm();
  if (n == 0.0) return;
  for (auto& [t, w] : entries) w /= n;
}

std::vector<TermId> WeightedQuery::term_ids() const {
  std::vector<TermId> ids;
  ids.reserve(terms.size());
  for (const auto& [t, w] : terms) ids.push_back(t);
  return ids;
}

Index Index::build(const std::unordered_map<std::string, std::string>& texts,
                   const TokenPipelineConfig& cfg) {
  if (texts.empty()) throw std::invalid_argument("cannot index an empty collection");
  Index ix;
  ix.config_ = cfg;
  ix.doc_ids_.reserve(texts.size());
  for (const auto& [id, text] : texts) ix.doc_ids_.push_back(id);
  std::sort(ix.doc_ids_.begin(), ix.doc_ids_.end());

  std::vector<std::map<std::string, uint32_t>> bags(ix.doc_ids_.size());
  std::map<std::string, TermId> vocab;
  ix.doc_lengths_.resize(ix.doc_ids_.size());
  for (DocId d = 0; d < ix.doc_ids_.size(); ++d) {
    std::vector<Token> tokens = tokenize(texts.at(ix.doc_ids_[d]), cfg);
    ix.doc_lengths_[d] = static_cast<uint32_t>(tokens.size());
    for (Token& t : tokens) {
      ++bags[d][t];
      vocab.emplace(std::move(t), 0);
    }
  }
  TermId next = 0;
  ix.terms_.reserve(vocab.size());
  for (auto& [term, id] : vocab) {
    id = next++;
    ix.terms_.push_back(term);
  }
  ix.postings_.resize(ix.terms_.size());
  ix.forward_.resize(ix.doc_ids_.size());
  for (DocId d = 0; d < bags.size(); ++d) {
    auto& fwd = ix.forward_[d];
    fwd.reserve(bags[d].size());
    // std::map iteration is in byte order, which is term-id order.
    for (const auto& [term, tf] : bags[d]) {
      TermId t = vocab.at(term);
      fwd.push_back({t, tf});
      ix.postings_[t].push_back({d, tf});
    }
  }
  ix.finish_stats();
  return ix;
}

Index Index::build(const Corpus& corpus, const TokenPipelineConfig& cfg) {
  std::unordered_map<std::string, std::string> texts;
  texts.reserve(corpus.paragraphs.size());
  for (const auto& [id, p] : corpus.paragraphs) texts.emplace(id, p.text);
  return build(texts, cfg);
}

void Index::finish_stats() {
  doc_lookup_.clear();
  doc_lookup_.reserve(doc_ids_.size());
  for (DocId d = 0; d < doc_ids_.size(); ++d) doc_lookup_.emplace(doc_ids_[d], d);
  term_lookup_.clear();
  term_lookup_.reserve(terms_.size());
  for (TermId t = 0; t < terms_.size(); ++t) term_lookup_.emplace(terms_[t], t);
  collection_freq_.assign(terms_.size(), 0);
  for (TermId t = 0; t < terms_.size(); ++t)
    for (const Posting& p : postings_[t]) collection_freq_[t] += p.tf;
  collection_length_ = 0;
  for (uint32_t len : doc_lengths_) collection_length_ += len;
  avg_doc_length_ = doc_ids_.empty()
                        ? 0.0
                        : static_cast<double>(collection_length_) /
                              static_cast<double>(doc_ids_.size());
}

void Index::save(std::ostream& out) const {
  out << kIndexMagic << ' ' << kIndexVersion << '\n';
  out << "config stem=" << (config_.stem ? 1 : 0)
      << " drop_digits=" << (config_.drop_digits ? 1 : 0) << '\n';
  out << "stopwords " << (config_.stopwords ? config_.stopwords->size() : 0);
  if (config_.stopwords)
    for (const std::string& w : *config_.stopwords) out << ' ' << w;
  out << '\n';
  out << "docs " << doc_ids_.size() << '\n';
  for (DocId d = 0; d < doc_ids_.size(); ++d)
    out << doc_ids_[d] << ' ' << doc_lengths_[d] << '\n';
  out << "terms " << terms_.size() << '\n';
  for (TermId t = 0; t < terms_.size(); ++t) {
    out << terms_[t] << ' ' << postings_[t].size();
    for (const Posting& p : postings_[t]) out << ' ' << p.doc << ':' << p.tf;
    out << '\n';
  }
}

Index Index::load(std::istream& in) {
  Index ix;
  std::string line;
  auto next_line = [&](const char* what) -> std::istringstream {
    if (!std::getline(in, line)) bad_index(std::string("truncated before ") + what);
    return std::istringstream(line);
  };

  {
    auto f = next_line("header");
    std::string magic;
    int version = 0;
    if (!(f >> magic >> version) || magic != kIndexMagic)
      bad_index("not a carrank index");
    if (version != kIndexVersion)
      bad_index("unsupported version " + std::to_string(version));
  }
  {
    auto f = next_line("config");
    std::string tag, stem, digits;
    if (!(f >> tag >> stem >> digits) || tag != "config") bad_index("bad config line");
    ix.config_.stem = stem == "stem=1";
    ix.config_.drop_digits = digits == "drop_digits=1";
  }
  {
    auto f = next_line("stopwords");
    std::string tag;
    size_t n = 0;
    if (!(f >> tag >> n) || tag != "stopwords") bad_index("bad stopwords line");
    StopwordSet words;
    std::string w;
    for (size_t i = 0; i < n; ++i) {
      if (!(f >> w)) bad_index("stopword list shorter than declared");
      words.insert(w);
    }
    ix.config_.stopwords = std::make_shared<const StopwordSet>(std::move(words));
  }
  size_t ndocs = 0;
  {
    auto f = next_line("docs");
    std::string tag;
    if (!(f >> tag >> ndocs) || tag != "docs") bad_index("bad docs line");
  }
  ix.doc_ids_.resize(ndocs);
  ix.doc_lengths_.resize(ndocs);
  for (size_t d = 0; d < ndocs; ++d) {
    auto f = next_line("doc row");
    if (!(f >> ix.doc_ids_[d] >> ix.doc_lengths_[d])) bad_index("bad doc row");
    if (d > 0 && !(ix.doc_ids_[d - 1] < ix.doc_ids_[d]))
      bad_index("doc ids not strictly ascending");
  }
  size_t nterms = 0;
  {
    auto f = next_line("terms");
    std::string tag;
    if (!(f >> tag >> nterms) || tag != "terms") bad_index("bad terms line");
  }
  ix.terms_.resize(nterms);
  ix.postings_.resize(nterms);
  ix.forward_.resize(ndocs);
  for (TermId t = 0; t < nterms; ++t) {
    auto f = next_line("term row");
    size_t df = 0;
    if (!(f >> ix.terms_[t] >> df)) bad_index("bad term row");
    if (t > 0 && !(ix.terms_[t - 1] < ix.terms_[t]))
      bad_index("terms not strictly ascending");
    std::string cell;
    for (size_t i = 0; i < df; ++i) {
      if (!(f >> cell)) bad_index("posting list shorter than declared");
      auto colon = cell.find(':');
      if (colon == std::string::npos) bad_index("bad posting " + cell);
      unsigned long d = std::stoul(cell.substr(0, colon));
      unsigned long tf = std::stoul(cell.substr(colon + 1));
      if (d >= ndocs) bad_index("posting doc out of range");
      ix.postings_[t].push_back({static_cast<DocId>(d), static_cast<uint32_t>(tf)});
      ix.forward_[d].push_back({t, static_cast<uint32_t>(tf)});
    }
  }
  ix.finish_stats();
  return ix;
}

std::optional<DocId> Index::find_doc(std::string_view paragraph_id) const {
  auto it = doc_lookup_.find(std::string(paragraph_id));
  if (it == doc_lookup_.end()) return std::nullopt;
  return it->second;
}

DocId Index::doc(std::string_view paragraph_id) const {
  auto d = find_doc(paragraph_id);
  if (!d)
    throw std::out_of_range("paragraph \"" + std::string(paragraph_id) +
                            "\" is not in the index");
  return *d;
}

uint32_t Index::tf(TermId t, DocId d) const {
  const auto& fwd = forward_[d];
  auto it = std::lower_bound(
      fwd.begin(), fwd.end(), t,
      [](const TermCount& c, TermId id) { return c.term < id; });
  return it != fwd.end() && it->term == t ? it->tf : 0;
}

std::optional<TermId> Index::find_term(std::string_view term) const {
  auto it = term_lookup_.find(std::string(term));
  if (it == term_lookup_.end()) return std::nullopt;
  return it->second;
}

Token Index::term_key(std::string_view surface) const {
  return config_.stem ? porter_stem(surface) : Token(surface);
}

WeightedQuery Index::resolve(std::span<const Token> tokens) const {
  std::map<TermId, double> counts;
  for (const Token& tok : tokens)
    if (auto t = find_term(tok)) counts[*t] += 1.0;
  WeightedQuery q;
  q.terms.assign(counts.begin(), counts.end());
  return q;
}

double bm25_idf(const Index& ix, TermId t) {
  const double n = static_cast<double>(ix.doc_count());
  const double df = ix.doc_freq(t);
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double bm25_score(const Index& ix, const WeightedQuery& query, DocId doc,
                  const Bm25Params& params) {
  const double avg = ix.avg_doc_length();
  const double len_ratio =
      avg > 0.0 ? static_cast<double>(ix.doc_length(doc)) / avg : 1.0;
  const double norm = params.k1 * (1.0 - params.b + params.b * len_ratio);
  double score = 0.0;
  for (const auto& [t, w] : query.terms) {
    const double tf = ix.tf(t, doc);
    if (tf == 0.0) continue;
    score += w * bm25_idf(ix, t) * tf * (params.k1 + 1.0) / (tf + norm);
  }
  return score;
}

double bm25_score(const Index& ix, std::span<const Token> query,
                  std::string_view paragraph_id, const Bm25Params& params) {
  params.validate();
  return bm25_score(ix, ix.resolve(query), ix.doc(paragraph_id), params);
}

double tfidf_weight(const Index& ix, TermId t, double tf) {
  if (tf <= 0.0) return 0.0;
  const double df = ix.doc_freq(t);
  if (df == 0.0) return 0.0;
  return (1.0 + std::log(tf)) *
         std::log(static_cast<double>(ix.doc_count()) / df);
}

SparseVector tfidf_vector(const Index& ix, std::span<const Token> bag) {
  SparseVector v;
  for (const auto& [t, count] : ix.resolve(bag).terms) {
    double w = tfidf_weight(ix, t, count);
    if (w != 0.0) v.entries.emplace_back(t, w);
  }
  v.normalize();
  return v;
}

SparseVector tfidf_vector(const Index& ix, DocId doc) {
  SparseVector v;
  for (const TermCount& c : ix.doc_terms(doc)) {
    double w = tfidf_weight(ix, c.term, c.tf);
    if (w != 0.0) v.entries.emplace_back(c.term, w);
  }
  v.normalize();
  return v;
}

double lm_dirichlet_score(const Index& ix, const WeightedQuery& query,
                          DocId doc, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("dirichlet mu must be > 0");
  const double clen = static_cast<double>(ix.collection_length());
  const double denom = static_cast<double>(ix.doc_length(doc)) + mu;
  double score = 0.0;
  for (const auto& [t, w] : query.terms) {
    const double cf = static_cast<double>(ix.collection_freq(t));
    if (cf == 0.0) continue;
    score += w * std::log((ix.tf(t, doc) + mu * cf / clen) / denom);
  }
  return score;
}

double lm_dirichlet_score(const Index& ix, std::span<const Token> query,
                          std::string_view paragraph_id, double mu) {
  return lm_dirichlet_score(ix, ix.resolve(query), ix.doc(paragraph_id), mu);
}

std::vector<DocId> matching_docs(const Index& ix,
                                 std::span<const TermId> terms) {
  std::vector<DocId> docs;
  for (TermId t : terms)
    for (const Posting& p : ix.postings(t)) docs.push_back(p.doc);
  std::sort(docs.begin(), docs.end());
  docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
  return docs;
}

std::vector<std::pair<DocId, double>> top_k(
    std::vector<std::pair<DocId, double>> scored, size_t k) {
  if (k < scored.size()) {
    std::partial_sort(scored.begin(), scored.begin() + static_cast<long>(k),
                      scored.end(), doc_before);
    scored.resize(k);
  } else {
    std::sort(scored.begin(), scored.end(), doc_before);
  }
  return scored;
}

Ranking retrieve_bm25(const Index& ix, std::span<const Token> query, size_t k,
                      const Bm25Params& params, std::string query_id) {
  params.validate();
  WeightedQuery q = ix.resolve(query);
  std::vector<TermId> pool = q.term_ids();
  return retrieve_topk(
      ix, pool, k, [&](DocId d) { return bm25_score(ix, q, d, params); },
      std::move(query_id));
}

Ranking retrieve_tfidf_cosine(const Index& ix, std::span<const Token> query,
                              size_t k, std::string query_id) {
  SparseVector qv = tfidf_vector(ix, query);
  std::vector<TermId> pool = ix.resolve(query).term_ids();
  return retrieve_topk(
      ix, pool, k,
      [&](DocId d) {
        SparseVector dv = tfidf_vector(ix, d);
        return qv.empty() || dv.empty() ? 0.0 : qv.dot(dv);
      },
      std::move(query_id));
}

Ranking retrieve_lm(const Index& ix, std::span<const Token> query, size_t k,
                    double mu, std::string query_id) {
  WeightedQuery q = ix.resolve(query);
  std::vector<TermId> pool = q.term_ids();
  return retrieve_topk(
      ix, pool, k, [&](DocId d) { return lm_dirichlet_score(ix, q, d, mu); },
      std::move(query_id));
}

}  // namespace carrank
