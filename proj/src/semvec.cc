#include "carrank/semvec.h"

#include <charconv>
#include <cmath>
#include <sstream>

namespace carrank {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

std::optional<double> parse_double(std::string_view s) {
  double v;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

void add_scaled(std::vector<double>& acc, std::span<const float> v, double w) {
  for (size_t i = 0; i < acc.size(); ++i) acc[i] += w * static_cast<double>(v[i]);
}

SparseVector scaled(const SparseVector& v, double c) {
  SparseVector out = v;
  for (auto& [t, w] : out.entries) w *= c;
  return out;
}

double inv_norm(double n) { return n > 0.0 ? 1.0 / n : 0.0; }

}  // namespace

double DenseVector::norm() const {
  double s = 0.0;
  for (double x : values) s += x * x;
  return std::sqrt(s);
}

double DenseVector::dot(const DenseVector& other) const {
  if (values.size() != other.values.size())
    throw std::invalid_argument("dense vectors differ in dimension: " +
                                std::to_string(values.size()) + " vs " +
                                std::to_string(other.values.size()));
  double s = 0.0;
  for (size_t i = 0; i < values.size(); ++i) s += values[i] * other.values[i];
  return s;
}

EmbeddingStore EmbeddingStore::load(std::istream& in) {
  EmbeddingStore store;
  std::string line;
  size_t line_no = 0;
  bool first = true;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (first && fields.size() == 2 && all_digits(fields[0]) && all_digits(fields[1])) {
      first = false;
      continue;
    }
    first = false;
    if (fields.size() < 2) throw ParseError(line_no, "embedding row has no values");
    const size_t dim = fields.size() - 1;
    if (store.dim_ == 0) store.dim_ = dim;
    if (dim != store.dim_)
      throw ParseError(line_no, "expected " + std::to_string(store.dim_) +
                                    " values, found " + std::to_string(dim));
    row.clear();
    for (size_t i = 1; i < fields.size(); ++i) {
      auto v = parse_double(fields[i]);
      if (!v || !std::isfinite(*v))
        throw ParseError(line_no, "bad value \"" + std::string(fields[i]) + "\"");
      row.push_back(*v);
    }
    std::string key(fields[0]);
    if (store.lookup_.count(key))
      throw ParseError(line_no, "key \"" + key + "\" repeated");
    store.add(std::move(key), row);
  }
  if (store.dim_ == 0) throw ParseError(0, "embedding file has no vectors");
  return store;
}

void EmbeddingStore::add(std::string key, std::span<const double> values) {
  if (dim_ == 0) dim_ = values.size();
  if (values.size() != dim_ || dim_ == 0)
    throw std::invalid_argument("embedding for \"" + key + "\" has wrong length");
  for (double v : values)
    if (!std::isfinite(v))
      throw std::invalid_argument("embedding for \"" + key + "\" is not finite");
  if (!lookup_.emplace(key, keys_.size()).second)
    throw std::invalid_argument("embedding key \"" + key + "\" repeated");
  keys_.push_back(std::move(key));
  for (double v : values) data_.push_back(static_cast<float>(v));
}

std::optional<std::span<const float>> EmbeddingStore::find(std::string_view key) const {
  auto it = lookup_.find(std::string(key));
  if (it == lookup_.end()) return std::nullopt;
  return std::span<const float>(data_.data() + it->second * dim_, dim_);
}

DenseVector text_vector(std::span<const Token> bag, const EmbeddingStore& store,
                        const Index& ix) {
  DenseVector out;
  out.values.assign(store.dim(), 0.0);
  std::map<std::string_view, size_t> tf;
  for (const Token& w : bag) ++tf[w];
  size_t covered = 0;
  for (const auto& [w, count] : tf) {
    auto vec = store.find(w);
    if (!vec) continue;
    covered += count;
    double weight = 0.0;
    if (auto t = ix.find_term(ix.term_key(w)))
      weight = tfidf_weight(ix, *t, static_cast<double>(count));
    // Every occurrence adds the same weighted vector.
    add_scaled(out.values, *vec, weight * static_cast<double>(count));
  }
  if (covered == 0) {
    out.empty_coverage = true;
    return out;
  }
  for (double& x : out.values) x /= static_cast<double>(covered);
  return out;
}

GazetteerLinker GazetteerLinker::load(std::istream& in) {
  GazetteerLinker g;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw ParseError(line_no, "gazetteer row must be surface<TAB>entityId");
    std::string id = line.substr(tab + 1);
    if (id.empty() || tokenize(std::string_view(line).substr(0, tab),
                               TokenPipelineConfig::raw())
                          .empty())
      throw ParseError(line_no, "empty surface or entity id");
    g.add(std::string_view(line).substr(0, tab), std::move(id));
  }
  return g;
}

void GazetteerLinker::add(std::string_view surface, std::string entity_id) {
  auto toks = tokenize(surface, TokenPipelineConfig::raw());
  if (toks.empty()) return;
  size_t node = 0;
  for (const Token& t : toks) {
    auto it = nodes_[node].next.find(t);
    if (it == nodes_[node].next.end()) {
      nodes_.emplace_back();
      it = nodes_[node].next.emplace(t, nodes_.size() - 1).first;
    }
    node = it->second;
  }
  if (!nodes_[node].entity) {
    nodes_[node].entity = std::move(entity_id);
    ++size_;
  }
}

std::vector<EntityMention> GazetteerLinker::link(std::string_view text) const {
  auto toks = tokenize(text, TokenPipelineConfig::raw());
  std::map<std::string, uint32_t> counts;
  size_t i = 0;
  while (i < toks.size()) {
    size_t node = 0, best_len = 0;
    const std::string* best = nullptr;
    for (size_t j = i; j < toks.size(); ++j) {
      auto it = nodes_[node].next.find(toks[j]);
      if (it == nodes_[node].next.end()) break;
      node = it->second;
      if (nodes_[node].entity) {
        best = &*nodes_[node].entity;
        best_len = j - i + 1;
      }
    }
    if (best) {
      ++counts[*best];
      i += best_len;
    } else {
      ++i;
    }
  }
  std::vector<EntityMention> out;
  for (auto& [id, c] : counts) out.push_back({id, c});
  return out;
}

std::vector<EntityMention> CachingLinker::link(std::string_view text) const {
  std::string key(text);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  auto mentions = inner_.link(text);
  std::lock_guard<std::mutex> lock(mu_);
  return cache_.emplace(std::move(key), std::move(mentions)).first->second;
}

EntityStats EntityStats::load(std::istream& in) {
  EntityStats s;
  std::string line;
  size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(line_no, "expected key<TAB>count");
    std::string key = line.substr(0, tab), num = line.substr(tab + 1);
    uint64_t v = 0;
    auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
    if (ec != std::errc() || p != num.data() + num.size())
      throw ParseError(line_no, "bad count \"" + num + "\"");
    if (!header) {
      if (key != "Ndocs") throw ParseError(line_no, "first row must be Ndocs<TAB>n");
      s.n_docs = v;
      header = true;
      continue;
    }
    if (v > s.n_docs) throw ParseError(line_no, "link frequency exceeds Ndocs");
    if (!s.link_doc_freq.emplace(key, v).second)
      throw ParseError(line_no, "entity \"" + key + "\" repeated");
  }
  if (!header) throw ParseError(0, "entity stats file has no Ndocs header");
  return s;
}

EntityStats EntityStats::from_corpus(const Corpus& corpus, const EntityLinker& linker) {
  EntityStats s;
  s.n_docs = corpus.paragraphs.size();
  for (const auto& [id, p] : corpus.paragraphs)
    for (const EntityMention& m : linker.link(p.text)) ++s.link_doc_freq[m.entity_id];
  return s;
}

double EntityStats::idf(std::string_view entity_id) const {
  auto it = link_doc_freq.find(std::string(entity_id));
  if (it == link_doc_freq.end() || it->second == 0 || n_docs == 0) return 0.0;
  return std::log(static_cast<double>(n_docs) / static_cast<double>(it->second));
}

DenseVector entity_vector(std::span<const EntityMention> mentions,
                          const EmbeddingStore& store, const EntityStats& stats) {
  DenseVector out;
  out.values.assign(store.dim(), 0.0);
  size_t distinct = 0;
  for (const EntityMention& m : mentions) {
    auto vec = store.find(m.entity_id);
    if (!vec || m.count == 0) continue;
    ++distinct;
    const double w = (1.0 + std::log(static_cast<double>(m.count))) * stats.idf(m.entity_id);
    add_scaled(out.values, *vec, w);
  }
  if (distinct == 0) {
    out.empty_coverage = true;
    return out;
  }
  for (double& x : out.values) x /= static_cast<double>(distinct);
  return out;
}

double cosine(const SparseVector& a, const SparseVector& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

double cosine(const DenseVector& a, const DenseVector& b) {
  const double d = a.dot(b);
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return d / (na * nb);
}

double cosine(const AnyVector& a, const AnyVector& b) {
  if (a.index() != b.index())
    throw std::invalid_argument("cosine between sparse and dense vectors");
  if (a.index() == 0) return cosine(std::get<0>(a), std::get<0>(b));
  return cosine(std::get<1>(a), std::get<1>(b));
}

AnyVector mix(const AnyVector& a, const AnyVector& b, double lambda) {
  if (a.index() != b.index())
    throw std::invalid_argument("mixing sparse and dense vectors");
  if (a.index() == 0) {
    const auto& x = std::get<0>(a);
    const auto& y = std::get<0>(b);
    const double cx = lambda * inv_norm(x.norm()), cy = (1.0 - lambda) * inv_norm(y.norm());
    std::map<TermId, double> acc;
    for (const auto& [t, w] : x.entries) acc[t] += cx * w;
    for (const auto& [t, w] : y.entries) acc[t] += cy * w;
    SparseVector out;
    for (const auto& [t, w] : acc)
      if (w != 0.0) out.entries.emplace_back(t, w);
    return out;
  }
  const auto& x = std::get<1>(a);
  const auto& y = std::get<1>(b);
  if (x.dim() != y.dim()) throw std::invalid_argument("mixing vectors of different dimension");
  const double cx = lambda * inv_norm(x.norm()), cy = (1.0 - lambda) * inv_norm(y.norm());
  DenseVector out;
  out.values.resize(x.dim());
  for (size_t i = 0; i < x.dim(); ++i) out.values[i] = cx * x.values[i] + cy * y.values[i];
  out.empty_coverage = x.empty_coverage && y.empty_coverage;
  return out;
}

AnyVector centroid(std::span<const AnyVector> vectors) {
  if (vectors.empty()) throw std::invalid_argument("centroid of no vectors");
  const double inv_n = 1.0 / static_cast<double>(vectors.size());
  if (vectors[0].index() == 0) {
    std::map<TermId, double> acc;
    for (const AnyVector& v : vectors) {
      if (v.index() != 0) throw std::invalid_argument("centroid over mixed kinds");
      const auto& s = std::get<0>(v);
      for (const auto& [t, w] : scaled(s, inv_norm(s.norm()) * inv_n).entries) acc[t] += w;
    }
    SparseVector out;
    for (const auto& [t, w] : acc)
      if (w != 0.0) out.entries.emplace_back(t, w);
    return out;
  }
  DenseVector out;
  out.values.assign(std::get<1>(vectors[0]).dim(), 0.0);
  out.empty_coverage = true;
  for (const AnyVector& v : vectors) {
    if (v.index() != 1) throw std::invalid_argument("centroid over mixed kinds");
    const auto& d = std::get<1>(v);
    if (d.dim() != out.dim()) throw std::invalid_argument("centroid over mixed dimensions");
    const double c = inv_norm(d.norm()) * inv_n;
    for (size_t i = 0; i < d.dim(); ++i) out.values[i] += c * d.values[i];
    out.empty_coverage = out.empty_coverage && d.empty_coverage;
  }
  return out;
}

AnyVector VectorSpace::terms_vector(std::span<const WeightedTerm>) const {
  throw std::logic_error(name() + " space has no term representation");
}

AnyVector VectorSpace::entities_vector(std::span<const WeightedEntity>) const {
  throw std::logic_error(name() + " space has no entity representation");
}

AnyVector TfidfSpace::text_vector(std::string_view text) const {
  return tfidf_vector(ix_, ix_.analyze(text));
}

AnyVector TfidfSpace::terms_vector(std::span<const WeightedTerm> terms) const {
  std::map<TermId, double> acc;
  for (const WeightedTerm& wt : terms)
    if (auto t = ix_.find_term(wt.term)) acc[*t] += wt.weight;
  SparseVector v;
  for (const auto& [t, w] : acc)
    if (w != 0.0) v.entries.emplace_back(t, w);
  v.normalize();
  return v;
}

WordEmbeddingSpace::WordEmbeddingSpace(const Index& ix, const EmbeddingStore& store,
                                       const Corpus& corpus)
    : ix_(ix), store_(store) {
  surface_cfg_ = ix.config();
  surface_cfg_.stem = false;
  std::unordered_map<std::string, std::map<std::string, size_t>> counts;
  for (const auto& [id, p] : corpus.paragraphs)
    for (const Token& w : tokenize(p.text, surface_cfg_))
      if (store.contains(w)) ++counts[ix.term_key(w)][w];
  for (auto& [term, forms] : counts) {
    const std::string* best = nullptr;
    size_t best_n = 0;
    for (const auto& [w, n] : forms)
      if (n > best_n) {
        best = &w;
        best_n = n;
      }
    surface_.emplace(term, *best);
  }
}

std::optional<std::string> WordEmbeddingSpace::surface_of(std::string_view term) const {
  auto it = surface_.find(std::string(term));
  if (it != surface_.end()) return it->second;
  if (store_.contains(term)) return std::string(term);
  return std::nullopt;
}

AnyVector WordEmbeddingSpace::text_vector(std::string_view text) const {
  return carrank::text_vector(tokenize(text, surface_cfg_), store_, ix_);
}

AnyVector WordEmbeddingSpace::terms_vector(std::span<const WeightedTerm> terms) const {
  DenseVector out;
  out.values.assign(store_.dim(), 0.0);
  out.empty_coverage = true;
  for (const WeightedTerm& wt : terms) {
    auto s = surface_of(wt.term);
    if (!s) continue;
    add_scaled(out.values, *store_.find(*s), wt.weight);
    out.empty_coverage = false;
  }
  return out;
}

AnyVector EntitySpace::text_vector(std::string_view text) const {
  return entity_vector(linker_.link(text), store_, stats_);
}

AnyVector EntitySpace::entities_vector(std::span<const WeightedEntity> entities) const {
  DenseVector out;
  out.values.assign(store_.dim(), 0.0);
  out.empty_coverage = true;
  for (const WeightedEntity& we : entities) {
    auto vec = store_.find(we.entity_id);
    if (!vec) continue;
    add_scaled(out.values, *vec, we.weight);
    out.empty_coverage = false;
  }
  return out;
}

}  // namespace carrank
