#include "carrank/expansion.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace carrank {

namespace {

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("lambda must be in [0, 1]");
}

// Top fb_docs LM documents with P(q|d) normalized over the set.
std::vector<std::pair<DocId, double>> feedback_docs(const Index& ix,
                                                    const HeadingQuery& q,
                                                    size_t fb_docs, double mu) {
  if (fb_docs == 0) throw std::invalid_argument("fb-docs must be >= 1");
  std::vector<std::pair<DocId, double>> out;
  WeightedQuery wq = ix.resolve(q.terms);
  if (wq.terms.empty()) return out;
  std::vector<TermId> pool = wq.term_ids();
  std::vector<std::pair<DocId, double>> scored;
  for (DocId d : matching_docs(ix, pool))
    scored.emplace_back(d, lm_dirichlet_score(ix, wq, d, mu));
  out = top_k(std::move(scored), fb_docs);
  if (out.empty()) return out;
  const double top = out.front().second;
  double z = 0.0;
  for (auto& [d, s] : out) {
    s = std::exp(s - top);
    z += s;
  }
  for (auto& [d, s] : out) s /= z;
  return out;
}

template <class T, class Key>
std::vector<T> top_normalized(std::map<std::string, double> acc, size_t k, Key make) {
  std::vector<std::pair<std::string, double>> v(acc.begin(), acc.end());
  std::stable_sort(v.begin(), v.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (v.size() > k) v.resize(k);
  double z = 0.0;
  for (const auto& [key, w] : v) z += w;
  std::vector<T> out;
  if (z <= 0.0) return out;
  for (auto& [key, w] : v)
    if (w > 0.0) out.push_back(make(std::move(key), w / z));
  return out;
}

}  // namespace

std::vector<WeightedTerm> rm1_terms(const Index& ix, const HeadingQuery& q,
                                    size_t fb_docs, size_t fb_terms, double mu) {
  if (fb_terms == 0) throw std::invalid_argument("fb-terms must be >= 1");
  auto docs = feedback_docs(ix, q, fb_docs, mu);
  std::set<std::string_view> query_terms(q.terms.begin(), q.terms.end());
  std::map<std::string, double> acc;
  for (const auto& [d, pq] : docs) {
    const double len = ix.doc_length(d);
    for (const TermCount& c : ix.doc_terms(d)) {
      const std::string& t = ix.term(c.term);
      if (query_terms.count(t)) continue;
      acc[t] += pq * c.tf / len;
    }
  }
  return top_normalized<WeightedTerm>(std::move(acc), fb_terms, [](std::string k, double w) {
    return WeightedTerm{std::move(k), w};
  });
}

std::vector<WeightedEntity> rm1_entities(const Index& ix, const Corpus& corpus,
                                         const HeadingQuery& q,
                                         const EntityLinker& linker, size_t fb_docs,
                                         size_t fb_entities, double mu,
                                         std::vector<std::string>* failed) {
  if (fb_entities == 0) throw std::invalid_argument("fb-entities must be >= 1");
  auto docs = feedback_docs(ix, q, fb_docs, mu);
  std::map<std::string, double> acc;
  for (const auto& [d, pq] : docs) {
    const std::string& pid = ix.paragraph_id(d);
    std::vector<EntityMention> mentions;
    try {
      mentions = linker.link(corpus.paragraph(pid).text);
    } catch (const LinkerUnavailable&) {
      if (failed) failed->push_back(pid);
      continue;
    }
    for (const EntityMention& m : mentions) acc[m.entity_id] += m.count * pq;
  }
  return top_normalized<WeightedEntity>(std::move(acc), fb_entities,
                                        [](std::string k, double w) {
                                          return WeightedEntity{std::move(k), w};
                                        });
}

ExpandedQuery expand_rm3(const HeadingQuery& q, std::vector<WeightedTerm> terms,
                         double lambda) {
  check_lambda(lambda);
  ExpandedQuery eq;
  eq.original = q;
  eq.added_terms = std::move(terms);
  eq.lambda = lambda;
  return eq;
}

ExpandedQuery expand_entities(const HeadingQuery& q,
                              std::vector<WeightedEntity> entities, double lambda) {
  check_lambda(lambda);
  ExpandedQuery eq;
  eq.original = q;
  eq.added_entities = std::move(entities);
  eq.lambda = lambda;
  return eq;
}

WeightedQuery rm3_weighted_query(const Index& ix, const ExpandedQuery& eq) {
  std::map<TermId, double> acc;
  const auto& terms = eq.original.terms;
  for (const Token& t : terms)
    if (auto id = ix.find_term(t)) acc[*id] += eq.lambda / static_cast<double>(terms.size());
  for (const WeightedTerm& wt : eq.added_terms)
    if (auto id = ix.find_term(wt.term)) acc[*id] += (1.0 - eq.lambda) * wt.weight;
  WeightedQuery q;
  for (const auto& [t, w] : acc)
    if (w > 0.0) q.terms.emplace_back(t, w);
  return q;
}

AnyVector expanded_query_vector(const VectorSpace& space, const ExpandedQuery& eq) {
  AnyVector base = space.query_vector(eq.original);
  if (eq.expansion_vector) return mix(base, *eq.expansion_vector, eq.lambda);
  if (!eq.added_terms.empty())
    return mix(base, space.terms_vector(eq.added_terms), eq.lambda);
  if (!eq.added_entities.empty())
    return mix(base, space.entities_vector(eq.added_entities), eq.lambda);
  return base;
}

const std::vector<SupportEntry>* HeadingSupportIndex::find(std::string_view key) const {
  auto it = entries.find(std::string(key));
  return it == entries.end() ? nullptr : &it->second;
}

HeadingSupportIndex build_heading_support(const Corpus& corpus,
                                          const FoldAssignment& folds,
                                          int held_out) {
  HeadingSupportIndex idx;
  idx.held_out = held_out;
  for (const Page& page : corpus.pages) {
    auto it = folds.fold_of_page.find(page.id);
    if (it == folds.fold_of_page.end())
      throw std::invalid_argument("page \"" + page.id + "\" has no fold");
    const int fold = it->second;
    if (fold == held_out) continue;
    for_each_section(page, [&](const Page&, const Section& s) {
      std::string key = heading_key(s.heading);
      if (key.empty()) return;
      for (const std::string& pid : s.paragraphs)
        idx.entries[key].push_back({page.id, pid, fold});
    });
  }
  for (auto& [key, list] : idx.entries) std::sort(list.begin(), list.end());
  return idx;
}

HeadingSupportIndex build_heading_support(const Corpus& corpus) {
  FoldAssignment all;
  all.k = 1;
  for (const Page& p : corpus.pages) all.fold_of_page[p.id] = 0;
  return build_heading_support(corpus, all, -1);
}

ExpandedQuery rocchio_expand(const HeadingQuery& q, const HeadingSupportIndex& support,
                             size_t max_passages, const VectorSpace& space,
                             const Corpus& support_corpus, double lambda) {
  if (max_passages == 0) throw std::invalid_argument("rocchio-passages must be >= 1");
  check_lambda(lambda);
  ExpandedQuery eq;
  eq.original = q;
  eq.lambda = lambda;
  const auto* list = support.find(heading_key(q.heading));
  if (!list) return eq;
  std::vector<AnyVector> vectors;
  for (const SupportEntry& e : *list) {
    if (eq.support_used.size() == max_passages) break;
    if (e.page_id == q.page_id || e.fold == support.held_out) continue;
    if (std::find(eq.support_used.begin(), eq.support_used.end(), e.paragraph_id) !=
        eq.support_used.end())
      continue;
    eq.support_used.push_back(e.paragraph_id);
    vectors.push_back(space.text_vector(support_corpus.paragraph(e.paragraph_id).text));
  }
  if (!vectors.empty()) eq.expansion_vector = centroid(vectors);
  return eq;
}

}  // namespace carrank
