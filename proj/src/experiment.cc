#include "carrank/experiment.h"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

namespace carrank {

namespace {

template <class Fn>
auto in_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw UsageError(stage + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(stage + ": " + e.what());
  }
}

bool is_cosine(Method m) { return m != Method::Bm25; }

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Bm25: return "bm25";
    case Method::TfidfCs: return "tfidf-cs";
    case Method::GloveCs: return "glove-cs";
    case Method::EntityCs: return "entity-cs";
  }
  return "?";
}

std::string_view to_string(Expansion e) {
  switch (e) {
    case Expansion::None: return "none";
    case Expansion::Rm1: return "rm1";
    case Expansion::EntRm1: return "ent-rm1";
    case Expansion::Rocchio: return "rocchio";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  for (Method m : {Method::Bm25, Method::TfidfCs, Method::GloveCs, Method::EntityCs})
    if (to_string(m) == s) return m;
  throw UsageError("unknown method \"" + std::string(s) +
                   "\" (expected bm25, tfidf-cs, glove-cs or entity-cs)");
}

Expansion parse_expansion(std::string_view s) {
  for (Expansion e : {Expansion::None, Expansion::Rm1, Expansion::EntRm1, Expansion::Rocchio})
    if (to_string(e) == s) return e;
  throw UsageError("unknown expansion \"" + std::string(s) +
                   "\" (expected none, rm1, ent-rm1 or rocchio)");
}

void check_combination(Method m, Expansion e) {
  const std::string pair = std::string(to_string(m)) + " + " + std::string(to_string(e));
  if (e == Expansion::None) return;
  if (m == Method::Bm25 && e != Expansion::Rm1)
    throw UsageError(pair + ": bm25 scores terms, so only rm1 term feedback applies");
  if (e == Expansion::EntRm1 && m != Method::EntityCs)
    throw UsageError(pair + ": entity feedback needs the entity space (entity-cs)");
  if (e == Expansion::Rm1 && m == Method::EntityCs)
    throw UsageError(pair + ": entity-cs has no term space; use ent-rm1");
}

RunParams parse_scorer(std::string_view spec, const RunParams& base) {
  RunParams p = base;
  auto plus = spec.find('+');
  p.method = parse_method(spec.substr(0, plus));
  p.expansion =
      plus == std::string_view::npos ? Expansion::None : parse_expansion(spec.substr(plus + 1));
  check_combination(p.method, p.expansion);
  return p;
}

struct Ranker::Impl {
  Resources res;
  RunParams p;
  std::unique_ptr<EntityStats> own_stats;
  std::unique_ptr<VectorSpace> space;
  // Dense spaces only: one vector per indexed paragraph.
  std::vector<AnyVector> doc_vectors;
  std::vector<HeadingSupportIndex> fold_support;
  std::optional<HeadingSupportIndex> whole_support;
  std::vector<std::string> warnings;

  const HeadingSupportIndex* support_for(const HeadingQuery& q) const {
    if (whole_support) return &*whole_support;
    if (fold_support.empty()) return nullptr;
    return &fold_support.at(static_cast<size_t>(res.folds->fold(q.page_id)));
  }

  ExpandedQuery expand(const HeadingQuery& q) const {
    const Index& ix = *res.index;
    switch (p.expansion) {
      case Expansion::None: return ExpandedQuery{q, {}, {}, std::nullopt, 1.0, {}};
      case Expansion::Rm1:
        return expand_rm3(q, rm1_terms(ix, q, p.fb_docs, p.fb_terms, p.mu), p.lambda);
      case Expansion::EntRm1:
        return expand_entities(
            q, rm1_entities(ix, *res.corpus, q, *res.linker, p.fb_docs, p.fb_entities, p.mu),
            p.lambda);
      case Expansion::Rocchio: {
        const HeadingSupportIndex* s = support_for(q);
        if (!s) return ExpandedQuery{q, {}, {}, std::nullopt, 1.0, {}};
        return rocchio_expand(q, *s, p.rocchio_passages, *space, *res.support_corpus, p.lambda);
      }
    }
    return {};
  }
};

Ranker::Ranker(const Resources& res, const RunParams& params) : impl_(std::make_unique<Impl>()) {
  Impl& m = *impl_;
  m.res = res;
  m.p = params;
  if (!res.corpus || !res.index) throw UsageError("a corpus and an index are required");
  check_combination(params.method, params.expansion);
  if (params.k == 0) throw UsageError("k must be >= 1");
  if (!(params.lambda >= 0.0 && params.lambda <= 1.0))
    throw UsageError("lambda must be in [0, 1]");
  if (!(params.mu > 0.0)) throw UsageError("mu must be > 0");
  if (params.fb_docs == 0 || params.fb_terms == 0 || params.fb_entities == 0 ||
      params.rocchio_passages == 0)
    throw UsageError("feedback and rocchio counts must be >= 1");
  try {
    params.bm25.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Index& ix = *res.index;

  switch (params.method) {
    case Method::Bm25: break;
    case Method::TfidfCs: m.space = std::make_unique<TfidfSpace>(ix); break;
    case Method::GloveCs:
      if (!res.word_embeddings) throw UsageError("glove-cs needs --embeddings");
      m.space = std::make_unique<WordEmbeddingSpace>(ix, *res.word_embeddings, *res.corpus);
      break;
    case Method::EntityCs: {
      if (!res.entity_embeddings) throw UsageError("entity-cs needs --entity-embeddings");
      if (!res.linker) throw UsageError("entity-cs needs --gazetteer");
      const EntityStats* stats = res.entity_stats;
      if (!stats) {
        m.own_stats = std::make_unique<EntityStats>(EntityStats::from_corpus(*res.corpus, *res.linker));
        stats = m.own_stats.get();
      }
      m.space = std::make_unique<EntitySpace>(*res.linker, *res.entity_embeddings, *stats);
      break;
    }
  }
  if (params.expansion == Expansion::EntRm1 && !res.linker)
    throw UsageError("ent-rm1 needs --gazetteer");

  if (params.method == Method::GloveCs || params.method == Method::EntityCs) {
    m.doc_vectors.reserve(ix.doc_count());
    for (DocId d = 0; d < ix.doc_count(); ++d) {
      auto it = res.corpus->paragraphs.find(ix.paragraph_id(d));
      if (it == res.corpus->paragraphs.end())
        throw UsageError("indexed paragraph \"" + ix.paragraph_id(d) +
                         "\" is missing from the corpus");
      m.doc_vectors.push_back(m.space->text_vector(it->second.text));
    }
  }

  if (params.expansion == Expansion::Rocchio) {
    if (!m.res.support_corpus) m.res.support_corpus = res.corpus;
    if (m.res.support_corpus != res.corpus) {
      m.whole_support = build_heading_support(*m.res.support_corpus);
    } else if (res.folds) {
      for (int f = 0; f < res.folds->k; ++f)
        m.fold_support.push_back(build_heading_support(*res.corpus, *res.folds, f));
    } else {
      m.warnings.push_back("rocchio: no fold assignment for the corpus, so no support index; "
                           "ranking with the query only");
    }
  }
}

Ranker::~Ranker() = default;
Ranker::Ranker(Ranker&&) noexcept = default;

const RunParams& Ranker::params() const { return impl_->p; }
const std::vector<std::string>& Ranker::warnings() const { return impl_->warnings; }

Ranking Ranker::rank(const HeadingQuery& q, const CandidateSet* candidates) const {
  const Impl& m = *impl_;
  const Index& ix = *m.res.index;
  std::vector<DocId> docs;
  if (candidates) {
    for (const std::string& pid : candidates->paragraph_ids) {
      auto d = ix.find_doc(pid);
      if (!d)
        throw std::invalid_argument("candidate paragraph \"" + pid + "\" for query \"" +
                                    q.query_id + "\" is not in the index");
      docs.push_back(*d);
    }
  }

  std::vector<std::pair<DocId, double>> scored;
  if (!is_cosine(m.p.method)) {
    WeightedQuery wq = m.p.expansion == Expansion::Rm1
                           ? rm3_weighted_query(ix, m.expand(q))
                           : ix.resolve(q.terms);
    if (!candidates) docs = matching_docs(ix, wq.term_ids());
    for (DocId d : docs) scored.emplace_back(d, bm25_score(ix, wq, d, m.p.bm25));
  } else {
    AnyVector qv = expanded_query_vector(*m.space, m.expand(q));
    if (m.p.method == Method::TfidfCs) {
      if (!candidates) {
        std::vector<TermId> pool;
        for (const auto& [t, w] : std::get<SparseVector>(qv).entries) pool.push_back(t);
        docs = matching_docs(ix, pool);
      }
      for (DocId d : docs) scored.emplace_back(d, cosine(qv, AnyVector(tfidf_vector(ix, d))));
    } else {
      if (!candidates)
        for (DocId d = 0; d < ix.doc_count(); ++d) docs.push_back(d);
      for (DocId d : docs) scored.emplace_back(d, cosine(qv, m.doc_vectors[d]));
    }
  }

  Ranking r;
  r.query_id = q.query_id;
  const size_t depth = candidates ? scored.size() : m.p.k;
  for (const auto& [d, s] : top_k(std::move(scored), depth))
    r.entries.push_back({ix.paragraph_id(d), s});
  return r;
}

std::vector<Ranking> run_queries(const Ranker& ranker, std::span<const HeadingQuery> queries,
                                 const std::map<std::string, CandidateSet>* candidates) {
  std::vector<const HeadingQuery*> todo;
  std::vector<const CandidateSet*> sets;
  for (const HeadingQuery& q : queries) {
    const CandidateSet* c = nullptr;
    if (candidates) {
      auto it = candidates->find(q.query_id);
      if (it == candidates->end()) continue;
      c = &it->second;
    }
    todo.push_back(&q);
    sets.push_back(c);
  }
  std::vector<Ranking> out(todo.size());
  std::vector<std::exception_ptr> errors(todo.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next.fetch_add(1)) < todo.size();) {
      try {
        out[i] = ranker.rank(*todo[i], sets[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const size_t n_threads =
      std::min<size_t>(std::max(1u, std::thread::hardware_concurrency()), todo.size());
  std::vector<std::thread> threads;
  for (size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

namespace {

std::vector<FeatureVector> drop_columns(const std::vector<FeatureVector>& rows,
                                        const std::vector<size_t>& keep) {
  std::vector<FeatureVector> out;
  out.reserve(rows.size());
  for (const FeatureVector& r : rows) {
    FeatureVector v{r.query_id, r.paragraph_id, {}};
    for (size_t k : keep) v.features.push_back(r.features[k]);
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

PipelineResult run_pipeline(const Resources& res, std::span<const HeadingQuery> queries,
                            const Qrels& qrels, const PipelineConfig& cfg) {
  PipelineResult out;
  if (!res.index) throw UsageError("pipeline: an index is required");
  if (cfg.scorers.empty() && cfg.external.empty())
    throw UsageError("pipeline: no scorers");

  std::map<std::string, CandidateSet> by_query;
  in_stage("candidates", [&] {
    if (cfg.k == 0) throw std::invalid_argument("k must be >= 1");
    for (const HeadingQuery& q : queries) {
      CandidateSet c = generate_candidates(*res.index, q, cfg.k, cfg.base.bm25);
      if (c.size() == 0) continue;
      by_query.emplace(q.query_id, c);
      out.candidates.push_back(std::move(c));
    }
    return 0;
  });

  for (const std::string& spec : cfg.scorers) {
    in_stage("scorer " + spec, [&] {
      Ranker ranker(res, parse_scorer(spec, cfg.base));
      for (const auto& w : ranker.warnings()) out.warnings.push_back(spec + ": " + w);
      out.feature_runs.push_back(run_queries(ranker, queries, &by_query));
      return 0;
    });
    out.feature_names.push_back(spec);
  }
  for (const auto& [name, runs] : cfg.external) {
    std::vector<Ranking> restricted;
    for (const Ranking& r : runs) {
      auto it = by_query.find(r.query_id);
      if (it == by_query.end()) continue;
      std::set<std::string> allowed(it->second.paragraph_ids.begin(),
                                    it->second.paragraph_ids.end());
      Ranking kept{r.query_id, {}};
      for (const ScoredDoc& e : r.entries)
        if (allowed.count(e.paragraph_id)) kept.entries.push_back(e);
      restricted.push_back(std::move(kept));
    }
    out.feature_runs.push_back(std::move(restricted));
    out.feature_names.push_back(name);
  }
  for (const auto& runs : out.feature_runs) out.feature_metrics.push_back(evaluate_run(runs, qrels));

  std::vector<FeatureVector> rows;
  in_stage("features", [&] {
    rows = assemble_features(out.feature_runs);
    return 0;
  });
  out.fused = in_stage("ltr", [&] {
    return cross_validate(rows, qrels, cfg.ltr_folds, cfg.ca, out.feature_names);
  });
  out.fused_metrics = evaluate_run(out.fused.rankings, qrels);
  for (const FoldReport& f : out.fused.folds)
    if (!f.trained)
      out.warnings.push_back("ltr: fold " + std::to_string(f.fold) +
                             " had no positive training rows; scored with an all-ones model");

  if (!cfg.without.empty()) {
    std::vector<size_t> keep;
    for (const auto& w : cfg.without)
      if (std::find(out.feature_names.begin(), out.feature_names.end(), w) ==
          out.feature_names.end())
        throw UsageError("ablation: no feature named \"" + w + "\"");
    for (size_t i = 0; i < out.feature_names.size(); ++i)
      if (std::find(cfg.without.begin(), cfg.without.end(), out.feature_names[i]) ==
          cfg.without.end()) {
        keep.push_back(i);
        out.ablated_names.push_back(out.feature_names[i]);
      }
    if (keep.empty()) throw UsageError("ablation: --without removes every feature");
    auto ablated_rows = drop_columns(rows, keep);
    out.ablated = in_stage("ltr (ablated)", [&] {
      return cross_validate(ablated_rows, qrels, cfg.ltr_folds, cfg.ca, out.ablated_names);
    });
    out.ablated_metrics = evaluate_run(out.ablated->rankings, qrels);
    if (out.fused_metrics.evaluated() >= 2)
      out.ablation_test = paired_t_test(per_query_ap(*out.ablated_metrics),
                                        per_query_ap(out.fused_metrics));
  }
  return out;
}

}  // namespace carrank
