// Acceptance report: one PASS/FAIL/SKIP line per criterion.
//
//   acceptance [--expect-red N]... [--car-corpus FILE]
//
// Exits 0 when the set of failing criteria equals the --expect-red set, so a
// known red criterion stays visible without hiding new regressions.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "carrank/experiment.h"
#include "carrank/random.h"
#include "carrank/synth.h"

using namespace carrank;

namespace {

struct Outcome {
  enum { Pass, Fail, Skip } status;
  std::string detail;
};

Outcome pass(std::string d) { return {Outcome::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::Fail, std::move(d)}; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1: metrics against a definition-level evaluator ----

struct HandMetrics {
  double ap, rprec, rr;
};

HandMetrics hand_metrics(const std::vector<std::string>& ranked, const std::set<std::string>& rel) {
  HandMetrics m{0, 0, 0};
  const size_t R = rel.size();
  size_t hits = 0;
  for (size_t i = 0; i < ranked.size(); ++i) {
    if (!rel.count(ranked[i])) continue;
    ++hits;
    m.ap += static_cast<double>(hits) / static_cast<double>(i + 1);
    if (m.rr == 0) m.rr = 1.0 / static_cast<double>(i + 1);
    if (i < R) m.rprec += 1.0 / static_cast<double>(R);
  }
  m.ap /= static_cast<double>(R);
  return m;
}

Outcome metric_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  {
    Ranking r{"q", {{"a", 3}, {"b", 2}, {"c", 1}}};
    Qrels q;
    q.entries["q"] = {{"a", 1}, {"c", 1}};
    const double ap = evaluate_run(std::vector<Ranking>{r}, q).map;
    if (std::fabs(ap - 0.8333333333333334) > 1e-9) return fail("two-relevant AP " + fmt("%.12g", ap));
  }
  const size_t fixtures = 40;
  for (size_t f = 0; f < fixtures; ++f) {
    Rng rng(stable_hash(f, "metric-oracle"));
    Qrels qrels;
    std::vector<Ranking> run;
    double map = 0, rprec = 0, mrr = 0;
    size_t evaluated = 0;
    const size_t queries = 1 + rng.below(8);
    for (size_t q = 0; q < queries; ++q) {
      const std::string qid = "q" + std::to_string(q);
      const size_t pool = 3 + rng.below(20);
      std::set<std::string> rel;
      for (size_t i = 0; i < pool; ++i)
        if (rng.below(3) == 0) rel.insert("d" + std::to_string(i));
      if (rng.below(5) == 0) rel.insert("unretrieved");
      for (const auto& d : rel) qrels.entries[qid][d] = 1;
      std::vector<std::string> ranked;
      for (size_t i = 0; i < pool; ++i) ranked.push_back("d" + std::to_string(i));
      rng.shuffle(ranked);
      ranked.resize(1 + rng.below(pool));
      Ranking r{qid, {}};
      for (size_t i = 0; i < ranked.size(); ++i)
        r.entries.push_back({ranked[i], static_cast<double>(ranked.size() - i)});
      if (rng.below(6) != 0) run.push_back(r);
      else ranked.clear();  // query missing from the run
      if (rel.empty()) continue;
      HandMetrics h = hand_metrics(ranked, rel);
      map += h.ap;
      rprec += h.rprec;
      mrr += h.rr;
      ++evaluated;
    }
    if (!evaluated) continue;
    MetricsReport rep = evaluate_run(run, qrels);
    worst = std::max({worst, std::fabs(rep.map - map / evaluated),
                      std::fabs(rep.r_prec - rprec / evaluated), std::fabs(rep.mrr - mrr / evaluated)});
  }
  const double secs = seconds_since(t0);
  const std::string d = std::to_string(fixtures) + " fixtures, max |diff| " + fmt("%.3g", worst) +
                        ", " + fmt("%.3f", secs) + " s";
  return worst <= 1e-9 && secs < 1.0 ? pass(d) : fail(d);
}

// ---- 2: top-k retrieval against exhaustive scoring ----

struct HandCollection {
  std::map<std::string, std::vector<std::string>> docs;
  std::map<std::string, size_t> df;
  double avg_len = 0;

  explicit HandCollection(const std::unordered_map<std::string, std::string>& texts) {
    for (const auto& [id, text] : texts) {
      std::istringstream in(text);
      auto& toks = docs[id];
      for (std::string w; in >> w;) toks.push_back(w);
      avg_len += static_cast<double>(toks.size());
      for (const auto& w : std::set<std::string>(toks.begin(), toks.end())) ++df[w];
    }
    avg_len /= static_cast<double>(docs.size());
  }

  static std::map<std::string, double> counts(const std::vector<std::string>& toks) {
    std::map<std::string, double> c;
    for (const auto& t : toks) ++c[t];
    return c;
  }

  double bm25(const std::vector<std::string>& q, const std::string& id) const {
    const auto tf = counts(docs.at(id));
    const double N = static_cast<double>(docs.size()), len = static_cast<double>(docs.at(id).size());
    double s = 0;
    for (const auto& t : q) {
      auto it = tf.find(t);
      if (it == tf.end()) continue;
      const double n = static_cast<double>(df.at(t));
      const double idf = std::log(1 + (N - n + 0.5) / (n + 0.5));
      s += idf * it->second * 2.2 / (it->second + 1.2 * (0.25 + 0.75 * len / avg_len));
    }
    return s;
  }

  std::map<std::string, double> tfidf(const std::vector<std::string>& toks) const {
    std::map<std::string, double> v;
    double norm = 0;
    for (const auto& [t, c] : counts(toks)) {
      auto it = df.find(t);
      if (it == df.end()) continue;
      const double w = (1 + std::log(c)) * std::log(static_cast<double>(docs.size()) / it->second);
      if (w == 0) continue;
      v[t] = w;
      norm += w * w;
    }
    for (auto& [t, w] : v) w /= std::sqrt(norm);
    return v;
  }

  double cosine(const std::vector<std::string>& q, const std::string& id) const {
    auto a = tfidf(q), b = tfidf(docs.at(id));
    double s = 0;
    for (const auto& [t, w] : a)
      if (b.count(t)) s += w * b.at(t);
    return s;
  }
};

Outcome retrieval_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  size_t queries = 0, mismatches = 0;
  for (uint64_t c = 0; c < 5; ++c) {
    Rng rng(stable_hash(c, "retrieval-oracle"));
    std::unordered_map<std::string, std::string> texts;
    const size_t n_docs = 200 + rng.below(801), vocab = 30 + rng.below(60);
    for (size_t d = 0; d < n_docs; ++d) {
      std::string t;
      const size_t len = 1 + rng.below(15);
      for (size_t i = 0; i < len; ++i) t += (i ? " " : "") + ("w" + std::to_string(rng.below(vocab)));
      char id[16];
      std::snprintf(id, sizeof id, "d%04zu", d);
      texts[id] = t;
    }
    Index ix = Index::build(texts, TokenPipelineConfig::raw());
    HandCollection hand(texts);
    for (int qi = 0; qi < 25; ++qi, ++queries) {
      std::vector<std::string> q;
      const size_t qlen = 1 + rng.below(4);
      for (size_t i = 0; i < qlen; ++i) q.push_back("w" + std::to_string(rng.below(vocab + 5)));
      const size_t k = 1 + rng.below(120);
      for (int scorer = 0; scorer < 2; ++scorer) {
        std::vector<std::pair<double, std::string>> all;
        for (const auto& [id, toks] : hand.docs) {
          if (std::none_of(q.begin(), q.end(), [&](const std::string& t) {
                return std::find(toks.begin(), toks.end(), t) != toks.end();
              }))
            continue;
          all.emplace_back(-(scorer ? hand.cosine(q, id) : hand.bm25(q, id)), id);
        }
        std::sort(all.begin(), all.end());
        if (all.size() > k) all.resize(k);
        Ranking got = scorer ? retrieve_tfidf_cosine(ix, q, k) : retrieve_bm25(ix, q, k);
        bool same = got.entries.size() == all.size();
        for (size_t i = 0; same && i < all.size(); ++i)
          same = got.entries[i].paragraph_id == all[i].second &&
                 std::fabs(got.entries[i].score + all[i].first) < 1e-9;
        mismatches += !same;
      }
    }
  }
  const double secs = seconds_since(t0);
  const std::string d = std::to_string(queries) + " queries x {bm25, tfidf-cosine}, " +
                        std::to_string(mismatches) + " mismatches, " + fmt("%.2f", secs) + " s";
  return mismatches == 0 && queries >= 100 && secs < 10.0 ? pass(d) : fail(d);
}

// ---- 3: formula spot checks ----

Outcome formula_checks() {
  Index one = Index::build(std::unordered_map<std::string, std::string>{{"p1", "a"}},
                           TokenPipelineConfig::raw());
  const double s = bm25_score(one, std::vector<Token>{"a"}, "p1");
  const bool bm25_ok = std::fabs(s - std::log(2.0)) <= 1e-12;

  Rng rng(17);
  Index ix = Index::build([&] {
    std::unordered_map<std::string, std::string> t;
    for (int d = 0; d < 300; ++d) {
      std::string s;
      for (int i = 0; i < 12; ++i) s += "w" + std::to_string(rng.below(50)) + " ";
      t["d" + std::to_string(d)] = s;
    }
    return t;
  }(), TokenPipelineConfig::raw());
  double worst_norm = 0;
  for (DocId d = 0; d < ix.doc_count(); ++d) {
    SparseVector v = tfidf_vector(ix, d);
    if (!v.empty()) worst_norm = std::max(worst_norm, std::fabs(v.norm() - 1.0));
  }
  const double cos = cosine(DenseVector{{1, 0}}, DenseVector{{1, 1}});
  const bool norms_ok = worst_norm <= 1e-9, cos_ok = std::fabs(cos - 0.70710678) <= 1e-8;
  const std::string d = "bm25 single-doc " + fmt("%.15f", s) + " vs ln 2 " +
                        fmt("%.15f", std::log(2.0)) + (bm25_ok ? "" : " (idf gives ln 4/3)") +
                        "; max |norm-1| " + fmt("%.2g", worst_norm) + "; cosine " + fmt("%.10f", cos);
  return bm25_ok && norms_ok && cos_ok ? pass(d) : fail(d);
}

// ---- 4: environments ----

Outcome environment_properties(const std::string& data_dir) {
  std::ifstream in(data_dir + "/corpus200.jsonl");
  if (!in) return fail("cannot read " + data_dir + "/corpus200.jsonl");
  Corpus c = parse_corpus(in);
  Qrels qrels = derive_qrels(c);
  std::map<std::string, std::string> page_of;
  std::map<std::string, size_t> page_size;
  for (const Page& p : c.pages)
    for_each_section(p, [&](const Page& pg, const Section& s) {
      for (const auto& pid : s.paragraphs)
        if (page_of.emplace(pid, pg.id).second) ++page_size[pg.id];
    });

  size_t missing = 0, over = 0, dup = 0;
  for (const CandidateSet& s : build_train_env(c, EnvSpec{})) {
    std::set<std::string> ids(s.paragraph_ids.begin(), s.paragraph_ids.end());
    dup += ids.size() != s.size();
    const auto rel = qrels.relevant(s.query_id);
    for (const auto& p : rel) missing += !ids.count(p);
    over += s.size() - rel.size() > 10 * rel.size();
  }
  size_t wrong_size = 0;
  double total = 0;
  auto test = build_test_env(c, 0);
  for (const CandidateSet& s : test) {
    const std::string page = s.query_id.substr(0, s.query_id.find('/'));
    wrong_size += s.size() != 2 * page_size.at(page);
    total += static_cast<double>(s.size());
  }
  const double mean = total / static_cast<double>(test.size());
  const std::string d = std::to_string(missing) + " positives missing, " + std::to_string(over) +
                        " headings over 5+5 per positive, " + std::to_string(dup) +
                        " with duplicates, " + std::to_string(wrong_size) +
                        " test sets not 2x article; mean test candidates " + fmt("%.2f", mean) +
                        " over " + std::to_string(test.size()) + " sections";
  return missing == 0 && over == 0 && dup == 0 && wrong_size == 0 && std::fabs(mean - 35) <= 5
             ? pass(d)
             : fail(d);
}

// ---- 5: expansion ----

Outcome expansion_properties(const SynthWorld& w) {
  const Index& ix = w.index;
  auto queries = build_queries(w.corpus, ix.config());
  double worst_sum = 0;
  size_t leaked = 0, nonempty = 0, order_changes = 0;
  TfidfSpace space(ix);
  for (const HeadingQuery& q : queries) {
    auto terms = rm1_terms(ix, q, 10, 10);
    if (terms.empty()) continue;
    ++nonempty;
    double sum = 0;
    for (const auto& t : terms) {
      sum += t.weight;
      leaked += std::count(q.terms.begin(), q.terms.end(), t.term) > 0;
    }
    worst_sum = std::max(worst_sum, std::fabs(sum - 1));
    ExpandedQuery eq = expand_rm3(q, terms, 1.0);
    Ranking plain = retrieve_bm25(ix, q.terms, 100);
    WeightedQuery wq = rm3_weighted_query(ix, eq);
    Ranking expanded = retrieve_topk(ix, wq.term_ids(), 100,
                                     [&](DocId d) { return bm25_score(ix, wq, d); });
    bool same = plain.entries.size() == expanded.entries.size();
    for (size_t i = 0; same && i < plain.entries.size(); ++i)
      same = plain.entries[i].paragraph_id == expanded.entries[i].paragraph_id;
    order_changes += !same;
  }

  std::map<std::string, CandidateSet> env;
  for (auto& s : build_test_env(w.corpus, 1)) env.emplace(s.query_id, std::move(s));
  Qrels qrels = derive_qrels(w.corpus);
  RunParams p;
  p.method = Method::TfidfCs;
  const double base = evaluate_run(run_queries(Ranker(w.resources(), p), queries, &env), qrels).map;
  p.expansion = Expansion::Rocchio;
  const double roc = evaluate_run(run_queries(Ranker(w.resources(), p), queries, &env), qrels).map;

  const std::string d = std::to_string(nonempty) + " RM1 lists, max |sum-1| " +
                        fmt("%.2g", worst_sum) + ", " + std::to_string(leaked) +
                        " query terms kept; lambda=1 order changes " +
                        std::to_string(order_changes) + "; tfidf MAP " + fmt("%.4f", base) +
                        " -> rocchio " + fmt("%.4f", roc);
  return nonempty > 0 && worst_sum <= 1e-9 && leaked == 0 && order_changes == 0 && roc > base
             ? pass(d)
             : fail(d);
}

// ---- 6: learning to rank ----

Outcome ltr_properties() {
  Rng rng(6);
  std::vector<FeatureVector> sep, noisy;
  Qrels sep_q, noisy_q;
  for (int q = 0; q < 30; ++q) {
    const std::string qid = "q" + std::to_string(q);
    for (int i = 0; i < 12; ++i) {
      const std::string pid = "p" + std::to_string(10 + i);
      const bool rel = i % 4 == 1 || rng.below(6) == 0;
      if (rel) sep_q.entries[qid][pid] = 1;
      sep.push_back({qid, pid, {rng.uniform(), rel ? 1.0 : 0.0, rng.uniform()}});
      const bool nrel = rng.below(4) == 0;
      if (nrel) noisy_q.entries[qid][pid] = 1;
      noisy.push_back({qid, pid,
                       {(nrel ? 0.3 : 0.0) + rng.uniform(), (nrel ? 0.2 : 0.0) + rng.uniform(),
                        (nrel ? 0.4 : 0.0) + 1.5 * rng.uniform()}});
    }
  }
  CaConfig cfg;
  cfg.seed = 21;
  const double sep_map = training_map(train_coordinate_ascent(sep, sep_q, cfg), sep, sep_q);

  LinearModel fused = train_coordinate_ascent(noisy, noisy_q, cfg);
  const double fused_map = training_map(fused, noisy, noisy_q);
  double best_single = 0;
  for (size_t f = 0; f < 3; ++f) {
    LinearModel unit{{"a", "b", "c"}, {0, 0, 0}};
    unit.weights[f] = 1;
    best_single = std::max(best_single, training_map(unit, noisy, noisy_q));
  }
  const bool reproducible = train_coordinate_ascent(noisy, noisy_q, cfg).weights == fused.weights;

  size_t leaks = 0, retrain_mismatch = 0;
  CaConfig cv_cfg;
  cv_cfg.restarts = 1;
  CvResult cv = cross_validate(noisy, noisy_q, 5, cv_cfg);
  std::set<std::string> covered;
  for (const FoldReport& f : cv.folds) {
    std::set<std::string> train(f.train_queries.begin(), f.train_queries.end());
    for (const auto& q : f.test_queries) {
      leaks += train.count(q);
      covered.insert(q);
    }
    // Retraining on the training queries alone must give the fold's model.
    std::vector<FeatureVector> rows;
    for (const auto& r : noisy)
      if (train.count(r.query_id)) rows.push_back(r);
    retrain_mismatch += train_coordinate_ascent(rows, noisy_q, cv_cfg).weights != f.model.weights;
  }
  const std::string d = "separable MAP " + fmt("%.4f", sep_map) + "; fused " +
                        fmt("%.4f", fused_map) + " vs best single " + fmt("%.4f", best_single) +
                        "; reseeded weights " + (reproducible ? "identical" : "differ") + "; CV " +
                        std::to_string(leaks) + " leaks, " + std::to_string(retrain_mismatch) +
                        " fold models not reproducible from training queries";
  return sep_map == 1.0 && fused_map >= best_single && reproducible && leaks == 0 &&
                 retrain_mismatch == 0 && covered.size() == 30
             ? pass(d)
             : fail(d);
}

// ---- 7: significance ----

Outcome significance() {
  // Paired scores from a textbook-style n = 10 example.
  const double a[] = {0.20, 0.35, 0.10, 0.42, 0.30, 0.55, 0.25, 0.38, 0.15, 0.40};
  const double b[] = {0.30, 0.40, 0.22, 0.44, 0.38, 0.52, 0.34, 0.42, 0.26, 0.46};
  std::map<std::string, double> ma, mb;
  for (int i = 0; i < 10; ++i) {
    ma["q" + std::to_string(i)] = a[i];
    mb["q" + std::to_string(i)] = b[i];
  }
  // Hand computation: d = a - b, t = mean / (sd / sqrt n).
  double mean = 0, ss = 0;
  for (int i = 0; i < 10; ++i) mean += (a[i] - b[i]) / 10;
  for (int i = 0; i < 10; ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
  const double t_hand = mean / (std::sqrt(ss / 9) / std::sqrt(10.0));
  TTestResult r = paired_t_test(ma, mb, 0.05);
  const bool beyond = std::fabs(r.t_statistic) > 2.262;
  const bool t_ok = std::fabs(r.t_statistic - t_hand) < 1e-9 && beyond == (r.p_value < 0.05);

  // A near-boundary pair on the other side of the critical value.
  std::map<std::string, double> nb;
  const double shift[] = {0.0789, 0.1789, -0.0711, 0.1289, -0.0211,
                          0.0989, 0.0589, -0.0411, 0.1589, 0.0289};
  std::map<std::string, double> na;
  for (int i = 0; i < 10; ++i) {
    na["q" + std::to_string(i)] = 0.5;
    nb["q" + std::to_string(i)] = 0.5 + shift[i];
  }
  TTestResult near = paired_t_test(na, nb, 0.05);
  const bool near_ok = (std::fabs(near.t_statistic) > 2.262) == (near.p_value < 0.05);

  size_t self_significant = 0;
  for (uint64_t s = 0; s < 50; ++s) {
    Rng rng(s);
    std::map<std::string, double> v;
    for (int i = 0; i < 2 + static_cast<int>(rng.below(30)); ++i)
      v["q" + std::to_string(i)] = rng.uniform();
    TTestResult self = paired_t_test(v, v, 0.05);
    self_significant += self.p_value < 0.05 || self.significant_worse;
  }
  const std::string d = "t " + fmt("%.6f", r.t_statistic) + " (hand " + fmt("%.6f", t_hand) +
                        "), p " + fmt("%.6f", r.p_value) + (beyond ? " beyond" : " within") +
                        " 2.262; boundary case t " + fmt("%.4f", near.t_statistic) + " p " +
                        fmt("%.4f", near.p_value) + "; A-vs-A significant " +
                        std::to_string(self_significant) + "/50";
  return t_ok && near_ok && r.p_value < 0.05 && self_significant == 0 ? pass(d) : fail(d);
}

// ---- 8: end-to-end determinism ----

std::string serialize(const PipelineResult& r) {
  std::ostringstream out;
  write_candidates(out, r.candidates);
  for (size_t i = 0; i < r.feature_runs.size(); ++i) write_run(out, r.feature_runs[i], r.feature_names[i]);
  write_run(out, r.fused.rankings, "ltr");
  write_metrics(out, r.fused_metrics, true);
  if (r.ablated) {
    write_run(out, r.ablated->rankings, "ltr-ablated");
    write_metrics(out, *r.ablated_metrics, true);
  }
  for (const auto& f : r.fused.folds) f.model.save(out);
  return out.str();
}

Outcome pipeline_determinism(const SynthWorld& w) {
  const auto t0 = std::chrono::steady_clock::now();
  auto queries = build_queries(w.corpus, w.index.config());
  Qrels qrels = derive_qrels(w.corpus);
  PipelineConfig cfg;
  cfg.scorers = {"bm25", "tfidf-cs", "tfidf-cs+rocchio", "glove-cs", "entity-cs"};
  cfg.without = {"bm25"};
  cfg.ca.seed = 8;
  const std::string a = serialize(run_pipeline(w.resources(), queries, qrels, cfg));
  const std::string b = serialize(run_pipeline(w.resources(), queries, qrels, cfg));
  const double secs = seconds_since(t0);
  const std::string d = std::to_string(w.corpus.pages.size()) + " pages, " +
                        std::to_string(queries.size()) + " queries, outputs " +
                        (a == b ? "byte-identical" : "differ") + " (" +
                        std::to_string(a.size()) + " bytes), " + fmt("%.1f", secs) + " s";
  return a == b && !a.empty() && secs < 60 ? pass(d) : fail(d);
}

// ---- 9: official collection (optional) ----

Outcome official_collection(const std::string& corpus_path) {
  if (corpus_path.empty())
    return {Outcome::Skip,
            "official collection not supplied (--car-corpus FILE, converted to corpus JSONL)"};
  std::ifstream in(corpus_path);
  if (!in) return fail("cannot read " + corpus_path);
  Corpus c = parse_corpus(in);
  Index ix = Index::build(c, TokenPipelineConfig::standard());
  std::vector<Ranking> run;
  for (const HeadingQuery& q : build_queries(c, ix.config()))
    run.push_back(retrieve_bm25(ix, q.terms, 100, {}, q.query_id));
  const double map = evaluate_run(run, derive_qrels(c)).map;
  const std::string d = "bm25 query-only k=100 MAP " + fmt("%.4f", map);
  return map >= 0.10 && map <= 0.20 ? pass(d) : fail(d);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance report"};
  std::vector<int> expect_red;
  std::string car_corpus, data_dir = CARRANK_TEST_DATA;
  app.add_option("--expect-red", expect_red, "Criteria known to fail");
  app.add_option("--car-corpus", car_corpus, "Official collection as corpus JSONL");
  app.add_option("--data", data_dir, "Fixture directory")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  auto world = load_synth(synth_collection(SynthSpec{}), 5, 0);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"metric oracle", metric_oracle},
      {"retrieval oracle", retrieval_oracle},
      {"formula spot-checks", formula_checks},
      {"environment properties", [&] { return environment_properties(data_dir); }},
      {"expansion properties", [&] { return expansion_properties(*world); }},
      {"ltr properties", ltr_properties},
      {"significance", significance},
      {"end-to-end determinism", [&] { return pipeline_determinism(*world); }},
      {"official collection bm25 (optional)", [&] { return official_collection(car_corpus); }},
  };
  std::set<int> red;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.status == Outcome::Pass ? "PASS" : o.status == Outcome::Fail ? "FAIL" : "SKIP";
    std::printf("%s %zu %s: %s\n", tag, i + 1, criteria[i].first, o.detail.c_str());
    if (o.status == Outcome::Fail) red.insert(static_cast<int>(i + 1));
  }
  const std::set<int> expected(expect_red.begin(), expect_red.end());
  if (red != expected) {
    std::printf("failing criteria differ from the expected set\n");
    return 1;
  }
  return 0;
}
