// carrank: build indexes and environments, run rankers, fuse and evaluate.
//
// Exit status: 0 success, 1 internal failure, 2 usage or input error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "carrank/experiment.h"
#include "carrank/synth.h"

namespace fs = std::filesystem;
using namespace carrank;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  return in;
}

template <class Fn>
void write_to(const std::string& path, Fn&& fn) {
  if (path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path);
  fn(out);
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

Corpus load_corpus(const std::string& path) {
  auto in = open_in(path);
  return parse_corpus(in);
}

TokenPipelineConfig pipeline_config(const std::string& stopwords) {
  TokenPipelineConfig cfg = TokenPipelineConfig::standard();
  if (!stopwords.empty()) {
    auto in = open_in(stopwords);
    cfg.stopwords = std::make_shared<const StopwordSet>(load_stopwords(in));
  }
  return cfg;
}

Index load_or_build_index(const std::string& index_path, const Corpus& corpus,
                          const std::string& stopwords) {
  if (index_path.empty()) return Index::build(corpus, pipeline_config(stopwords));
  auto in = open_in(index_path);
  return Index::load(in);
}

std::map<std::string, CandidateSet> load_candidates(const std::string& path) {
  auto in = open_in(path);
  std::map<std::string, CandidateSet> out;
  for (auto& c : read_candidates(in)) out.emplace(c.query_id, std::move(c));
  return out;
}

std::vector<Ranking> load_run(const std::string& path) {
  auto in = open_in(path);
  return read_run(in).rankings();
}

Qrels load_qrels(const std::string& path) {
  auto in = open_in(path);
  return read_qrels(in);
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

// Flags shared by run and pipeline.
struct RankFlags {
  std::string corpus, index, stopwords, embeddings, entity_embeddings, gazetteer, entity_stats,
      support_corpus;
  RunParams params;
  int folds = 5;
  uint64_t seed = 0;

  void add(CLI::App* app, bool with_method) {
    app->add_option("--corpus", corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    app->add_option("--index", index, "Index built by `carrank index` (built on the fly if absent)")
        ->check(CLI::ExistingFile);
    app->add_option("--stopwords", stopwords, "Stopword list when building on the fly")
        ->check(CLI::ExistingFile);
    app->add_option("--embeddings", embeddings, "Word embeddings (word v1 ... vn)")
        ->check(CLI::ExistingFile);
    app->add_option("--entity-embeddings", entity_embeddings, "Entity embeddings")
        ->check(CLI::ExistingFile);
    app->add_option("--gazetteer", gazetteer, "surface<TAB>entity lines")
        ->check(CLI::ExistingFile);
    app->add_option("--entity-stats", entity_stats, "Ndocs header plus entity<TAB>df lines")
        ->check(CLI::ExistingFile);
    app->add_option("--support-corpus", support_corpus,
                    "Rocchio support pages, used whole (default: the corpus, other folds)")
        ->check(CLI::ExistingFile);
    if (with_method) {
      app->add_option("--method", method_name, "bm25 | tfidf-cs | glove-cs | entity-cs")
          ->capture_default_str();
      app->add_option("--expansion", expansion_name, "none | rm1 | ent-rm1 | rocchio")
          ->capture_default_str();
      app->add_option("--k", params.k, "Depth of full-index retrieval")->capture_default_str();
    }
    app->add_option("--fb-docs", params.fb_docs)->capture_default_str();
    app->add_option("--fb-terms", params.fb_terms)->capture_default_str();
    app->add_option("--fb-entities", params.fb_entities)->capture_default_str();
    app->add_option("--rocchio-passages", params.rocchio_passages)->capture_default_str();
    app->add_option("--lambda", params.lambda, "Weight on the original query")
        ->capture_default_str();
    app->add_option("--mu", params.mu, "Dirichlet smoothing")->capture_default_str();
    app->add_option("--k1", params.bm25.k1)->capture_default_str();
    app->add_option("--b", params.bm25.b)->capture_default_str();
    app->add_option("--folds", folds, "Page folds for Rocchio support")->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
  }

  std::string method_name = "bm25";
  std::string expansion_name = "none";
};

// Owns everything a Resources struct points at.
struct Loaded {
  Corpus corpus;
  std::optional<Index> index;
  std::optional<EmbeddingStore> words, entities;
  std::optional<GazetteerLinker> linker;
  std::optional<EntityStats> stats;
  std::optional<Corpus> support;
  std::optional<FoldAssignment> folds;

  Resources resources() const {
    Resources r;
    r.corpus = &corpus;
    r.index = &*index;
    r.word_embeddings = words ? &*words : nullptr;
    r.entity_embeddings = entities ? &*entities : nullptr;
    r.linker = linker ? &*linker : nullptr;
    r.entity_stats = stats ? &*stats : nullptr;
    r.support_corpus = support ? &*support : &corpus;
    r.folds = folds ? &*folds : nullptr;
    return r;
  }
};

std::unique_ptr<Loaded> load_resources(const RankFlags& f, bool need_folds) {
  auto l = std::make_unique<Loaded>();
  l->corpus = load_corpus(f.corpus);
  l->index.emplace(load_or_build_index(f.index, l->corpus, f.stopwords));
  if (!f.embeddings.empty()) {
    auto in = open_in(f.embeddings);
    l->words.emplace(EmbeddingStore::load(in));
  }
  if (!f.entity_embeddings.empty()) {
    auto in = open_in(f.entity_embeddings);
    l->entities.emplace(EmbeddingStore::load(in));
  }
  if (!f.gazetteer.empty()) {
    auto in = open_in(f.gazetteer);
    l->linker.emplace(GazetteerLinker::load(in));
  }
  if (!f.entity_stats.empty()) {
    auto in = open_in(f.entity_stats);
    l->stats.emplace(EntityStats::load(in));
  }
  if (!f.support_corpus.empty()) l->support.emplace(load_corpus(f.support_corpus));
  if (need_folds && !l->support) {
    if (static_cast<size_t>(f.folds) > l->corpus.pages.size())
      warn("rocchio: fewer pages than folds, no support index");
    else
      l->folds.emplace(assign_folds(l->corpus, f.folds, f.seed));
  }
  return l;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::set<std::string> run_queries_of(const std::vector<Ranking>& run) {
  std::set<std::string> out;
  for (const auto& r : run) out.insert(r.query_id);
  return out;
}

void write_pipeline_report(std::ostream& out, const PipelineResult& r, double alpha) {
  out << "feature\tmap\tRprec\trecip_rank\n";
  for (size_t i = 0; i < r.feature_names.size(); ++i)
    out << r.feature_names[i] << '\t' << fmt(r.feature_metrics[i].map) << '\t'
        << fmt(r.feature_metrics[i].r_prec) << '\t' << fmt(r.feature_metrics[i].mrr) << '\n';
  out << "fused\t" << fmt(r.fused_metrics.map) << '\t' << fmt(r.fused_metrics.r_prec) << '\t'
      << fmt(r.fused_metrics.mrr) << '\n';
  if (r.ablated_metrics) {
    std::string name = "w/o";
    for (const auto& f : r.feature_names)
      if (std::find(r.ablated_names.begin(), r.ablated_names.end(), f) == r.ablated_names.end())
        name += " " + f;
    out << name << '\t' << fmt(r.ablated_metrics->map) << '\t' << fmt(r.ablated_metrics->r_prec)
        << '\t' << fmt(r.ablated_metrics->mrr) << '\n';
    if (r.ablation_test) {
      const TTestResult& t = *r.ablation_test;
      out << "# ablated vs fused (ap): t=" << fmt_g(t.t_statistic) << " p=" << fmt_g(t.p_value)
          << " n=" << t.n << (t.p_value < alpha ? (t.mean_diff < 0 ? " worse*" : " better*") : "")
          << '\n';
    }
  }
  out << "# folds\n";
  for (const FoldReport& f : r.fused.folds) {
    out << f.fold << "\ttrain_map=" << fmt(f.train_map) << (f.trained ? "" : "\tuntrained");
    for (size_t i = 0; i < f.model.names.size(); ++i)
      out << '\t' << f.model.names[i] << '=' << fmt_g(f.model.weights[i]);
    out << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"carrank: heading-query passage retrieval experiments"};
  app.require_subcommand(1);

  // index
  std::string corpus_path, out_path, stopwords_path;
  auto* index_cmd = app.add_subcommand("index", "Build and serialize the inverted index");
  index_cmd->add_option("--corpus", corpus_path)->required()->check(CLI::ExistingFile);
  index_cmd->add_option("--out", out_path)->required();
  index_cmd->add_option("--stopwords", stopwords_path)->check(CLI::ExistingFile);

  // qrels
  bool all_grades = false;
  auto* qrels_cmd = app.add_subcommand("qrels", "Derive section-containment qrels");
  qrels_cmd->add_option("--corpus", corpus_path)->required()->check(CLI::ExistingFile);
  qrels_cmd->add_option("--out", out_path)->default_val("-");
  qrels_cmd->add_flag("--all", all_grades, "Also write zero grades");

  // env
  std::string env_kind, qrels_out;
  uint64_t seed = 0;
  EnvSpec env_spec;
  auto* env_cmd = app.add_subcommand("env", "Generate a train or test environment");
  env_cmd->add_option("kind", env_kind, "train | test")
      ->required()
      ->check(CLI::IsMember({"train", "test"}));
  env_cmd->add_option("--corpus", corpus_path)->required()->check(CLI::ExistingFile);
  env_cmd->add_option("--out", out_path, "Candidate file")->default_val("-");
  env_cmd->add_option("--qrels", qrels_out, "Also write qrels here");
  env_cmd->add_option("--neg-same", env_spec.neg_same_article)->capture_default_str();
  env_cmd->add_option("--neg-other", env_spec.neg_other_article)->capture_default_str();
  env_cmd->add_option("--seed", seed)->capture_default_str();

  // candidates
  size_t cand_k = 100;
  RankFlags cand_flags;
  auto* cand_cmd = app.add_subcommand("candidates", "Top-k BM25 candidates per heading");
  cand_cmd->add_option("--corpus", cand_flags.corpus)->required()->check(CLI::ExistingFile);
  cand_cmd->add_option("--index", cand_flags.index)->check(CLI::ExistingFile);
  cand_cmd->add_option("--stopwords", cand_flags.stopwords)->check(CLI::ExistingFile);
  cand_cmd->add_option("--k", cand_k)->capture_default_str();
  cand_cmd->add_option("--k1", cand_flags.params.bm25.k1)->capture_default_str();
  cand_cmd->add_option("--b", cand_flags.params.bm25.b)->capture_default_str();
  cand_cmd->add_option("--out", out_path)->default_val("-");

  // run
  RankFlags run_flags;
  std::string env_path, cands_path, run_name;
  auto* run_cmd = app.add_subcommand("run", "Rank every heading query with one method");
  run_flags.add(run_cmd, true);
  auto* env_opt = run_cmd->add_option("--env", env_path, "Environment candidate file")
                      ->check(CLI::ExistingFile);
  run_cmd->add_option("--candidates", cands_path, "Candidate file to rerank")
      ->check(CLI::ExistingFile)
      ->excludes(env_opt);
  run_cmd->add_option("--run-name", run_name, "Defaults to method+expansion");
  run_cmd->add_option("--out", out_path)->default_val("-");

  // eval
  std::string run_path, qrels_path;
  bool per_query = false;
  auto* eval_cmd = app.add_subcommand("eval", "MAP, R-Prec and MRR of a run");
  eval_cmd->add_option("--run", run_path)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--qrels", qrels_path)->required()->check(CLI::ExistingFile);
  eval_cmd->add_flag("--per-query", per_query);

  // compare
  std::string run_a, run_b;
  double alpha = 0.05;
  auto* cmp_cmd = app.add_subcommand("compare", "Compare two runs with a paired t-test");
  cmp_cmd->add_option("--run-a", run_a)->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--run-b", run_b)->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--qrels", qrels_path)->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--alpha", alpha)->capture_default_str()->check(CLI::Range(0.0, 1.0));

  // pipeline
  RankFlags pipe_flags;
  PipelineConfig pipe;
  std::string out_dir, scorers = "bm25,tfidf-cs", without;
  std::vector<std::string> externals;
  auto* pipe_cmd = app.add_subcommand("pipeline", "Candidates, rerankers, LTR fusion");
  pipe_flags.add(pipe_cmd, false);
  pipe_cmd->add_option("--qrels", qrels_path, "Defaults to qrels derived from the corpus")
      ->check(CLI::ExistingFile);
  pipe_cmd->add_option("--k", pipe.k, "Candidates per query")->capture_default_str();
  pipe_cmd->add_option("--scorers", scorers, "Comma-separated method[+expansion] list")
      ->capture_default_str();
  pipe_cmd->add_option("--external", externals, "name=runfile feature columns");
  pipe_cmd->add_option("--ltr-folds", pipe.ltr_folds)->capture_default_str();
  pipe_cmd->add_option("--restarts", pipe.ca.restarts)->capture_default_str();
  pipe_cmd->add_option("--iterations", pipe.ca.iterations)->capture_default_str();
  pipe_cmd->add_option("--without", without, "Comma-separated features to ablate");
  pipe_cmd->add_option("--alpha", alpha)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  pipe_cmd->add_option("--out-dir", out_dir)->required();

  // synth
  SynthSpec synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic collection");
  synth_cmd->add_option("--pages", synth.pages)->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--out-dir", out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*index_cmd) {
      Corpus c = load_corpus(corpus_path);
      Index ix = Index::build(c, pipeline_config(stopwords_path));
      write_to(out_path, [&](std::ostream& o) { ix.save(o); });
    } else if (*qrels_cmd) {
      Qrels q = derive_qrels(load_corpus(corpus_path));
      write_to(out_path, [&](std::ostream& o) { write_qrels(o, q, !all_grades); });
    } else if (*env_cmd) {
      Corpus c = load_corpus(corpus_path);
      env_spec.seed = seed;
      auto sets = env_kind == "train" ? build_train_env(c, env_spec) : build_test_env(c, seed);
      write_to(out_path, [&](std::ostream& o) { write_candidates(o, sets); });
      if (!qrels_out.empty()) {
        Qrels q = derive_qrels(c);
        write_to(qrels_out, [&](std::ostream& o) { write_qrels(o, q); });
      }
    } else if (*cand_cmd) {
      if (cand_k == 0) throw UsageError("--k must be >= 1");
      Corpus c = load_corpus(cand_flags.corpus);
      Index ix = load_or_build_index(cand_flags.index, c, cand_flags.stopwords);
      std::vector<CandidateSet> sets;
      for (const HeadingQuery& q : build_queries(c, ix.config())) {
        CandidateSet s = generate_candidates(ix, q, cand_k, cand_flags.params.bm25);
        if (s.size()) sets.push_back(std::move(s));
      }
      write_to(out_path, [&](std::ostream& o) { write_candidates(o, sets); });
    } else if (*run_cmd) {
      run_flags.params.method = parse_method(run_flags.method_name);
      run_flags.params.expansion = parse_expansion(run_flags.expansion_name);
      check_combination(run_flags.params.method, run_flags.params.expansion);
      auto loaded = load_resources(run_flags, run_flags.params.expansion == Expansion::Rocchio);
      Ranker ranker(loaded->resources(), run_flags.params);
      for (const auto& w : ranker.warnings()) warn(w);
      const std::string cpath = env_path.empty() ? cands_path : env_path;
      std::optional<std::map<std::string, CandidateSet>> cands;
      if (!cpath.empty()) cands = load_candidates(cpath);
      auto queries = build_queries(loaded->corpus, loaded->index->config());
      auto run = run_queries(ranker, queries, cands ? &*cands : nullptr);
      if (run_name.empty())
        run_name = std::string(to_string(run_flags.params.method)) +
                   (run_flags.params.expansion == Expansion::None
                        ? ""
                        : "+" + std::string(to_string(run_flags.params.expansion)));
      write_to(out_path, [&](std::ostream& o) { write_run(o, run, run_name); });
    } else if (*eval_cmd) {
      auto report = evaluate_run(load_run(run_path), load_qrels(qrels_path));
      write_metrics(std::cout, report, per_query);
    } else if (*cmp_cmd) {
      auto a = load_run(run_a), b = load_run(run_b);
      auto qa = run_queries_of(a), qb = run_queries_of(b);
      if (qa != qb) {
        std::ostringstream msg;
        msg << "runs cover different queries;";
        for (const auto& q : qa)
          if (!qb.count(q)) msg << " only in A: " << q << ';';
        for (const auto& q : qb)
          if (!qa.count(q)) msg << " only in B: " << q << ';';
        throw UsageError(msg.str());
      }
      Qrels qrels = load_qrels(qrels_path);
      auto ma = evaluate_run(a, qrels), mb = evaluate_run(b, qrels);
      auto t = paired_t_test(per_query_ap(ma), per_query_ap(mb), alpha);
      const bool sig = t.p_value < alpha;
      std::cout << "metric\tA\tB\tA-B\n";
      std::cout << "map\t" << fmt(ma.map) << '\t' << fmt(mb.map) << '\t' << fmt(ma.map - mb.map)
                << (sig ? "\t*" : "") << '\n';
      std::cout << "Rprec\t" << fmt(ma.r_prec) << '\t' << fmt(mb.r_prec) << '\t'
                << fmt(ma.r_prec - mb.r_prec) << '\n';
      std::cout << "recip_rank\t" << fmt(ma.mrr) << '\t' << fmt(mb.mrr) << '\t'
                << fmt(ma.mrr - mb.mrr) << '\n';
      std::cout << "# paired t-test on ap: t=" << fmt_g(t.t_statistic) << " p=" << fmt_g(t.p_value)
                << " n=" << t.n << " alpha=" << fmt_g(alpha) << ' '
                << (sig ? (t.mean_diff < 0 ? "A significantly worse" : "A significantly better")
                        : "not significant")
                << '\n';
    } else if (*pipe_cmd) {
      pipe.scorers.clear();
      std::stringstream ss(scorers);
      for (std::string s; std::getline(ss, s, ',');)
        if (!s.empty()) pipe.scorers.push_back(s);
      bool rocchio = false;
      for (const auto& s : pipe.scorers)
        rocchio |= parse_scorer(s, pipe_flags.params).expansion == Expansion::Rocchio;
      std::stringstream ws(without);
      for (std::string s; std::getline(ws, s, ',');)
        if (!s.empty()) pipe.without.push_back(s);
      for (const auto& e : externals) {
        auto eq = e.find('=');
        if (eq == std::string::npos || eq == 0)
          throw UsageError("--external takes name=runfile, got " + e);
        pipe.external[e.substr(0, eq)] = load_run(e.substr(eq + 1));
      }
      pipe.base = pipe_flags.params;
      pipe.ca.seed = pipe_flags.seed;
      auto loaded = load_resources(pipe_flags, rocchio);
      Qrels qrels = qrels_path.empty() ? derive_qrels(loaded->corpus) : load_qrels(qrels_path);
      auto queries = build_queries(loaded->corpus, loaded->index->config());
      PipelineResult r = run_pipeline(loaded->resources(), queries, qrels, pipe);
      for (const auto& w : r.warnings) warn(w);

      fs::create_directories(out_dir);
      const fs::path dir(out_dir);
      write_to((dir / "candidates.tsv").string(),
               [&](std::ostream& o) { write_candidates(o, r.candidates); });
      for (size_t i = 0; i < r.feature_names.size(); ++i) {
        std::string file = r.feature_names[i];
        for (char& ch : file)
          if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-') ch = '_';
        write_to((dir / ("feature_" + file + ".run")).string(),
                 [&](std::ostream& o) { write_run(o, r.feature_runs[i], r.feature_names[i]); });
      }
      write_to((dir / "fused.run").string(),
               [&](std::ostream& o) { write_run(o, r.fused.rankings, "ltr"); });
      write_to((dir / "fused_metrics.tsv").string(),
               [&](std::ostream& o) { write_metrics(o, r.fused_metrics, true); });
      if (r.ablated)
        write_to((dir / "ablated.run").string(),
                 [&](std::ostream& o) { write_run(o, r.ablated->rankings, "ltr-ablated"); });
      write_to((dir / "report.tsv").string(),
               [&](std::ostream& o) { write_pipeline_report(o, r, alpha); });
      write_pipeline_report(std::cout, r, alpha);
    } else if (*synth_cmd) {
      auto files = synth_collection(synth);
      fs::create_directories(out_dir);
      const fs::path dir(out_dir);
      auto put = [&](const char* name, const std::string& body) {
        write_to((dir / name).string(), [&](std::ostream& o) { o << body; });
      };
      put("corpus.jsonl", files.corpus_jsonl);
      put("embeddings.txt", files.word_embeddings);
      put("gazetteer.tsv", files.gazetteer);
      put("entity_embeddings.txt", files.entity_embeddings);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const IntegrityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
