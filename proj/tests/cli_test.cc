#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "carrank/experiment.h"
#include "carrank/synth.h"

namespace fs = std::filesystem;

namespace carrank {
namespace {

struct Result {
  int code;
  std::string out, err;
};

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("carrank_cli_" + std::to_string(getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    SynthSpec s;
    s.pages = 20;
    s.seed = 5;
    auto files = synth_collection(s);
    std::ofstream(dir_ / "corpus.jsonl") << files.corpus_jsonl;
    std::ofstream(dir_ / "embeddings.txt") << files.word_embeddings;
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string path(const std::string& name) { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static Result run(const std::string& args) {
    const std::string out = path("stdout"), err = path("stderr");
    const std::string cmd = std::string(CARRANK_CLI) + " " + args + " > " + out + " 2> " + err;
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  static inline fs::path dir_;
};

TEST_F(Cli, IndexIsByteIdenticalOnRebuild) {
  ASSERT_EQ(run("index --corpus " + path("corpus.jsonl") + " --out " + path("a.idx")).code, 0);
  ASSERT_EQ(run("index --corpus " + path("corpus.jsonl") + " --out " + path("b.idx")).code, 0);
  const std::string a = slurp(path("a.idx"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(path("b.idx")));
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("index --corpus " + path("missing.jsonl") + " --out " + path("x")).code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("").code, 2);
  auto r = run("run --corpus " + path("corpus.jsonl") + " --method entity-cs --expansion rm1");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("ent-rm1"), std::string::npos) << r.err;
  r = run("run --corpus " + path("corpus.jsonl") + " --method glove-cs");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--embeddings"), std::string::npos) << r.err;
  r = run("run --corpus " + path("corpus.jsonl") + " --method bm25 --lambda 2");
  EXPECT_EQ(r.code, 2);
  std::ofstream(path("bad.jsonl")) << "{not json\n";
  EXPECT_EQ(run("index --corpus " + path("bad.jsonl") + " --out " + path("x")).code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, Bm25RunOnEnvMatchesBruteForceOracle) {
  ASSERT_EQ(run("env test --seed 2 --corpus " + path("corpus.jsonl") + " --out " + path("env.tsv") +
                " --qrels " + path("qrels.tsv"))
                .code,
            0);
  ASSERT_EQ(run("run --corpus " + path("corpus.jsonl") + " --env " + path("env.tsv") + " --out " +
                path("bm25.run"))
                .code,
            0);
  auto r = run("eval --run " + path("bm25.run") + " --qrels " + path("qrels.tsv"));
  ASSERT_EQ(r.code, 0) << r.err;

  std::ifstream cin(path("corpus.jsonl")), ein(path("env.tsv")), qin(path("qrels.tsv"));
  Corpus c = parse_corpus(cin);
  Index ix = Index::build(c, TokenPipelineConfig::standard());
  Qrels qrels = read_qrels(qin);
  std::map<std::string, std::vector<std::string>> env;
  for (auto& s : read_candidates(ein)) env[s.query_id] = s.paragraph_ids;
  double sum = 0;
  size_t n = 0;
  for (const HeadingQuery& q : build_queries(c, ix.config())) {
    auto rel = qrels.relevant(q.query_id);
    if (rel.empty()) continue;
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& pid : env.at(q.query_id)) scored.emplace_back(-bm25_score(ix, q.terms, pid), pid);
    std::sort(scored.begin(), scored.end());
    double hits = 0, ap = 0;
    for (size_t i = 0; i < scored.size(); ++i)
      if (std::count(rel.begin(), rel.end(), scored[i].second)) ap += ++hits / (i + 1.0);
    sum += ap / rel.size();
    ++n;
  }
  const std::string line = r.out.substr(0, r.out.find('\n'));
  ASSERT_EQ(line.substr(0, 4), "map\t");
  EXPECT_NEAR(std::stod(line.substr(4)), sum / n, 1e-6);
}

TEST_F(Cli, RunIsDeterministic) {
  const std::string args = "run --corpus " + path("corpus.jsonl") +
                           " --method glove-cs --expansion rm1 --embeddings " +
                           path("embeddings.txt") + " --k 50 --out ";
  ASSERT_EQ(run(args + path("r1.run")).code, 0);
  ASSERT_EQ(run(args + path("r2.run")).code, 0);
  EXPECT_FALSE(slurp(path("r1.run")).empty());
  EXPECT_EQ(slurp(path("r1.run")), slurp(path("r2.run")));
}

TEST_F(Cli, RocchioWithoutSupportWarnsAndMatchesQueryOnly) {
  const std::string base = "run --corpus " + path("corpus.jsonl") + " --method tfidf-cs --folds 50";
  auto plain = run(base + " --out " + path("plain.run"));
  auto roc = run(base + " --expansion rocchio --out " + path("roc.run"));
  ASSERT_EQ(plain.code, 0);
  ASSERT_EQ(roc.code, 0);
  EXPECT_NE(roc.err.find("warning: rocchio"), std::string::npos) << roc.err;
  std::ifstream a(path("plain.run")), b(path("roc.run"));
  auto ra = read_run(a).rankings(), rb = read_run(b).rankings();
  ASSERT_EQ(ra.size(), rb.size());
  for (size_t i = 0; i < ra.size(); ++i) EXPECT_EQ(ra[i].entries, rb[i].entries);
}

TEST_F(Cli, EvalAndCompare) {
  std::ofstream(path("q.tsv")) << "q1 0 a 1\nq2 0 c 1\n";
  std::ofstream(path("perfect.run")) << "q1 Q0 a 1 2 x\nq1 Q0 b 2 1 x\nq2 Q0 c 1 1 x\n";
  std::ofstream(path("partial.run")) << "q1 Q0 a 1 2 z\n";
  auto r = run("eval --run " + path("perfect.run") + " --qrels " + path("q.tsv"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "map\t1.000000");
  r = run("compare --run-a " + path("perfect.run") + " --run-b " + path("perfect.run") +
          " --qrels " + path("q.tsv"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("not significant"), std::string::npos) << r.out;
  r = run("compare --run-a " + path("perfect.run") + " --run-b " + path("partial.run") +
          " --qrels " + path("q.tsv"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("only in A: q2"), std::string::npos) << r.err;
}

TEST_F(Cli, CompareMarkerMatchesTTest) {
  ASSERT_EQ(run("env test --seed 2 --corpus " + path("corpus.jsonl") + " --out " + path("e.tsv") +
                " --qrels " + path("cq.tsv"))
                .code,
            0);
  const std::string common = " --corpus " + path("corpus.jsonl") + " --env " + path("e.tsv");
  ASSERT_EQ(run("run" + common + " --out " + path("a.run")).code, 0);
  ASSERT_EQ(run("run" + common + " --method tfidf-cs --expansion rocchio --out " + path("b.run")).code, 0);
  ASSERT_EQ(run("run" + common + " --method tfidf-cs --out " + path("c.run")).code, 0);
  std::ifstream qin(path("cq.tsv"));
  Qrels qrels = read_qrels(qin);
  for (const char* other : {"b.run", "c.run"}) {
    auto r = run("compare --run-a " + path("a.run") + " --run-b " + path(other) + " --qrels " +
                 path("cq.tsv"));
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream a(path("a.run")), b(path(other));
    auto t = paired_t_test(per_query_ap(evaluate_run(read_run(a), qrels)),
                           per_query_ap(evaluate_run(read_run(b), qrels)));
    const bool marked = r.out.find("\t*\n") != std::string::npos;
    EXPECT_EQ(marked, t.p_value < 0.05) << other << "\n" << r.out;
    EXPECT_EQ(r.out.find("not significant") == std::string::npos, t.p_value < 0.05);
  }
}

TEST_F(Cli, PipelineIsByteIdentical) {
  const std::string args = "pipeline --corpus " + path("corpus.jsonl") +
                           " --scorers bm25,tfidf-cs+rocchio,glove-cs --embeddings " +
                           path("embeddings.txt") + " --without bm25 --seed 4 --restarts 2";
  auto a = run(args + " --out-dir " + path("p1"));
  ASSERT_EQ(a.code, 0) << a.err;
  auto b = run(args + " --out-dir " + path("p2"));
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(a.out, b.out);
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(path("p1"))) names.insert(e.path().filename());
  EXPECT_TRUE(names.count("fused.run"));
  EXPECT_TRUE(names.count("ablated.run"));
  for (const auto& n : names) EXPECT_EQ(slurp(path("p1/" + n)), slurp(path("p2/" + n))) << n;
  auto bad = run("pipeline --corpus " + path("corpus.jsonl") + " --scorers bm25 --without nope" +
                 " --out-dir " + path("p3"));
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("ablation"), std::string::npos) << bad.err;
}

TEST_F(Cli, CandidatesHonourK) {
  for (size_t k : {5, 100}) {
    const std::string out = path("c" + std::to_string(k) + ".tsv");
    std::string args = "candidates --corpus " + path("corpus.jsonl") + " --out " + out;
    if (k != 100) args += " --k " + std::to_string(k);
    ASSERT_EQ(run(args).code, 0);
    std::ifstream in(out);
    auto sets = read_candidates(in);
    ASSERT_FALSE(sets.empty());
    size_t full = 0;
    for (const auto& s : sets) {
      EXPECT_LE(s.size(), k);
      full += s.size() == k;
    }
    // Title words reach a whole page, which is more than 5 but fewer than 100 paragraphs.
    EXPECT_EQ(full == sets.size(), k == 5);
  }
  EXPECT_EQ(run("candidates --k 0 --corpus " + path("corpus.jsonl")).code, 2);
}

}  // namespace
}  // namespace carrank
