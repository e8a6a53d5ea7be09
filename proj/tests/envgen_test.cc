#include "carrank/envgen.h"

#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "test_util.h"

namespace carrank {
namespace {

Corpus load_fixture200() {
  std::ifstream in(CARRANK_TEST_DATA "/corpus200.jsonl");
  return parse_corpus(in);
}

// Page A: section H with 2 paragraphs plus 12 elsewhere; page B: 15 paragraphs.
Corpus two_pages() {
  std::string a = R"({"id":"A","title":"A","sections":[{"heading":"H","paragraphs":[{"id":"a00","text":"x"},{"id":"a01","text":"x"}]},{"heading":"G","paragraphs":[)";
  for (int i = 2; i < 14; ++i)
    a += std::string(i > 2 ? "," : "") + R"({"id":"a)" + (i < 10 ? "0" : std::string()) +
         std::to_string(i) + R"(","text":"x"})";
  a += "]}]}\n";
  std::string b = R"({"id":"B","title":"B","sections":[{"heading":"K","paragraphs":[)";
  for (int i = 0; i < 15; ++i)
    b += std::string(i ? "," : "") + R"({"id":"b)" + std::to_string(i) + R"(","text":"y"})";
  b += "]}]}\n";
  return testing::corpus_from(a + b);
}

const CandidateSet& find_set(const std::vector<CandidateSet>& sets, const std::string& q) {
  for (const auto& s : sets)
    if (s.query_id == q) return s;
  throw std::runtime_error("no set " + q);
}

size_t count_prov(const CandidateSet& c, Provenance p) {
  return std::count(c.provenance.begin(), c.provenance.end(), p);
}

TEST(TrainEnv, TwoTrueParagraphsGiveTwentyTwo) {
  auto env = build_train_env(two_pages(), EnvSpec{});
  const auto& c = find_set(env, "A/H");
  EXPECT_EQ(c.size(), 22u);
  EXPECT_EQ(count_prov(c, Provenance::TrueSection), 2u);
  EXPECT_EQ(count_prov(c, Provenance::SameArticle), 10u);
  EXPECT_EQ(count_prov(c, Provenance::OtherArticle), 10u);
  EXPECT_EQ(c.same_article_deficit, 0u);
  for (size_t i = 0; i < c.size(); ++i) {
    const char page = c.paragraph_ids[i][0];
    EXPECT_EQ(page == 'b', c.provenance[i] == Provenance::OtherArticle);
  }
}

TEST(TrainEnv, SingleSectionArticleRecordsDeficit) {
  auto env = build_train_env(two_pages(), EnvSpec{});
  const auto& c = find_set(env, "B/K");
  EXPECT_EQ(count_prov(c, Provenance::SameArticle), 0u);
  EXPECT_EQ(c.same_article_deficit, 75u);
  // Page A has only 14 paragraphs for 75 requested.
  EXPECT_EQ(count_prov(c, Provenance::OtherArticle), 14u);
  EXPECT_EQ(c.other_article_deficit, 61u);
}

TEST(TrainEnv, SeedDeterminism) {
  Corpus c = load_fixture200();
  EnvSpec spec;
  spec.seed = 7;
  auto a = build_train_env(c, spec), b = build_train_env(c, spec);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].paragraph_ids, b[i].paragraph_ids);
  spec.seed = 8;
  auto d = build_train_env(c, spec);
  size_t differ = 0;
  for (size_t i = 0; i < a.size(); ++i) differ += a[i].paragraph_ids != d[i].paragraph_ids;
  EXPECT_GT(differ, a.size() / 2);
}

TEST(TrainEnv, NeedsTwoPages) {
  Corpus one = testing::corpus_from(
      R"({"id":"P","title":"T","sections":[{"heading":"H","paragraphs":[{"id":"a","text":"x"}]}]})");
  EXPECT_THROW(build_train_env(one, EnvSpec{}), std::invalid_argument);
  EXPECT_THROW(build_test_env(one, 0), std::invalid_argument);
}

std::map<std::string, std::string> page_of_paragraph(const Corpus& c) {
  std::map<std::string, std::string> out;
  for (const Page& p : c.pages)
    for_each_section(p, [&](const Page& pg, const Section& s) {
      for (const auto& pid : s.paragraphs) out[pid] = pg.id;
    });
  return out;
}

TEST(TrainEnvProperty, RecallCountsAndProvenanceOnFixture200) {
  Corpus c = load_fixture200();
  Qrels qrels = derive_qrels(c);
  auto env = build_train_env(c, EnvSpec{});
  auto owner = page_of_paragraph(c);
  size_t with_positives = 0;
  for (const auto& [q, rows] : qrels.entries) with_positives += !rows.empty();
  EXPECT_EQ(env.size(), with_positives);
  for (const CandidateSet& s : env) {
    std::set<std::string> ids(s.paragraph_ids.begin(), s.paragraph_ids.end());
    EXPECT_EQ(ids.size(), s.size()) << s.query_id;
    for (const auto& pid : qrels.relevant(s.query_id)) EXPECT_TRUE(ids.count(pid)) << pid;
    const size_t t = count_prov(s, Provenance::TrueSection);
    EXPECT_EQ(t, qrels.relevant(s.query_id).size());
    EXPECT_LE(count_prov(s, Provenance::SameArticle), 5 * t);
    EXPECT_LE(count_prov(s, Provenance::OtherArticle), 5 * t);
    EXPECT_EQ(count_prov(s, Provenance::SameArticle) + s.same_article_deficit, 5 * t);
    EXPECT_EQ(s.other_article_deficit, 0u);
    const std::string page = s.query_id.substr(0, s.query_id.find('/'));
    for (size_t i = 0; i < s.size(); ++i)
      EXPECT_EQ(owner.at(s.paragraph_ids[i]) == page,
                s.provenance[i] != Provenance::OtherArticle);
  }
}

TEST(TestEnv, DoublesTheArticle) {
  auto env = build_test_env(two_pages(), 3);
  EXPECT_EQ(find_set(env, "A/H").size(), 28u);
  EXPECT_EQ(find_set(env, "A/G").size(), 28u);
  // Page B has 15 paragraphs but only 14 exist elsewhere.
  const auto& b = find_set(env, "B/K");
  EXPECT_EQ(b.size(), 29u);
  EXPECT_EQ(b.other_article_deficit, 1u);
}

TEST(TestEnv, TwelveParagraphArticle) {
  std::string s;
  for (int p = 0; p < 3; ++p) {
    s += R"({"id":"P)" + std::to_string(p) + R"(","title":"T","sections":[{"heading":"H","paragraphs":[)";
    for (int i = 0; i < 12; ++i)
      s += std::string(i ? "," : "") + R"({"id":"p)" + std::to_string(p) + "_" +
           std::to_string(i) + R"(","text":"x"})";
    s += R"(]},{"heading":"Empty","paragraphs":[]}]})" "\n";
  }
  auto env = build_test_env(testing::corpus_from(s), 1);
  ASSERT_EQ(env.size(), 6u);
  for (const auto& c : env) EXPECT_EQ(c.size(), 24u);
}

TEST(TestEnvProperty, Fixture200) {
  Corpus c = load_fixture200();
  auto env = build_test_env(c, 11);
  auto owner = page_of_paragraph(c);
  std::map<std::string, size_t> page_size;
  for (const auto& [pid, page] : owner) ++page_size[page];
  double total = 0;
  for (const CandidateSet& s : env) {
    const std::string page = s.query_id.substr(0, s.query_id.find('/'));
    EXPECT_EQ(s.size(), 2 * page_size.at(page));
    std::set<std::string> ids(s.paragraph_ids.begin(), s.paragraph_ids.end());
    EXPECT_EQ(ids.size(), s.size());
    size_t own = 0;
    for (const auto& pid : s.paragraph_ids) own += owner.at(pid) == page;
    EXPECT_EQ(own, page_size.at(page));
    total += static_cast<double>(s.size());
  }
  EXPECT_EQ(env.size(), 2331u);
  // gen_corpus200.py: mean_test_env_candidates 34.48906048906049.
  EXPECT_NEAR(total / env.size(), 34.48906048906049, 1e-9);
  auto again = build_test_env(c, 11);
  for (size_t i = 0; i < env.size(); ++i) EXPECT_EQ(env[i].paragraph_ids, again[i].paragraph_ids);
}

TEST(TestEnv, OrderIsShuffled) {
  auto env = build_test_env(load_fixture200(), 2);
  size_t own_first = 0;
  for (const auto& s : env)
    own_first += std::is_partitioned(s.provenance.begin(), s.provenance.end(),
                                     [](Provenance p) { return p != Provenance::OtherArticle; });
  EXPECT_LT(own_first, env.size() / 10);
}

TEST(GenerateCandidates, Bm25TopK) {
  Rng rng(4);
  auto texts = testing::random_texts(rng, 300, 40, 12);
  Index ix = Index::build(texts, TokenPipelineConfig::raw());
  for (int trial = 0; trial < 30; ++trial) {
    HeadingQuery q;
    q.query_id = "q" + std::to_string(trial);
    q.terms = {"w" + std::to_string(rng.below(40)), "w" + std::to_string(rng.below(40))};
    CandidateSet c = generate_candidates(ix, q, 100);
    EXPECT_LE(c.size(), 100u);
    // Exhaustive oracle: score everything, sort by score then id.
    std::vector<std::pair<double, std::string>> all;
    for (const auto& [id, text] : texts) {
      double s = bm25_score(ix, q.terms, id);
      if (s > 0) all.emplace_back(-s, id);
    }
    std::sort(all.begin(), all.end());
    if (all.size() > 100) all.resize(100);
    ASSERT_EQ(c.size(), all.size());
    for (size_t i = 0; i < all.size(); ++i) EXPECT_EQ(c.paragraph_ids[i], all[i].second);
    for (Provenance p : c.provenance) EXPECT_EQ(p, Provenance::Retrieved);
    CandidateSet one = generate_candidates(ix, q, 1);
    ASSERT_EQ(one.size(), all.empty() ? 0u : 1u);
    if (!all.empty()) EXPECT_EQ(one.paragraph_ids[0], all[0].second);
  }
}

TEST(CandidateFile, RoundTripAndErrors) {
  auto env = build_train_env(two_pages(), EnvSpec{});
  std::ostringstream out;
  write_candidates(out, env);
  EXPECT_EQ(out.str().substr(0, 23), "A/H\ta00\ttrue-section\nA/");
  std::istringstream in(out.str());
  auto back = read_candidates(in);
  ASSERT_EQ(back.size(), env.size());
  for (size_t i = 0; i < env.size(); ++i) {
    EXPECT_EQ(back[i].query_id, env[i].query_id);
    EXPECT_EQ(back[i].paragraph_ids, env[i].paragraph_ids);
    EXPECT_EQ(back[i].provenance, env[i].provenance);
  }
  std::istringstream bad("q\tp\tmaybe\n");
  EXPECT_THROW(read_candidates(bad), ParseError);
  std::istringstream dup("q\tp\tretrieved\nq\tp\tretrieved\n");
  EXPECT_THROW(read_candidates(dup), ParseError);
}

}  // namespace
}  // namespace carrank
