#include "carrank/envgen.h"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "carrank/random.h"

namespace carrank {

namespace {

struct PageView {
  const Page* page;
  std::vector<std::string> paragraphs;  // attachment order, unique
  std::unordered_set<std::string> members;
};

std::vector<PageView> page_views(const Corpus& corpus) {
  std::vector<PageView> out;
  for (const Page& p : corpus.pages) {
    PageView v{&p, {}, {}};
    for_each_section(p, [&](const Page&, const Section& s) {
      for (const std::string& pid : s.paragraphs)
        if (v.members.insert(pid).second) v.paragraphs.push_back(pid);
    });
    out.push_back(std::move(v));
  }
  return out;
}

// Every paragraph attached to some page, ascending.
std::vector<std::string> attached_paragraphs(const std::vector<PageView>& views) {
  std::set<std::string> all;
  for (const PageView& v : views) all.insert(v.paragraphs.begin(), v.paragraphs.end());
  return {all.begin(), all.end()};
}

// k draws without replacement from `universe` minus `excluded`. Rejection
// sampling while the pool is large, materialized pool otherwise.
std::vector<std::string> draw_excluding(Rng& rng, const std::vector<std::string>& universe,
                                        const std::unordered_set<std::string>& excluded,
                                        size_t k) {
  size_t excluded_in_universe = 0;
  for (const auto& p : excluded)
    excluded_in_universe += std::binary_search(universe.begin(), universe.end(), p);
  const size_t available = universe.size() - excluded_in_universe;
  if (k >= available || 4 * (excluded_in_universe + k) > universe.size()) {
    std::vector<std::string> pool;
    pool.reserve(available);
    for (const auto& p : universe)
      if (!excluded.count(p)) pool.push_back(p);
    return rng.sample(std::move(pool), k);
  }
  std::vector<std::string> out;
  std::unordered_set<std::string> chosen;
  while (out.size() < k) {
    const std::string& p = universe[rng.below(universe.size())];
    if (excluded.count(p) || !chosen.insert(p).second) continue;
    out.push_back(p);
  }
  return out;
}

void add(CandidateSet& c, const std::vector<std::string>& ids, Provenance p) {
  for (const auto& id : ids) {
    c.paragraph_ids.push_back(id);
    c.provenance.push_back(p);
  }
}

void require_two_pages(const Corpus& corpus) {
  if (corpus.pages.size() < 2)
    throw std::invalid_argument("environment generation needs at least two pages");
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::TrueSection: return "true-section";
    case Provenance::SameArticle: return "same-article";
    case Provenance::OtherArticle: return "other-article";
    case Provenance::Retrieved: return "retrieved";
  }
  return "?";
}

std::optional<Provenance> parse_provenance(std::string_view s) {
  for (Provenance p : {Provenance::TrueSection, Provenance::SameArticle,
                       Provenance::OtherArticle, Provenance::Retrieved})
    if (to_string(p) == s) return p;
  return std::nullopt;
}

std::vector<CandidateSet> build_train_env(const Corpus& corpus, const EnvSpec& spec) {
  require_two_pages(corpus);
  auto views = page_views(corpus);
  auto universe = attached_paragraphs(views);
  std::vector<CandidateSet> out;
  for (const PageView& v : views) {
    for_each_section(*v.page, [&](const Page& page, const Section& s) {
      if (s.paragraphs.empty()) return;
      std::vector<std::string> heading_path = s.path;
      heading_path.push_back(s.heading);
      CandidateSet c;
      c.query_id = make_query_id(page.id, heading_path);
      Rng rng(stable_hash(spec.seed, c.query_id));
      add(c, s.paragraphs, Provenance::TrueSection);

      const size_t want_same = spec.neg_same_article * s.paragraphs.size();
      std::vector<std::string> same_pool;
      std::unordered_set<std::string> own(s.paragraphs.begin(), s.paragraphs.end());
      for (const auto& pid : v.paragraphs)
        if (!own.count(pid)) same_pool.push_back(pid);
      auto same = rng.sample(std::move(same_pool), want_same);
      c.same_article_deficit = want_same - same.size();
      add(c, same, Provenance::SameArticle);

      const size_t want_other = spec.neg_other_article * s.paragraphs.size();
      auto other = draw_excluding(rng, universe, v.members, want_other);
      c.other_article_deficit = want_other - other.size();
      add(c, other, Provenance::OtherArticle);
      out.push_back(std::move(c));
    });
  }
  return out;
}

std::vector<CandidateSet> build_test_env(const Corpus& corpus, uint64_t seed) {
  require_two_pages(corpus);
  auto views = page_views(corpus);
  auto universe = attached_paragraphs(views);
  std::vector<CandidateSet> out;
  for (const PageView& v : views) {
    for_each_section(*v.page, [&](const Page& page, const Section& s) {
      std::vector<std::string> heading_path = s.path;
      heading_path.push_back(s.heading);
      CandidateSet c;
      c.query_id = make_query_id(page.id, heading_path);
      Rng rng(stable_hash(seed, c.query_id));
      std::unordered_set<std::string> own(s.paragraphs.begin(), s.paragraphs.end());
      std::vector<std::pair<std::string, Provenance>> rows;
      for (const auto& pid : v.paragraphs)
        rows.emplace_back(pid, own.count(pid) ? Provenance::TrueSection
                                              : Provenance::SameArticle);
      auto other = draw_excluding(rng, universe, v.members, v.paragraphs.size());
      c.other_article_deficit = v.paragraphs.size() - other.size();
      for (auto& pid : other) rows.emplace_back(std::move(pid), Provenance::OtherArticle);
      rng.shuffle(rows);
      for (auto& [pid, prov] : rows) {
        c.paragraph_ids.push_back(std::move(pid));
        c.provenance.push_back(prov);
      }
      out.push_back(std::move(c));
    });
  }
  return out;
}

CandidateSet generate_candidates(const Index& ix, const HeadingQuery& q, size_t k,
                                 const Bm25Params& params) {
  CandidateSet c;
  c.query_id = q.query_id;
  for (const ScoredDoc& d : retrieve_bm25(ix, q.terms, k, params).entries) {
    c.paragraph_ids.push_back(d.paragraph_id);
    c.provenance.push_back(Provenance::Retrieved);
  }
  return c;
}

void write_candidates(std::ostream& out, std::span<const CandidateSet> sets) {
  for (const CandidateSet& c : sets)
    for (size_t i = 0; i < c.size(); ++i)
      out << c.query_id << '\t' << c.paragraph_ids[i] << '\t' << to_string(c.provenance[i])
          << '\n';
}

std::vector<CandidateSet> read_candidates(std::istream& in) {
  std::vector<CandidateSet> out;
  std::unordered_map<std::string, size_t> slot;
  std::vector<std::unordered_set<std::string>> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos)
      throw ParseError(line_no, "candidate row must be queryId<TAB>paragraphId<TAB>provenance");
    std::string q = line.substr(0, t1), p = line.substr(t1 + 1, t2 - t1 - 1);
    auto prov = parse_provenance(std::string_view(line).substr(t2 + 1));
    if (q.empty() || p.empty() || !prov)
      throw ParseError(line_no, "bad candidate row");
    auto [it, fresh] = slot.emplace(q, out.size());
    if (fresh) {
      out.push_back(CandidateSet{q, {}, {}, 0, 0});
      seen.emplace_back();
    }
    if (!seen[it->second].insert(p).second)
      throw ParseError(line_no, "paragraph \"" + p + "\" repeated for query \"" + q + "\"");
    out[it->second].paragraph_ids.push_back(std::move(p));
    out[it->second].provenance.push_back(*prov);
  }
  return out;
}

}  // namespace carrank
