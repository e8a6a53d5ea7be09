#include "carrank/corpus.h"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_set>

#include "carrank/random.h"
#include "json.hpp"

namespace carrank {

using json = nlohmann::json;

namespace {

bool has_space_or_control(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) {
    return c <= 0x20 || c == 0x7f;
  });
}

std::string string_field(const json& obj, const char* key, size_t line,
                         const char* what) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string())
    throw ParseError(line, std::string(what) + " is missing string field \"" +
                               key + "\"");
  return it->get<std::string>();
}

const json& array_field(const json& obj, const char* key, size_t line,
                        const char* what) {
  static const json kEmpty = json::array();
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return kEmpty;
  if (!it->is_array())
    throw ParseError(line, std::string(what) + " field \"" + key +
                               "\" is not an array");
  return *it;
}

class CorpusBuilder {
 public:
  void add_line(const std::string& text, size_t line) {
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) throw ParseError(line, "record is not an object");

    if (!record.contains("title") && !record.contains("sections")) {
      for (const json& p : array_field(record, "paragraphs", line, "record"))
        add_paragraph_object(p, line);
      return;
    }

    Page page;
    page.id = string_field(record, "id", line, "page");
    page.title = string_field(record, "title", line, "page");
    if (page.id.empty()) throw ParseError(line, "page id is empty");
    if (!page_ids_.insert(page.id).second)
      throw IntegrityError("duplicate page id \"" + page.id + "\" (line " +
                           std::to_string(line) + ")");
    std::unordered_set<std::string> seen_in_page;
    std::set<std::vector<std::string>> heading_paths;
    std::vector<std::string> path;
    page.sections = parse_sections(
        array_field(record, "sections", line, "page"), path, seen_in_page,
        heading_paths, page.id, line);
    corpus_.pages.push_back(std::move(page));
  }

  Corpus finish() {
    for (const auto& [id, line] : references_)
      if (corpus_.paragraphs.find(id) == corpus_.paragraphs.end())
        throw IntegrityError("paragraph \"" + id + "\" referenced on line " +
                             std::to_string(line) + " is not defined");
    return std::move(corpus_);
  }

 private:
  std::vector<Section> parse_sections(
      const json& arr, std::vector<std::string>& path,
      std::unordered_set<std::string>& seen_in_page,
      std::set<std::vector<std::string>>& heading_paths,
      const std::string& page_id, size_t line) {
    std::vector<Section> out;
    for (const json& s : arr) {
      if (!s.is_object()) throw ParseError(line, "section is not an object");
      Section section;
      section.heading = string_field(s, "heading", line, "section");
      if (section.heading.empty())
        throw ParseError(line, "section heading is empty");
      section.path = path;

      std::vector<std::string> full = path;
      full.push_back(section.heading);
      if (!heading_paths.insert(full).second)
        throw IntegrityError("page \"" + page_id +
                             "\" repeats heading path \"" +
                             make_query_id(page_id, full) + "\" (line " +
                             std::to_string(line) + ")");

      for (const json& p : array_field(s, "paragraphs", line, "section")) {
        std::string id = add_paragraph_object(p, line);
        if (!seen_in_page.insert(id).second)
          throw IntegrityError("paragraph \"" + id +
                               "\" referenced twice on page \"" + page_id +
                               "\" (line " + std::to_string(line) + ")");
        section.paragraphs.push_back(std::move(id));
      }
      path.push_back(section.heading);
      section.children = parse_sections(
          array_field(s, "children", line, "section"), path, seen_in_page,
          heading_paths, page_id, line);
      path.pop_back();
      out.push_back(std::move(section));
    }
    return out;
  }

  // Returns the paragraph id; defines the paragraph when "text" is present.
  std::string add_paragraph_object(const json& p, size_t line) {
    if (!p.is_object()) throw ParseError(line, "paragraph is not an object");
    std::string id = string_field(p, "id", line, "paragraph");
    if (id.empty() || has_space_or_control(id))
      throw ParseError(line, "paragraph id \"" + id +
                                 "\" is empty or contains whitespace");
    auto text = p.find("text");
    if (text == p.end()) {
      references_.emplace(id, line);
      return id;
    }
    if (!text->is_string())
      throw ParseError(line, "paragraph \"" + id + "\" text is not a string");
    std::string body = text->get<std::string>();
    if (body.empty())
      throw ParseError(line, "paragraph \"" + id + "\" has empty text");
    auto [it, inserted] =
        corpus_.paragraphs.emplace(id, Paragraph{id, std::move(body)});
    if (!inserted)
      throw IntegrityError("duplicate paragraph id \"" + id + "\" (line " +
                           std::to_string(line) + ")");
    return id;
  }

  Corpus corpus_;
  std::unordered_set<std::string> page_ids_;
  // First line each undefined-at-the-time id was referenced on.
  std::map<std::string, size_t> references_;
};

void collect_queries(const Page& page, const std::vector<Section>& sections,
                     const TokenPipelineConfig& cfg,
                     std::vector<HeadingQuery>& out) {
  for (const Section& s : sections) {
    HeadingQuery q;
    std::vector<std::string> full = s.path;
    full.push_back(s.heading);
    q.query_id = make_query_id(page.id, full);
    q.page_id = page.id;
    q.heading = s.heading;
    q.raw_text = s.heading;
    for (auto it = s.path.rbegin(); it != s.path.rend(); ++it) {
      q.raw_text.push_back(' ');
      q.raw_text += *it;
    }
    q.raw_text.push_back(' ');
    q.raw_text += page.title;
    q.terms = tokenize(q.raw_text, cfg);
    out.push_back(std::move(q));
    collect_queries(page, s.children, cfg, out);
  }
}

}  // namespace

const Paragraph& Corpus::paragraph(const std::string& id) const {
  auto it = paragraphs.find(id);
  if (it == paragraphs.end())
    throw std::out_of_range("unknown paragraph id \"" + id + "\"");
  return it->second;
}

std::vector<std::string> Corpus::paragraph_ids() const {
  std::vector<std::string> ids;
  ids.reserve(paragraphs.size());
  for (const auto& [id, p] : paragraphs) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

size_t Corpus::section_count() const {
  size_t n = 0;
  for (const Page& page : pages)
    for_each_section(page, [&](const Page&, const Section&) { ++n; });
  return n;
}

size_t Qrels::positive_count() const {
  size_t n = 0;
  for (const auto& [q, rows] : entries)
    for (const auto& [p, grade] : rows)
      if (grade > 0) ++n;
  return n;
}

std::vector<std::string> Qrels::relevant(const std::string& query_id) const {
  std::vector<std::string> out;
  auto it = entries.find(query_id);
  if (it == entries.end()) return out;
  for (const auto& [p, grade] : it->second)
    if (grade > 0) out.push_back(p);
  return out;
}

int FoldAssignment::fold(const std::string& page_id) const {
  auto it = fold_of_page.find(page_id);
  if (it == fold_of_page.end())
    throw std::out_of_range("page \"" + page_id + "\" has no fold");
  return it->second;
}

std::vector<std::string> FoldAssignment::pages_in(int f) const {
  std::vector<std::string> out;
  for (const auto& [page, fold] : fold_of_page)
    if (fold == f) out.push_back(page);
  return out;
}

Corpus parse_corpus(std::istream& in) {
  CorpusBuilder builder;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    builder.add_line(line, line_no);
  }
  return builder.finish();
}

std::string encode_id_component(std::string_view s) {
  static const char* kHex = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if (c <= 0x20 || c == 0x7f || c == '%' || c == '/') {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xf]);
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

std::string make_query_id(const std::string& page_id,
                          const std::vector<std::string>& heading_path) {
  std::string id = encode_id_component(page_id);
  for (const std::string& h : heading_path) {
    id.push_back('/');
    id += encode_id_component(h);
  }
  return id;
}

std::vector<HeadingQuery> build_queries(const Page& page,
                                        const TokenPipelineConfig& cfg) {
  std::vector<HeadingQuery> out;
  collect_queries(page, page.sections, cfg, out);
  return out;
}

std::vector<HeadingQuery> build_queries(const Corpus& corpus,
                                        const TokenPipelineConfig& cfg) {
  std::vector<HeadingQuery> out;
  for (const Page& page : corpus.pages) collect_queries(page, page.sections, cfg, out);
  return out;
}

Qrels derive_qrels(const Corpus& corpus) {
  Qrels qrels;
  for (const Page& page : corpus.pages) {
    for_each_section(page, [&](const Page& pg, const Section& s) {
      std::vector<std::string> full = s.path;
      full.push_back(s.heading);
      auto& rows = qrels.entries[make_query_id(pg.id, full)];
      for (const std::string& p : s.paragraphs) rows[p] = 1;
    });
  }
  return qrels;
}

FoldAssignment assign_folds(const Corpus& corpus, int k, uint64_t seed) {
  if (k < 2) throw std::invalid_argument("fold count must be at least 2");
  if (static_cast<size_t>(k) > corpus.pages.size())
    throw std::invalid_argument("fold count " + std::to_string(k) +
                                " exceeds page count " +
                                std::to_string(corpus.pages.size()));
  std::vector<std::string> ids;
  ids.reserve(corpus.pages.size());
  for (const Page& p : corpus.pages) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());
  Rng rng(seed);
  rng.shuffle(ids);
  FoldAssignment folds;
  folds.k = k;
  for (size_t i = 0; i < ids.size(); ++i)
    folds.fold_of_page[ids[i]] = static_cast<int>(i % static_cast<size_t>(k));
  return folds;
}

void write_qrels(std::ostream& out, const Qrels& qrels, bool positives_only) {
  for (const auto& [q, rows] : qrels.entries)
    for (const auto& [p, grade] : rows)
      if (!positives_only || grade > 0)
        out << q << " 0 " << p << ' ' << grade << '\n';
}

Qrels read_qrels(std::istream& in) {
  Qrels qrels;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string q, iter, p, grade_s, extra;
    if (!(fields >> q >> iter >> p >> grade_s) || (fields >> extra))
      throw ParseError(line_no, "qrels row must have 4 fields");
    int grade;
    try {
      size_t used = 0;
      grade = std::stoi(grade_s, &used);
      if (used != grade_s.size()) throw std::invalid_argument(grade_s);
    } catch (const std::exception&) {
      throw ParseError(line_no, "qrels grade \"" + grade_s +
                                    "\" is not an integer");
    }
    auto [it, inserted] = qrels.entries[q].emplace(p, grade);
    if (!inserted)
      throw ParseError(line_no, "duplicate qrels row for (" + q + ", " + p + ")");
  }
  return qrels;
}

}  // namespace carrank
