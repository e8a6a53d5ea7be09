#include "carrank/synth.h"

#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "carrank/random.h"
#include "json.hpp"

namespace carrank {

namespace {

const char* const kHeadings[] = {
    "History",   "Geography", "Economy",  "Culture",      "Climate",    "Politics",
    "Education", "Transport", "Religion", "Architecture", "Demographics", "Sports",
    "Media",     "Tourism",   "Legacy",   "Government",   "Cuisine",    "Wildlife",
    "Music",     "Industry",  "Science",  "Health",       "Festivals",  "Literature"};
constexpr size_t kHeadingCount = sizeof kHeadings / sizeof kHeadings[0];

// Letters only, so the tokenizer keeps them whole.
std::string word(char prefix, size_t i) {
  std::string s(1, prefix);
  do {
    s.push_back(static_cast<char>('a' + i % 26));
    i /= 26;
  } while (i);
  return s + "o";
}

std::string heading_word(size_t h, size_t i) { return word('h', h * 64 + i); }
std::string noise_word(size_t i) { return word('n', i); }
std::string title_word(size_t p) { return word('t', p); }

void append_vector(std::string& out, const std::string& key, const std::vector<double>& v) {
  out += key;
  char buf[32];
  for (double x : v) {
    std::snprintf(buf, sizeof buf, " %.6f", x);
    out += buf;
  }
  out.push_back('\n');
}

std::vector<double> gaussian_like(Rng& rng, size_t dim) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.uniform() + rng.uniform() + rng.uniform() - 1.5;
  return v;
}

}  // namespace

void SynthSpec::validate() const {
  if (pages < 2) throw std::invalid_argument("synth: need at least 2 pages");
  if (min_sections == 0 || min_sections > max_sections)
    throw std::invalid_argument("synth: bad section range");
  if (max_sections > heading_pool)
    throw std::invalid_argument("synth: max_sections exceeds the heading pool");
  if (heading_pool > kHeadingCount)
    throw std::invalid_argument("synth: heading pool larger than " +
                                std::to_string(kHeadingCount));
  if (min_paragraphs == 0 || min_paragraphs > max_paragraphs)
    throw std::invalid_argument("synth: bad paragraph range");
  if (heading_words == 0 || noise_words == 0 || paragraph_length < 2 || dim == 0)
    throw std::invalid_argument("synth: vocabulary, length and dim must be positive");
  if (!(heading_share >= 0.0 && heading_share <= 1.0))
    throw std::invalid_argument("synth: heading_share must be in [0, 1]");
}

SynthCollection synth_collection(const SynthSpec& spec) {
  spec.validate();
  Rng rng(stable_hash(spec.seed, "synth"));
  SynthCollection out;

  size_t next_paragraph = 0;
  for (size_t p = 0; p < spec.pages; ++p) {
    std::vector<size_t> pool(spec.heading_pool);
    for (size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    const size_t n_sections =
        spec.min_sections + rng.below(spec.max_sections - spec.min_sections + 1);
    nlohmann::json sections = nlohmann::json::array();
    for (size_t h : rng.sample(pool, n_sections)) {
      nlohmann::json paragraphs = nlohmann::json::array();
      const size_t n = spec.min_paragraphs + rng.below(spec.max_paragraphs - spec.min_paragraphs + 1);
      for (size_t i = 0; i < n; ++i) {
        std::string text = title_word(p);
        for (size_t t = 1; t < spec.paragraph_length; ++t) {
          text.push_back(' ');
          text += rng.uniform() < spec.heading_share
                      ? heading_word(h, rng.below(spec.heading_words))
                      : noise_word(rng.below(spec.noise_words));
        }
        char id[24];
        std::snprintf(id, sizeof id, "sp%06zu", next_paragraph++);
        paragraphs.push_back({{"id", id}, {"text", text}});
      }
      sections.push_back({{"heading", kHeadings[h]}, {"paragraphs", paragraphs}});
    }
    char id[16];
    std::snprintf(id, sizeof id, "page%03zu", p);
    nlohmann::json page = {{"id", id},
                           {"title", "Topic " + title_word(p)},
                           {"sections", sections}};
    out.corpus_jsonl += page.dump() + "\n";
  }

  // Heading words cluster around a per-heading centre; noise and title words
  // are scattered.
  for (size_t h = 0; h < spec.heading_pool; ++h) {
    auto centre = gaussian_like(rng, spec.dim);
    for (size_t i = 0; i < spec.heading_words; ++i) {
      auto v = gaussian_like(rng, spec.dim);
      for (size_t d = 0; d < spec.dim; ++d) v[d] = centre[d] + 0.3 * v[d];
      append_vector(out.word_embeddings, heading_word(h, i), v);
    }
    // One entity per heading, mentioned by its first two heading words.
    const std::string entity = std::string("E:") + kHeadings[h];
    out.gazetteer += heading_word(h, 0) + "\t" + entity + "\n";
    out.gazetteer += heading_word(h, 1) + "\t" + entity + "\n";
    append_vector(out.entity_embeddings, entity, centre);
  }
  for (size_t i = 0; i < spec.noise_words; ++i)
    append_vector(out.word_embeddings, noise_word(i), gaussian_like(rng, spec.dim));
  for (size_t p = 0; p < spec.pages; ++p) {
    append_vector(out.word_embeddings, title_word(p), gaussian_like(rng, spec.dim));
    const std::string entity = "E:page" + std::to_string(p);
    out.gazetteer += title_word(p) + "\t" + entity + "\n";
    append_vector(out.entity_embeddings, entity, gaussian_like(rng, spec.dim));
  }
  return out;
}

Resources SynthWorld::resources() const {
  Resources r;
  r.corpus = &corpus;
  r.index = &index;
  r.word_embeddings = &words;
  r.entity_embeddings = &entities;
  r.linker = &linker;
  r.support_corpus = &corpus;
  r.folds = &folds;
  return r;
}

std::unique_ptr<const SynthWorld> load_synth(const SynthCollection& files, int folds,
                                             uint64_t seed) {
  std::istringstream c(files.corpus_jsonl), w(files.word_embeddings), g(files.gazetteer),
      e(files.entity_embeddings);
  Corpus corpus = parse_corpus(c);
  Index index = Index::build(corpus, TokenPipelineConfig::standard());
  FoldAssignment f = assign_folds(corpus, folds, seed);
  return std::unique_ptr<const SynthWorld>(
      new SynthWorld{std::move(corpus), std::move(index), EmbeddingStore::load(w),
                     EmbeddingStore::load(e), GazetteerLinker::load(g), std::move(f)});
}

}  // namespace carrank
