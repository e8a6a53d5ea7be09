#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "carrank/experiment.h"

namespace carrank {

// Shape of a generated outline collection. Every page draws distinct
// headings from a shared pool; paragraphs under a heading mix words from
// that heading's own vocabulary with the page's title word and background
// noise, so sections with the same heading resemble each other across pages.
struct SynthSpec {
  size_t pages = 50;
  size_t min_sections = 4;
  size_t max_sections = 8;
  size_t min_paragraphs = 1;  // per section
  size_t max_paragraphs = 4;
  size_t heading_pool = 12;
  size_t heading_words = 8;
  size_t noise_words = 400;
  size_t paragraph_length = 30;
  double heading_share = 0.25;  // of paragraph tokens
  size_t dim = 16;
  uint64_t seed = 0;

  // Throws std::invalid_argument on an impossible shape.
  void validate() const;
};

// The generated files, in the formats the loaders read.
struct SynthCollection {
  std::string corpus_jsonl;
  std::string word_embeddings;
  std::string gazetteer;
  std::string entity_embeddings;
};

SynthCollection synth_collection(const SynthSpec& spec);

// A parsed collection with its index (standard pipeline), embeddings,
// gazetteer and a seeded page-fold assignment.
struct SynthWorld {
  Corpus corpus;
  Index index;
  EmbeddingStore words;
  EmbeddingStore entities;
  GazetteerLinker linker;
  FoldAssignment folds;

  // Pointers into this world; Rocchio support comes from the corpus by fold.
  Resources resources() const;
};

std::unique_ptr<const SynthWorld> load_synth(const SynthCollection& files, int folds = 5,
                                             uint64_t seed = 0);

}  // namespace carrank
