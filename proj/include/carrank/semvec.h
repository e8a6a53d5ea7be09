#pragma once

#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "carrank/corpus.h"
#include "carrank/index.h"

namespace carrank {

struct DenseVector {
  std::vector<double> values;
  // Set when no input token or entity had a stored vector.
  bool empty_coverage = false;

  size_t dim() const { return values.size(); }
  double norm() const;
  // Throws std::invalid_argument on a dimension mismatch.
  double dot(const DenseVector& other) const;
};

// Key to fixed-length float vector. Keys are words or entity ids.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(size_t dim) : dim_(dim) {}

  // One `key v1 ... v_dim` row per line; dim comes from the first row. A
  // leading word2vec `count dim` header line is skipped. Ragged rows,
  // non-finite values and repeated keys throw ParseError.
  static EmbeddingStore load(std::istream& in);

  // Throws std::invalid_argument on a wrong length or non-finite entry.
  void add(std::string key, std::span<const double> values);

  size_t dim() const { return dim_; }
  size_t size() const { return keys_.size(); }
  bool contains(std::string_view key) const { return find(key).has_value(); }
  std::optional<std::span<const float>> find(std::string_view key) const;

 private:
  size_t dim_ = 0;
  std::vector<std::string> keys_;
  std::unordered_map<std::string, size_t> lookup_;
  std::vector<float> data_;
};

// (1/|d|) * sum over covered token occurrences of tfidf(w) * vec(w). Tokens
// are surface forms looked up in the store as-is; tf counts the surface form
// within the bag and df comes from the index term the surface maps to. |d|
// counts occurrences that had a vector.
DenseVector text_vector(std::span<const Token> bag, const EmbeddingStore& store,
                        const Index& ix);

struct EntityMention {
  std::string entity_id;
  uint32_t count;

  bool operator==(const EntityMention&) const = default;
};

// A remote linker could not be reached. Distinct from an empty result.
class LinkerUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EntityLinker {
 public:
  virtual ~EntityLinker() = default;
  // Mentions sorted by entity id.
  virtual std::vector<EntityMention> link(std::string_view text) const = 0;
};

// Case-insensitive exact-surface matcher. Surfaces and text are split with
// the raw token pipeline, then matched longest-first, left to right, without
// overlaps.
class GazetteerLinker : public EntityLinker {
 public:
  // `surface<TAB>entityId` lines; blank and '#' lines skipped. A surface
  // listed twice keeps its first entity.
  static GazetteerLinker load(std::istream& in);

  void add(std::string_view surface, std::string entity_id);
  size_t size() const { return size_; }

  std::vector<EntityMention> link(std::string_view text) const override;

 private:
  struct Node {
    std::map<std::string, size_t, std::less<>> next;
    std::optional<std::string> entity;
  };
  std::vector<Node> nodes_{Node{}};
  size_t size_ = 0;
};

// Memoizes another linker by exact text so repeated calls agree.
class CachingLinker : public EntityLinker {
 public:
  explicit CachingLinker(const EntityLinker& inner) : inner_(inner) {}
  std::vector<EntityMention> link(std::string_view text) const override;

 private:
  const EntityLinker& inner_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, std::vector<EntityMention>> cache_;
};

struct EntityStats {
  std::unordered_map<std::string, uint64_t> link_doc_freq;
  uint64_t n_docs = 0;

  // `Ndocs<TAB>n` header, then `entityId<TAB>linkDocFreq` lines. Throws
  // ParseError when a frequency exceeds Ndocs.
  static EntityStats load(std::istream& in);
  // Link document frequencies over every paragraph of the corpus.
  static EntityStats from_corpus(const Corpus& corpus, const EntityLinker& linker);

  double idf(std::string_view entity_id) const;
};

// (1/|E|) * sum over distinct entities with vectors of
// (1 + ln count) * ln(Ndocs / linkDocFreq) * vec(e), |E| being the number of
// those entities.
DenseVector entity_vector(std::span<const EntityMention> mentions,
                          const EmbeddingStore& store, const EntityStats& stats);

using AnyVector = std::variant<SparseVector, DenseVector>;

// dot / (|a| |b|), 0 when either norm is 0. Throws std::invalid_argument for
// dense vectors of different dimension or vectors of different kinds.
double cosine(const SparseVector& a, const SparseVector& b);
double cosine(const DenseVector& a, const DenseVector& b);
double cosine(const AnyVector& a, const AnyVector& b);

// lambda * a/|a| + (1 - lambda) * b/|b|; a zero side contributes nothing.
AnyVector mix(const AnyVector& a, const AnyVector& b, double lambda);
// Mean of the unit-normalized inputs. Throws std::invalid_argument when empty.
AnyVector centroid(std::span<const AnyVector> vectors);

struct WeightedTerm {
  Token term;  // index term
  double weight;
};

struct WeightedEntity {
  std::string entity_id;
  double weight;
};

// A space that texts, queries and feedback lists are projected into.
class VectorSpace {
 public:
  virtual ~VectorSpace() = default;
  virtual std::string name() const = 0;
  virtual AnyVector text_vector(std::string_view text) const = 0;
  virtual AnyVector query_vector(const HeadingQuery& q) const {
    return text_vector(q.raw_text);
  }
  // Throws std::logic_error where the space has no term representation.
  virtual AnyVector terms_vector(std::span<const WeightedTerm> terms) const;
  // Throws std::logic_error where the space has no entity representation.
  virtual AnyVector entities_vector(std::span<const WeightedEntity> entities) const;
};

// Log TF-IDF sparse vectors over the index vocabulary.
class TfidfSpace : public VectorSpace {
 public:
  explicit TfidfSpace(const Index& ix) : ix_(ix) {}
  std::string name() const override { return "tfidf"; }
  AnyVector text_vector(std::string_view text) const override;
  AnyVector terms_vector(std::span<const WeightedTerm> terms) const override;

 private:
  const Index& ix_;
};

// TF-IDF weighted word-embedding averages.
class WordEmbeddingSpace : public VectorSpace {
 public:
  // The corpus supplies the surface forms behind each index term so that
  // stemmed feedback terms can be mapped back to a stored word.
  WordEmbeddingSpace(const Index& ix, const EmbeddingStore& store,
                     const Corpus& corpus);
  std::string name() const override { return "glove"; }
  AnyVector text_vector(std::string_view text) const override;
  // sum of weight * vec(surface(term)); terms without a stored surface skipped.
  AnyVector terms_vector(std::span<const WeightedTerm> terms) const override;

  // Most frequent stored surface form of an index term.
  std::optional<std::string> surface_of(std::string_view term) const;

 private:
  const Index& ix_;
  const EmbeddingStore& store_;
  TokenPipelineConfig surface_cfg_;
  std::unordered_map<std::string, std::string> surface_;
};

// TF-IDF weighted entity-embedding averages over linked entities.
class EntitySpace : public VectorSpace {
 public:
  EntitySpace(const EntityLinker& linker, const EmbeddingStore& store,
              const EntityStats& stats)
      : linker_(linker), store_(store), stats_(stats) {}
  std::string name() const override { return "entity"; }
  AnyVector text_vector(std::string_view text) const override;
  AnyVector entities_vector(std::span<const WeightedEntity> entities) const override;

 private:
  const EntityLinker& linker_;
  const EmbeddingStore& store_;
  const EntityStats& stats_;
};

}  // namespace carrank
