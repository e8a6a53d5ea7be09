#pragma once

#include <istream>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace carrank {

// A lowercase, whitespace-free surface form produced by the token pipeline.
using Token = std::string;

using StopwordSet = std::set<std::string, std::less<>>;

// The built-in English stopword list (data/stopwords.txt carries the same
// words, one per line).
const StopwordSet& default_stopwords();

// Reads one word per line; blank lines and lines starting with '#' are
// ignored. Words are lowercased.
StopwordSet load_stopwords(std::istream& in);

struct TokenPipelineConfig {
  std::shared_ptr<const StopwordSet> stopwords;
  bool stem = true;
  bool drop_digits = false;

  // Built-in stopwords, stemming on, digits kept: the body-text pipeline.
  static TokenPipelineConfig standard();
  // Same as standard() with digits removed: the heading-key pipeline.
  static TokenPipelineConfig heading();
  // Stopwords removed, no stemming. Used where surface forms must survive
  // (embedding lookups, gazetteer matching).
  static TokenPipelineConfig surface();
  // Nothing removed, nothing stemmed.
  static TokenPipelineConfig raw();

  bool is_stopword(std::string_view word) const;
};

// Porter (1980) suffix stripping on a lowercase ASCII word. Bytes outside
// [a-z] are treated as consonants.
std::string porter_stem(std::string_view word);

// Lowercases ASCII, splits on runs of ASCII non-alphanumerics (bytes >= 0x80
// stay inside tokens), then removes stopwords, drops pure-digit tokens when
// configured, and stems when configured. Filtering happens on the unstemmed
// surface form.
std::vector<Token> tokenize(std::string_view text,
                            const TokenPipelineConfig& cfg);

// tokenize() under TokenPipelineConfig::heading().
std::vector<Token> normalize_heading(std::string_view heading);

// normalize_heading() joined by single spaces; the same-heading match key.
std::string heading_key(std::string_view heading);

}  // namespace carrank
