#include "carrank/textproc.h"

#include <algorithm>
#include <string>

namespace carrank {

namespace {

// Kept in sync with data/stopwords.txt (checked by textproc_test).
constexpr const char* kStopwords[] = {
    "a", "about", "above", "after", "again", "against", "ain", "all", "also",
    "am", "among", "an", "and", "any", "are", "aren", "as", "at", "be",
    "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "couldn", "d", "did", "didn", "do", "does", "doesn",
    "doing", "don", "down", "during", "each", "few", "for", "from", "further",
    "had", "hadn", "has", "hasn", "have", "haven", "having", "he", "her",
    "here", "hers", "herself", "him", "himself", "his", "how", "however", "i",
    "if", "in", "into", "is", "isn", "it", "its", "itself", "just", "ll", "m",
    "ma", "may", "me", "might", "mightn", "more", "most", "must", "mustn",
    "my", "myself", "needn", "no", "nor", "not", "now", "o", "of", "off", "on",
    "once", "only", "onto", "or", "other", "our", "ours", "ourselves", "out",
    "over", "own", "per", "re", "s", "same", "shall", "shan", "she", "should",
    "shouldn", "so", "some", "such", "t", "than", "that", "the", "their",
    "theirs", "them", "themselves", "then", "there", "these", "they", "this",
    "those", "through", "to", "too", "under", "until", "up", "upon", "us",
    "ve", "very", "via", "was", "wasn", "we", "were", "weren", "what", "when",
    "where", "which", "while", "who", "whom", "whose", "why", "will", "with",
    "within", "without", "won", "would", "wouldn", "y", "yet", "you", "your",
    "yours", "yourself", "yourselves",
};

std::shared_ptr<const StopwordSet> shared_default_stopwords() {
  static const auto set = std::make_shared<const StopwordSet>(
      std::begin(kStopwords), std::end(kStopwords));
  return set;
}

std::shared_ptr<const StopwordSet> empty_stopwords() {
  static const auto set = std::make_shared<const StopwordSet>();
  return set;
}

bool is_ascii_alnum(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9');
}

bool is_token_byte(unsigned char c) { return c >= 0x80 || is_ascii_alnum(c); }

bool all_digits(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

const StopwordSet& default_stopwords() { return *shared_default_stopwords(); }

StopwordSet load_stopwords(std::istream& in) {
  StopwordSet words;
  std::string line;
  while (std::getline(in, line)) {
    auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos || line[begin] == '#') continue;
    auto end = line.find_last_not_of(" \t\r");
    std::string word = line.substr(begin, end - begin + 1);
    std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) {
      return c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                  : static_cast<char>(c);
    });
    words.insert(std::move(word));
  }
  return words;
}

TokenPipelineConfig TokenPipelineConfig::standard() {
  return {shared_default_stopwords(), true, false};
}

TokenPipelineConfig TokenPipelineConfig::heading() {
  return {shared_default_stopwords(), true, true};
}

TokenPipelineConfig TokenPipelineConfig::surface() {
  return {shared_default_stopwords(), false, false};
}

TokenPipelineConfig TokenPipelineConfig::raw() {
  return {empty_stopwords(), false, false};
}

bool TokenPipelineConfig::is_stopword(std::string_view word) const {
  return stopwords != nullptr && stopwords->find(word) != stopwords->end();
}

std::vector<Token> tokenize(std::string_view text,
                            const TokenPipelineConfig& cfg) {
  std::vector<Token> out;
  size_t i = 0;
  const size_t n = text.size();
  std::string word;
  while (i < n) {
    while (i < n && !is_token_byte(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n) break;
    word.clear();
    while (i < n && is_token_byte(static_cast<unsigned char>(text[i]))) {
      unsigned char c = static_cast<unsigned char>(text[i]);
      word.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                          : static_cast<char>(c));
      ++i;
    }
    if (cfg.is_stopword(word)) continue;
    if (cfg.drop_digits && all_digits(word)) continue;
    if (cfg.stem) {
      std::string stemmed = porter_stem(word);
      // Stemming can land on a stopword ("ones" -> "on").
      if (!stemmed.empty() && !cfg.is_stopword(stemmed))
        out.push_back(std::move(stemmed));
    } else {
      out.push_back(word);
    }
  }
  return out;
}

std::vector<Token> normalize_heading(std::string_view heading) {
  static const TokenPipelineConfig cfg = TokenPipelineConfig::heading();
  return tokenize(heading, cfg);
}

std::string heading_key(std::string_view heading) {
  std::string key;
  for (const Token& t : normalize_heading(heading)) {
    if (!key.empty()) key.push_back(' ');
    key += t;
  }
  return key;
}

}  // namespace carrank
