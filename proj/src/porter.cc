// Porter suffix-stripping stemmer, following the rule tables of the original
// 1980 description (ABLI->ABLE, no LOGI rule, no short-word exemption).
// Within a step only the longest matching suffix is considered; when its
// condition fails the step does nothing.

#include <array>
#include <string>
#include <string_view>

#include "carrank/textproc.h"

namespace carrank {

namespace {

struct Rule {
  std::string_view suffix;
  std::string_view replacement;
};

bool is_consonant(const std::string& w, size_t i) {
  switch (w[i]) {
    case 'a':
    case 'e':
    case 'i':
    case 'o':
    case 'u':
      return false;
    case 'y':
      return i == 0 ? true : !is_consonant(w, i - 1);
    default:
      return true;
  }
}

// m in [C](VC)^m[V] over w[0, len).
int measure(const std::string& w, size_t len) {
  int m = 0;
  size_t i = 0;
  while (i < len && is_consonant(w, i)) ++i;
  while (i < len) {
    while (i < len && !is_consonant(w, i)) ++i;
    if (i >= len) break;
    while (i < len && is_consonant(w, i)) ++i;
    ++m;
  }
  return m;
}

bool has_vowel(const std::string& w, size_t len) {
  for (size_t i = 0; i < len; ++i)
    if (!is_consonant(w, i)) return true;
  return false;
}

bool ends_double_consonant(const std::string& w, size_t len) {
  return len >= 2 && w[len - 1] == w[len - 2] && is_consonant(w, len - 1);
}

// *o: stem ends cvc, the final c not w, x or y.
bool ends_cvc(const std::string& w, size_t len) {
  if (len < 3) return false;
  if (!is_consonant(w, len - 3) || is_consonant(w, len - 2) ||
      !is_consonant(w, len - 1))
    return false;
  char c = w[len - 1];
  return c != 'w' && c != 'x' && c != 'y';
}

bool ends_with(const std::string& w, std::string_view suffix) {
  return w.size() >= suffix.size() &&
         std::string_view(w).substr(w.size() - suffix.size()) == suffix;
}

template <size_t N>
const Rule* longest_match(const std::string& w,
                          const std::array<Rule, N>& rules) {
  const Rule* best = nullptr;
  for (const Rule& r : rules)
    if (ends_with(w, r.suffix) &&
        (best == nullptr || r.suffix.size() > best->suffix.size()))
      best = &r;
  return best;
}

void replace_suffix(std::string& w, const Rule& r) {
  w.resize(w.size() - r.suffix.size());
  w.append(r.replacement);
}

void step1a(std::string& w) {
  if (ends_with(w, "sses") || ends_with(w, "ies")) {
    w.resize(w.size() - 2);
  } else if (ends_with(w, "ss")) {
    return;
  } else if (ends_with(w, "s")) {
    w.pop_back();
  }
}

void step1b(std::string& w) {
  if (ends_with(w, "eed")) {
    if (measure(w, w.size() - 3) > 0) w.pop_back();
    return;
  }
  size_t cut = 0;
  if (ends_with(w, "ed"))
    cut = 2;
  else if (ends_with(w, "ing"))
    cut = 3;
  if (cut == 0 || !has_vowel(w, w.size() - cut)) return;
  w.resize(w.size() - cut);

  if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
    w.push_back('e');
  } else if (ends_double_consonant(w, w.size())) {
    char c = w.back();
    if (c != 'l' && c != 's' && c != 'z') w.pop_back();
  } else if (measure(w, w.size()) == 1 && ends_cvc(w, w.size())) {
    w.push_back('e');
  }
}

void step1c(std::string& w) {
  if (ends_with(w, "y") && has_vowel(w, w.size() - 1)) w.back() = 'i';
}

constexpr std::array<Rule, 20> kStep2 = {{
    {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},
    {"anci", "ance"},   {"izer", "ize"},    {"abli", "able"},
    {"alli", "al"},     {"entli", "ent"},   {"eli", "e"},
    {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
    {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"},
    {"fulness", "ful"}, {"ousness", "ous"}, {"aliti", "al"},
    {"iviti", "ive"},   {"biliti", "ble"},
}};

constexpr std::array<Rule, 7> kStep3 = {{
    {"icate", "ic"},
    {"ative", ""},
    {"alize", "al"},
    {"iciti", "ic"},
    {"ical", "ic"},
    {"ful", ""},
    {"ness", ""},
}};

constexpr std::array<Rule, 19> kStep4 = {{
    {"al", ""},  {"ance", ""}, {"ence", ""}, {"er", ""},    {"ic", ""},
    {"able", ""}, {"ible", ""}, {"ant", ""}, {"ement", ""}, {"ment", ""},
    {"ent", ""}, {"ion", ""},  {"ou", ""},  {"ism", ""},   {"ate", ""},
    {"iti", ""}, {"ous", ""},  {"ive", ""}, {"ize", ""},
}};

template <size_t N>
void apply_measured(std::string& w, const std::array<Rule, N>& rules,
                    int min_measure_exclusive) {
  const Rule* r = longest_match(w, rules);
  if (r == nullptr) return;
  size_t stem_len = w.size() - r->suffix.size();
  if (measure(w, stem_len) > min_measure_exclusive) replace_suffix(w, *r);
}

void step4(std::string& w) {
  const Rule* r = longest_match(w, kStep4);
  if (r == nullptr) return;
  size_t stem_len = w.size() - r->suffix.size();
  if (measure(w, stem_len) <= 1) return;
  if (r->suffix == "ion") {
    if (stem_len == 0 || (w[stem_len - 1] != 's' && w[stem_len - 1] != 't'))
      return;
  }
  w.resize(stem_len);
}

void step5(std::string& w) {
  if (ends_with(w, "e")) {
    size_t stem_len = w.size() - 1;
    int m = measure(w, stem_len);
    if (m > 1 || (m == 1 && !ends_cvc(w, stem_len))) w.pop_back();
  }
  if (ends_with(w, "ll") && measure(w, w.size()) > 1) w.pop_back();
}

}  // namespace

std::string porter_stem(std::string_view word) {
  std::string w(word);
  if (w.empty()) return w;
  step1a(w);
  step1b(w);
  step1c(w);
  apply_measured(w, kStep2, 0);
  apply_measured(w, kStep3, 0);
  step4(w);
  step5(w);
  return w;
}

}  // namespace carrank
