#pragma once

// Sentence segmentation, n-gram profiles, ROUGE and abstractiveness
// statistics. Tokens are lowercased whitespace-delimited runs throughout; no
// stemming and no stopword removal.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "persumm/errors.hpp"

namespace persumm::textproc {

struct SentenceRecord {
  std::string thread_id;
  std::string answer_id;
  std::size_t index = 0;
  std::string text;

  bool operator==(const SentenceRecord&) const = default;
};

struct NGramProfile {
  std::size_t n = 1;
  std::map<std::string, std::size_t> counts;

  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& [gram, c] : counts) t += c;
    return t;
  }
};

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Maximal non-whitespace runs, case preserved.
inline std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

inline std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::vector<std::string> tokenize(std::string_view text) {
  auto tokens = split_whitespace(text);
  for (auto& t : tokens) t = to_lower(t);
  return tokens;
}

// Lowercased tokens that end in a period but do not end a sentence.
inline const std::array<std::string_view, 24>& abbreviations() {
  static constexpr std::array<std::string_view, 24> kTable = {
      "e.g.", "i.e.",  "mr.",   "mrs.", "ms.",  "dr.",  "prof.", "sr.",
      "jr.",  "st.",   "vs.",   "cf.",  "fig.", "no.",  "approx.", "inc.",
      "ltd.", "co.",   "corp.", "u.s.", "a.m.", "p.m.", "al.",   "resp."};
  return kTable;
}

inline bool is_abbreviation(std::string_view token) {
  const std::string lower = to_lower(token);
  const auto& table = abbreviations();
  return std::find(table.begin(), table.end(), lower) != table.end();
}

namespace detail {

inline bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
inline bool is_opener(char c) { return c == '"' || c == '\'' || c == '(' || c == '['; }

// True when the token carries sentence-final punctuation, allowing trailing
// closing quotes or brackets ("done.)" or "right?\"").
inline bool ends_sentence(std::string_view token) {
  std::size_t end = token.size();
  while (end > 0 && is_closer(token[end - 1])) --end;
  if (end == 0) return false;
  const char last = token[end - 1];
  return last == '.' || last == '!' || last == '?';
}

inline bool starts_sentence(std::string_view token) {
  std::size_t i = 0;
  while (i < token.size() && is_opener(token[i])) ++i;
  if (i == token.size()) return false;
  const auto c = static_cast<unsigned char>(token[i]);
  return std::isupper(c) != 0 || std::isdigit(c) != 0;
}

}  // namespace detail

// Rule-based splitter: a boundary follows a token ending in '.', '!' or '?'
// when the next token starts with an uppercase letter or digit, unless the
// token is a listed abbreviation. Sentences are rejoined with single spaces,
// so the token sequence is preserved exactly.
inline std::vector<std::string> segment(std::string_view text) {
  const auto tokens = split_whitespace(text);
  std::vector<std::string> sentences;
  std::string current;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!current.empty()) current += ' ';
    current += tokens[i];
    const bool last = i + 1 == tokens.size();
    if (last) break;
    if (detail::ends_sentence(tokens[i]) && !is_abbreviation(tokens[i]) &&
        detail::starts_sentence(tokens[i + 1])) {
      sentences.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) sentences.push_back(std::move(current));
  return sentences;
}

namespace detail {

inline std::vector<std::string> ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  std::vector<std::string> out;
  if (tokens.size() < n) return out;
  out.reserve(tokens.size() - n + 1);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string g = tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      g += ' ';
      g += tokens[i + k];
    }
    out.push_back(std::move(g));
  }
  return out;
}

inline std::unordered_map<std::string, std::size_t> count(const std::vector<std::string>& grams) {
  std::unordered_map<std::string, std::size_t> c;
  for (const auto& g : grams) ++c[g];
  return c;
}

inline double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

inline void require_n(std::size_t n) {
  if (n < 1) throw ArgumentError("n-gram order must be >= 1");
}

}  // namespace detail

inline NGramProfile ngram_profile(std::string_view text, std::size_t n) {
  detail::require_n(n);
  NGramProfile p;
  p.n = n;
  for (auto& g : detail::ngrams(tokenize(text), n)) ++p.counts[g];
  return p;
}

// Fraction of summary n-gram occurrences whose n-gram never occurs in the
// source.
inline double novel_ngram_pct(std::string_view summary, std::string_view source, std::size_t n) {
  detail::require_n(n);
  const auto grams = detail::ngrams(tokenize(summary), n);
  if (grams.empty()) {
    throw UndefinedStatisticError("summary has no " + std::to_string(n) + "-grams");
  }
  const auto source_grams = detail::ngrams(tokenize(source), n);
  const std::unordered_set<std::string> seen(source_grams.begin(), source_grams.end());
  std::size_t novel = 0;
  for (const auto& g : grams) novel += seen.count(g) == 0 ? 1 : 0;
  return static_cast<double>(novel) / static_cast<double>(grams.size());
}

// ROUGE-N with clipped counts.
inline RougeScore rouge_n(std::string_view candidate, std::string_view reference, std::size_t n) {
  detail::require_n(n);
  const auto cand = detail::ngrams(tokenize(candidate), n);
  const auto ref = detail::ngrams(tokenize(reference), n);
  const auto cand_counts = detail::count(cand);
  const auto ref_counts = detail::count(ref);
  std::size_t overlap = 0;
  for (const auto& [g, c] : cand_counts) {
    auto it = ref_counts.find(g);
    if (it != ref_counts.end()) overlap += std::min(c, it->second);
  }
  RougeScore s;
  if (!cand.empty()) s.precision = static_cast<double>(overlap) / static_cast<double>(cand.size());
  if (!ref.empty()) s.recall = static_cast<double>(overlap) / static_cast<double>(ref.size());
  s.f1 = detail::f1(s.precision, s.recall);
  return s;
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline RougeScore rouge_l(std::string_view candidate, std::string_view reference) {
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  const double lcs = static_cast<double>(lcs_length(cand, ref));
  RougeScore s;
  if (!cand.empty()) s.precision = lcs / static_cast<double>(cand.size());
  if (!ref.empty()) s.recall = lcs / static_cast<double>(ref.size());
  s.f1 = detail::f1(s.precision, s.recall);
  return s;
}

struct SummaryPair {
  std::string input;
  std::string summary;
};

struct DatasetStats {
  std::size_t pairs = 0;
  double mean_input_tokens = 0.0;
  double mean_summary_tokens = 0.0;
  // Mean over pairs of summary_tokens / input_tokens.
  double compression = 0.0;
  // Indexed by n - 1 for n = 1, 2, 3. Pairs whose summary is shorter than n
  // tokens do not contribute to that order; `novel_counted` says how many did.
  std::array<double, 3> novel_ngram{};
  std::array<std::size_t, 3> novel_counted{};
};

namespace detail {

// Sorted accumulation makes the mean independent of corpus order.
inline double order_free_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace detail

inline DatasetStats dataset_stats(const std::vector<SummaryPair>& corpus) {
  if (corpus.empty()) throw EmptyCorpusError("dataset_stats needs at least one pair");
  std::vector<double> in_tokens, sum_tokens, ratio;
  std::array<std::vector<double>, 3> novel;
  for (const auto& p : corpus) {
    const auto in = count_words(p.input);
    const auto su = count_words(p.summary);
    if (in == 0) throw UndefinedStatisticError("pair with empty input has no compression ratio");
    in_tokens.push_back(static_cast<double>(in));
    sum_tokens.push_back(static_cast<double>(su));
    ratio.push_back(static_cast<double>(su) / static_cast<double>(in));
    for (std::size_t n = 1; n <= 3; ++n) {
      if (su >= n) novel[n - 1].push_back(novel_ngram_pct(p.summary, p.input, n));
    }
  }
  DatasetStats s;
  s.pairs = corpus.size();
  s.mean_input_tokens = detail::order_free_mean(in_tokens);
  s.mean_summary_tokens = detail::order_free_mean(sum_tokens);
  s.compression = detail::order_free_mean(ratio);
  for (std::size_t k = 0; k < 3; ++k) {
    s.novel_counted[k] = novel[k].size();
    s.novel_ngram[k] = detail::order_free_mean(novel[k]);
  }
  return s;
}

}  // namespace persumm::textproc
