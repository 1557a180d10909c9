#pragma once

// Question threads, ingestion from JSONL or a StackExchange Posts.xml dump,
// and the thread filtering heuristics.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "persumm/errors.hpp"
#include "persumm/textproc.hpp"

namespace persumm::corpus {

struct Answer {
  std::string id;
  std::string body;
  std::int64_t score = 0;
  std::size_t word_count = 0;

  Answer() = default;
  Answer(std::string id_, std::string body_, std::int64_t score_)
      : id(std::move(id_)), body(std::move(body_)), score(score_),
        word_count(textproc::count_words(body)) {}
};

struct QuestionThread {
  std::string thread_id;
  std::string forum;
  std::string title;
  std::string question_body;
  std::vector<std::string> tags;
  std::vector<Answer> answers;
};

// The text handed to relevance scoring: title and body joined by a space.
inline std::string question_text(const QuestionThread& t) {
  if (t.title.empty()) return t.question_body;
  if (t.question_body.empty()) return t.title;
  return t.title + " " + t.question_body;
}

// Exclusive on both ends: a value passes when lo < v < hi.
struct WordInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return lo < v && v < hi; }
};

struct FilterPolicy {
  std::size_t min_answers = 1;
  WordInterval total_words;
  WordInterval avg_words;
  // Reject when the longest answer has at least this many words.
  std::optional<std::size_t> max_longest_answer;
  bool require_nonneg_score = false;

  void validate() const {
    if (min_answers < 1) throw ArgumentError("min_answers must be >= 1");
    if (!(total_words.lo < total_words.hi)) throw ArgumentError("total_words interval is empty");
    if (!(avg_words.lo < avg_words.hi)) throw ArgumentError("avg_words interval is empty");
  }
};

// Threads used for human annotation: at least four non-negative answers,
// total length in (100, 1500) words and mean answer length in (50, 300).
inline FilterPolicy manual_policy() {
  return FilterPolicy{4, {100, 1500}, {50, 300}, std::nullopt, true};
}

// Threads used for silver-data augmentation: at least three answers, longest
// answer under 400 words, total in (100, 1000), mean in (50, 300).
inline FilterPolicy augment_policy() {
  return FilterPolicy{3, {100, 1000}, {50, 300}, 400, false};
}

enum class Rejection { kNone, kTooFewAnswers, kLongestAnswer, kTotalLength, kAverageLength };

inline std::string_view to_string(Rejection r) {
  switch (r) {
    case Rejection::kNone: return "accepted";
    case Rejection::kTooFewAnswers: return "too-few-answers";
    case Rejection::kLongestAnswer: return "longest-answer";
    case Rejection::kTotalLength: return "total-length";
    case Rejection::kAverageLength: return "average-length";
  }
  return "unknown";
}

struct FilterVerdict {
  bool accepted = false;
  Rejection reason = Rejection::kNone;
};

inline QuestionThread drop_negative_answers(QuestionThread t) {
  std::erase_if(t.answers, [](const Answer& a) { return a.score < 0; });
  return t;
}

// Rules are checked in a fixed order (answers, longest, total, average) and
// the first failure is reported.
inline FilterVerdict passes_filter(const QuestionThread& t, const FilterPolicy& p) {
  if (t.answers.size() < p.min_answers) return {false, Rejection::kTooFewAnswers};
  std::size_t total = 0, longest = 0;
  for (const auto& a : t.answers) {
    total += a.word_count;
    longest = std::max(longest, a.word_count);
  }
  if (p.max_longest_answer && longest >= *p.max_longest_answer) {
    return {false, Rejection::kLongestAnswer};
  }
  if (!p.total_words.contains(static_cast<double>(total))) return {false, Rejection::kTotalLength};
  const double mean = static_cast<double>(total) / static_cast<double>(t.answers.size());
  if (!p.avg_words.contains(mean)) return {false, Rejection::kAverageLength};
  return {true, Rejection::kNone};
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::ordered_json to_json(const QuestionThread& t) {
  nlohmann::ordered_json j;
  j["thread_id"] = t.thread_id;
  j["forum"] = t.forum;
  j["title"] = t.title;
  j["question"] = t.question_body;
  j["tags"] = t.tags;
  auto answers = nlohmann::ordered_json::array();
  for (const auto& a : t.answers) {
    answers.push_back({{"id", a.id}, {"body", a.body}, {"score", a.score}});
  }
  j["answers"] = std::move(answers);
  return j;
}

namespace detail {

inline std::string id_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw SchemaError("id must be a string or integer");
}

inline std::string opt_string(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw SchemaError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace detail

// Throws SchemaError on a malformed record.
inline QuestionThread thread_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("record is not an object");
  if (!j.contains("thread_id")) throw SchemaError("missing 'thread_id'");
  if (!j.contains("answers") || !j["answers"].is_array()) throw SchemaError("missing 'answers'");
  QuestionThread t;
  t.thread_id = detail::id_string(j["thread_id"]);
  t.forum = detail::opt_string(j, "forum");
  t.title = detail::opt_string(j, "title");
  t.question_body = detail::opt_string(j, "question");
  if (auto it = j.find("tags"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw SchemaError("'tags' must be an array");
    for (const auto& tag : *it) t.tags.push_back(tag.get<std::string>());
  }
  std::unordered_set<std::string> seen;
  for (const auto& a : j["answers"]) {
    if (!a.is_object() || !a.contains("id") || !a.contains("body")) {
      throw SchemaError("answer needs 'id' and 'body'");
    }
    std::string id = detail::id_string(a["id"]);
    if (!seen.insert(id).second) throw SchemaError("duplicate answer id '" + id + "'");
    const std::int64_t score = a.contains("score") ? a["score"].get<std::int64_t>() : 0;
    t.answers.emplace_back(std::move(id), a["body"].get<std::string>(), score);
  }
  if (t.answers.empty()) throw SchemaError("thread has no answers");
  return t;
}

struct IngestResult {
  std::vector<QuestionThread> threads;
  std::size_t skipped = 0;
};

namespace detail {

inline void add_unique(IngestResult& out, std::unordered_set<std::string>& ids, QuestionThread t) {
  if (!ids.insert(t.thread_id).second) {
    ++out.skipped;
    return;
  }
  out.threads.push_back(std::move(t));
}

}  // namespace detail

inline IngestResult ingest_jsonl(std::istream& in) {
  IngestResult out;
  std::unordered_set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      detail::add_unique(out, ids, thread_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception&) {
      ++out.skipped;
    } catch (const SchemaError&) {
      ++out.skipped;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// StackExchange Posts.xml

namespace detail {

inline std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out += s[i];
      continue;
    }
    const auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out += s[i];
      continue;
    }
    const std::string_view ent = s.substr(i + 1, semi - i - 1);
    std::uint32_t cp = 0;
    bool ok = true;
    if (ent == "lt") cp = '<';
    else if (ent == "gt") cp = '>';
    else if (ent == "amp") cp = '&';
    else if (ent == "quot") cp = '"';
    else if (ent == "apos") cp = '\'';
    else if (ent.size() > 1 && ent[0] == '#') {
      try {
        cp = (ent[1] == 'x' || ent[1] == 'X')
                 ? static_cast<std::uint32_t>(std::stoul(std::string(ent.substr(2)), nullptr, 16))
                 : static_cast<std::uint32_t>(std::stoul(std::string(ent.substr(1))));
      } catch (const std::exception&) {
        ok = false;
      }
    } else {
      ok = false;
    }
    if (!ok) {
      out += s[i];
      continue;
    }
    // UTF-8 encode.
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
    i = semi;
  }
  return out;
}

// Post bodies are HTML; tags become whitespace so words on either side of a
// block element do not fuse.
inline std::string strip_html(std::string_view html) {
  std::string text;
  text.reserve(html.size());
  bool in_tag = false;
  for (char c : html) {
    if (c == '<') {
      in_tag = true;
      text += ' ';
    } else if (c == '>' && in_tag) {
      in_tag = false;
    } else if (!in_tag) {
      text += c;
    }
  }
  return decode_entities(text);
}

inline std::unordered_map<std::string, std::string> row_attributes(const std::string& row) {
  static const std::regex kAttr(R"re(([A-Za-z]+)="([^"]*)")re");
  std::unordered_map<std::string, std::string> attrs;
  for (auto it = std::sregex_iterator(row.begin(), row.end(), kAttr); it != std::sregex_iterator();
       ++it) {
    attrs[(*it)[1].str()] = decode_entities((*it)[2].str());
  }
  return attrs;
}

// Tags come as "<a><b>" in older dumps and "|a|b|" in newer ones.
inline std::vector<std::string> parse_tags(const std::string& raw) {
  std::vector<std::string> tags;
  std::string cur;
  for (char c : raw) {
    if (c == '<' || c == '>' || c == '|') {
      if (!cur.empty()) tags.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) tags.push_back(std::move(cur));
  return tags;
}

}  // namespace detail

inline IngestResult ingest_posts_xml(std::istream& in, const std::string& forum = "") {
  IngestResult out;
  std::vector<QuestionThread> questions;
  std::unordered_map<std::string, std::size_t> by_id;
  struct PendingAnswer {
    std::string parent;
    Answer answer;
  };
  std::vector<PendingAnswer> pending;

  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find("<row ");
    if (pos == std::string::npos) continue;
    auto attrs = detail::row_attributes(line.substr(pos));
    const auto type = attrs.find("PostTypeId");
    const auto id = attrs.find("Id");
    if (type == attrs.end() || id == attrs.end()) {
      ++out.skipped;
      continue;
    }
    try {
      if (type->second == "1") {
        QuestionThread t;
        t.thread_id = id->second;
        t.forum = forum;
        t.title = attrs["Title"];
        t.question_body = detail::strip_html(attrs["Body"]);
        t.tags = detail::parse_tags(attrs["Tags"]);
        if (by_id.count(t.thread_id) != 0) {
          ++out.skipped;
          continue;
        }
        by_id[t.thread_id] = questions.size();
        questions.push_back(std::move(t));
      } else if (type->second == "2") {
        const auto parent = attrs.find("ParentId");
        if (parent == attrs.end()) {
          ++out.skipped;
          continue;
        }
        const std::int64_t score = attrs.count("Score") ? std::stoll(attrs["Score"]) : 0;
        pending.push_back({parent->second, Answer(id->second, detail::strip_html(attrs["Body"]), score)});
      }
      // Other post types (wiki, tag excerpts) are not part of a thread.
    } catch (const std::exception&) {
      ++out.skipped;
    }
  }
  for (auto& p : pending) {
    auto it = by_id.find(p.parent);
    if (it == by_id.end()) {
      ++out.skipped;
      continue;
    }
    questions[it->second].answers.push_back(std::move(p.answer));
  }
  for (auto& q : questions) {
    if (q.answers.empty()) {
      ++out.skipped;
    } else {
      out.threads.push_back(std::move(q));
    }
  }
  return out;
}

// Detects the format from the first non-blank character: '<' means XML.
inline IngestResult ingest(std::istream& in, const std::string& forum = "") {
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string data = buffer.str();
  const auto first = data.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
  IngestResult out;
  std::istringstream stream(data);
  if (first != std::string::npos && data[first] == '<') {
    out = ingest_posts_xml(stream, forum);
  } else {
    out = ingest_jsonl(stream);
  }
  if (out.threads.empty()) throw EmptyCorpusError("no threads parsed from input");
  return out;
}

inline IngestResult ingest_file(const std::string& path, const std::string& forum = "") {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  return ingest(in, forum);
}

}  // namespace persumm::corpus
