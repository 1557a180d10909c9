#pragma once

// Boundary to neural scoring. Embeddings, entailment probabilities and
// question/sentence relevance come either from a hash-keyed fixture file or
// from a scoring service speaking the versioned JSON protocol:
//
//   POST /v1/embed     {"texts": [...]}                 -> {"vectors": [[...]]}
//   POST /v1/entail    {"pairs": [[premise, claim]]}    -> {"probs": [...]}
//   POST /v1/relevance {"question": q, "sentences": [...]} -> {"probs": [...]}
//   GET  /v1/health                                     -> {"status": "ok", "dim": D}
//
// Errors come back as {"error": msg} with a non-200 status.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "persumm/errors.hpp"

namespace persumm::scoring {

// Lowercase, trim and collapse whitespace runs to one space.
inline std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(uc));
  }
  return out;
}

// 64-bit FNV-1a of the normalized text, as 16 lowercase hex digits.
inline std::string text_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : normalize_text(text)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string pair_key(std::string_view first, std::string_view second) {
  return text_hash(first) + "|" + text_hash(second);
}

using TextPair = std::pair<std::string, std::string>;

struct ScoreFixture {
  std::size_t dim = 1;
  std::map<std::string, std::vector<double>> embeddings;
  std::map<std::string, double> entailments;  // "premise|claim"
  std::map<std::string, double> relevance;    // "question|sentence"

  bool operator==(const ScoreFixture&) const = default;
};

inline constexpr int kFixtureVersion = 1;

namespace detail {

inline void check_probability(double p, const std::string& where) {
  if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
    throw SchemaError(where + ": probability " + std::to_string(p) + " outside [0,1]");
  }
}

}  // namespace detail

inline ScoreFixture parse_fixture(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("fixture must be a JSON object");
  if (j.value("version", 0) != kFixtureVersion) throw SchemaError("unsupported fixture version");
  if (!j.contains("dim") || !j["dim"].is_number_integer() || j["dim"].get<long long>() < 1) {
    throw SchemaError("fixture 'dim' must be a positive integer");
  }
  ScoreFixture f;
  f.dim = j["dim"].get<std::size_t>();
  const nlohmann::json embeddings = j.value("embeddings", nlohmann::json::object());
  if (!embeddings.is_object()) throw SchemaError("fixture 'embeddings' must be an object");
  for (const auto& [hash, vec] : embeddings.items()) {
    if (!vec.is_array() || vec.size() != f.dim) {
      throw SchemaError("embedding '" + hash + "' has length " + std::to_string(vec.size()) +
                        ", expected " + std::to_string(f.dim));
    }
    std::vector<double> v = vec.get<std::vector<double>>();
    for (double x : v) {
      if (!std::isfinite(x)) throw SchemaError("embedding '" + hash + "' has a non-finite value");
    }
    f.embeddings.emplace(hash, std::move(v));
  }
  const nlohmann::json entailments = j.value("entailments", nlohmann::json::object());
  if (!entailments.is_object()) throw SchemaError("fixture 'entailments' must be an object");
  for (const auto& [key, p] : entailments.items()) {
    detail::check_probability(p.get<double>(), "entailment '" + key + "'");
    f.entailments.emplace(key, p.get<double>());
  }
  const nlohmann::json relevance = j.value("relevance", nlohmann::json::object());
  if (!relevance.is_object()) throw SchemaError("fixture 'relevance' must be an object");
  for (const auto& [key, p] : relevance.items()) {
    detail::check_probability(p.get<double>(), "relevance '" + key + "'");
    f.relevance.emplace(key, p.get<double>());
  }
  return f;
}

inline nlohmann::ordered_json to_json(const ScoreFixture& f) {
  nlohmann::ordered_json j;
  j["version"] = kFixtureVersion;
  j["dim"] = f.dim;
  j["embeddings"] = nlohmann::ordered_json::object();
  for (const auto& [h, v] : f.embeddings) j["embeddings"][h] = v;
  j["entailments"] = nlohmann::ordered_json::object();
  for (const auto& [k, p] : f.entailments) j["entailments"][k] = p;
  j["relevance"] = nlohmann::ordered_json::object();
  for (const auto& [k, p] : f.relevance) j["relevance"][k] = p;
  return j;
}

inline ScoreFixture load_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read fixture '" + path + "'");
  try {
    return parse_fixture(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("fixture '" + path + "': " + e.what());
  }
}

inline void save_fixture(const ScoreFixture& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write fixture '" + path + "'");
  out << to_json(f).dump(1) << '\n';
}

// ---------------------------------------------------------------------------
// Backends

class ScoreBackend {
 public:
  virtual ~ScoreBackend() = default;

  // Throws when the backend cannot serve requests at all.
  virtual void check_available() = 0;
  virtual std::vector<std::vector<double>> embed(std::span<const std::string> texts) = 0;
  // Probability that `claim` is entailed by `premise`, per pair.
  virtual std::vector<double> entail(std::span<const TextPair> pairs) = 0;
  virtual std::vector<double> relevance(const std::string& question,
                                        std::span<const std::string> sentences) = 0;
};

class FixtureBackend : public ScoreBackend {
 public:
  explicit FixtureBackend(std::shared_ptr<const ScoreFixture> fixture) : fixture_(std::move(fixture)) {}
  explicit FixtureBackend(ScoreFixture fixture)
      : fixture_(std::make_shared<const ScoreFixture>(std::move(fixture))) {}

  const ScoreFixture& fixture() const { return *fixture_; }

  void check_available() override {}

  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
      const auto h = text_hash(t);
      auto it = fixture_->embeddings.find(h);
      if (it == fixture_->embeddings.end()) {
        throw MissingKeyError("fixture has no embedding for hash " + h + " (\"" + t + "\")");
      }
      out.push_back(it->second);
    }
    return out;
  }

  std::vector<double> entail(std::span<const TextPair> pairs) override {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& [premise, claim] : pairs) {
      out.push_back(lookup(fixture_->entailments, pair_key(premise, claim), "entailment"));
    }
    return out;
  }

  std::vector<double> relevance(const std::string& question,
                                std::span<const std::string> sentences) override {
    std::vector<double> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) {
      out.push_back(lookup(fixture_->relevance, pair_key(question, s), "relevance"));
    }
    return out;
  }

 private:
  static double lookup(const std::map<std::string, double>& table, const std::string& key,
                       const char* what) {
    auto it = table.find(key);
    if (it == table.end()) throw MissingKeyError(std::string("fixture has no ") + what + " for " + key);
    return it->second;
  }

  std::shared_ptr<const ScoreFixture> fixture_;
};

// Client for the scoring service. Payloads above `kMaxBatch` items are split
// into consecutive requests; responses are concatenated in request order.
class HttpBackend : public ScoreBackend {
 public:
  static constexpr std::size_t kMaxBatch = 64;

  explicit HttpBackend(std::string base_url, int max_retries = 2)
      : base_url_(std::move(base_url)), max_retries_(max_retries) {
    if (base_url_.rfind("https://", 0) == 0) {
      throw ArgumentError("https endpoints are not supported; terminate TLS outside the client");
    }
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  }

  const std::string& base_url() const { return base_url_; }

  void check_available() override {
    httplib::Client cli(base_url_);
    cli.set_connection_timeout(5);
    auto res = cli.Get("/v1/health");
    if (!res) throw TransportError("scoring service at " + base_url_ + " is unreachable", 0);
    if (res->status != 200) {
      throw TransportError("scoring service health check returned " + std::to_string(res->status), 0);
    }
  }

  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override {
    std::vector<std::vector<double>> out;
    for (std::size_t lo = 0; lo < texts.size(); lo += kMaxBatch) {
      const auto chunk = texts.subspan(lo, std::min(kMaxBatch, texts.size() - lo));
      nlohmann::json body = {{"texts", std::vector<std::string>(chunk.begin(), chunk.end())}};
      auto reply = post("/v1/embed", body);
      auto vectors = field(reply, "vectors", chunk.size());
      for (auto& v : vectors) out.push_back(v.get<std::vector<double>>());
    }
    return out;
  }

  std::vector<double> entail(std::span<const TextPair> pairs) override {
    std::vector<double> out;
    for (std::size_t lo = 0; lo < pairs.size(); lo += kMaxBatch) {
      const auto chunk = pairs.subspan(lo, std::min(kMaxBatch, pairs.size() - lo));
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& [p, c] : chunk) arr.push_back({p, c});
      auto reply = post("/v1/entail", {{"pairs", arr}});
      for (auto& p : field(reply, "probs", chunk.size())) out.push_back(p.get<double>());
    }
    return out;
  }

  std::vector<double> relevance(const std::string& question,
                                std::span<const std::string> sentences) override {
    std::vector<double> out;
    for (std::size_t lo = 0; lo < sentences.size(); lo += kMaxBatch) {
      const auto chunk = sentences.subspan(lo, std::min(kMaxBatch, sentences.size() - lo));
      nlohmann::json body = {{"question", question},
                             {"sentences", std::vector<std::string>(chunk.begin(), chunk.end())}};
      auto reply = post("/v1/relevance", body);
      for (auto& p : field(reply, "probs", chunk.size())) out.push_back(p.get<double>());
    }
    return out;
  }

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body) {
    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
      httplib::Client cli(base_url_);
      cli.set_connection_timeout(5);
      cli.set_read_timeout(120);
      auto res = cli.Post(path, payload, "application/json");
      if (!res) {
        last_error = "no response from " + base_url_ + path + ": " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        std::string msg = "HTTP " + std::to_string(res->status);
        try {
          auto err = nlohmann::json::parse(res->body);
          if (err.contains("error")) msg += ": " + err["error"].get<std::string>();
        } catch (const nlohmann::json::exception&) {
        }
        // Client errors will not improve on retry.
        if (res->status >= 400 && res->status < 500) throw TransportError(path + " " + msg, attempt);
        last_error = msg;
        continue;
      }
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        last_error = std::string("malformed body: ") + e.what();
      }
    }
    throw TransportError(path + " failed: " + last_error, max_retries_);
  }

  nlohmann::json field(const nlohmann::json& reply, const char* key, std::size_t expected) const {
    if (!reply.is_object() || !reply.contains(key) || !reply[key].is_array() ||
        reply[key].size() != expected) {
      throw TransportError(std::string("malformed response: expected '") + key + "' with " +
                               std::to_string(expected) + " items",
                           0);
    }
    return reply[key];
  }

  std::string base_url_;
  int max_retries_;
};

// "http://..." selects the service client; anything else is a fixture path.
inline std::unique_ptr<ScoreBackend> make_backend(const std::string& spec) {
  if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
    return std::make_unique<HttpBackend>(spec);
  }
  return std::make_unique<FixtureBackend>(load_fixture(spec));
}

// ---------------------------------------------------------------------------
// Request/response form

enum class ScoreKind { kEmbed, kEntail, kRelevance };

struct ScoreRequest {
  ScoreKind kind = ScoreKind::kEmbed;
  std::string question;            // relevance only
  std::vector<std::string> texts;  // embed, relevance
  std::vector<TextPair> pairs;     // entail
};

struct ScoreResponse {
  std::vector<std::vector<double>> vectors;
  std::vector<double> probs;
};

inline void validate(const ScoreRequest& req) {
  auto non_empty = [](const std::string& s) { return !s.empty(); };
  if (req.kind == ScoreKind::kEntail) {
    if (req.pairs.empty()) throw ArgumentError("entail request has no pairs");
    for (const auto& [p, c] : req.pairs) {
      if (!non_empty(p) || !non_empty(c)) throw ArgumentError("entail request has an empty text");
    }
    return;
  }
  if (req.texts.empty()) throw ArgumentError("score request has no texts");
  for (const auto& t : req.texts) {
    if (!non_empty(t)) throw ArgumentError("score request has an empty text");
  }
  if (req.kind == ScoreKind::kRelevance && req.question.empty()) {
    throw ArgumentError("relevance request has no question");
  }
}

inline ScoreResponse score(const ScoreRequest& req, ScoreBackend& backend) {
  validate(req);
  ScoreResponse res;
  switch (req.kind) {
    case ScoreKind::kEmbed: res.vectors = backend.embed(req.texts); break;
    case ScoreKind::kEntail: res.probs = backend.entail(req.pairs); break;
    case ScoreKind::kRelevance: res.probs = backend.relevance(req.question, req.texts); break;
  }
  return res;
}

// Queries `backend` for every text, pair and relevance pair and records the
// answers as a fixture.
inline ScoreFixture generate_fixture(ScoreBackend& backend, const std::vector<std::string>& texts,
                                     const std::vector<TextPair>& entail_pairs,
                                     const std::vector<TextPair>& relevance_pairs) {
  ScoreFixture f;
  f.dim = 0;
  if (!texts.empty()) {
    auto vectors = backend.embed(texts);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (f.dim == 0) f.dim = vectors[i].size();
      if (vectors[i].size() != f.dim) throw SchemaError("service returned mixed embedding lengths");
      f.embeddings[text_hash(texts[i])] = std::move(vectors[i]);
    }
  }
  if (f.dim == 0) f.dim = 1;
  if (!entail_pairs.empty()) {
    auto probs = backend.entail(entail_pairs);
    for (std::size_t i = 0; i < entail_pairs.size(); ++i) {
      detail::check_probability(probs[i], "entailment");
      f.entailments[pair_key(entail_pairs[i].first, entail_pairs[i].second)] = probs[i];
    }
  }
  // Relevance is requested per question so each call carries one question.
  std::map<std::string, std::vector<std::string>> by_question;
  for (const auto& [q, s] : relevance_pairs) by_question[q].push_back(s);
  for (const auto& [q, sentences] : by_question) {
    auto probs = backend.relevance(q, sentences);
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      detail::check_probability(probs[i], "relevance");
      f.relevance[pair_key(q, sentences[i])] = probs[i];
    }
  }
  return f;
}

}  // namespace persumm::scoring
