#pragma once

// In-process scoring service speaking the JSON wire protocol. Outputs are
// deterministic functions of the request text.

#include <atomic>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "persumm/scoring.hpp"

class MockService {
 public:
  static constexpr std::size_t kDim = 4;

  MockService() {
    using nlohmann::json;
    server_.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(json{{"status", "ok"}, {"dim", kDim}}.dump(), "application/json");
    });
    server_.Post("/v1/embed", [this](const httplib::Request& req, httplib::Response& res) {
      if (!admit(req, res, "texts")) return;
      const auto body = json::parse(req.body);
      json vectors = json::array();
      for (const auto& t : body["texts"]) vectors.push_back(embed(t.get<std::string>()));
      res.set_content(json{{"vectors", vectors}}.dump(), "application/json");
    });
    server_.Post("/v1/entail", [this](const httplib::Request& req, httplib::Response& res) {
      if (!admit(req, res, "pairs")) return;
      const auto body = json::parse(req.body);
      json probs = json::array();
      for (const auto& p : body["pairs"]) {
        probs.push_back(entail(p[0].get<std::string>(), p[1].get<std::string>()));
      }
      res.set_content(json{{"probs", probs}}.dump(), "application/json");
    });
    server_.Post("/v1/relevance", [this](const httplib::Request& req, httplib::Response& res) {
      if (!admit(req, res, "sentences")) return;
      const auto body = json::parse(req.body);
      json probs = json::array();
      for (const auto& s : body["sentences"]) {
        probs.push_back(relevance(body["question"].get<std::string>(), s.get<std::string>()));
      }
      res.set_content(json{{"probs", probs}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockService() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  static std::vector<double> embed(const std::string& text) {
    const auto h = persumm::scoring::text_hash(text);
    std::vector<double> v(kDim);
    for (std::size_t k = 0; k < kDim; ++k) {
      v[k] = (std::stoul(h.substr(4 * k, 4), nullptr, 16) / 65535.0) - 0.5 + (k == 0 ? 0.1 : 0.0);
    }
    return v;
  }
  static double entail(const std::string& premise, const std::string& claim) {
    if (persumm::scoring::normalize_text(premise) == persumm::scoring::normalize_text(claim)) return 0.97;
    return std::stoul(persumm::scoring::pair_key(premise, claim).substr(0, 6), nullptr, 16) / 16777215.0;
  }
  static double relevance(const std::string& question, const std::string& sentence) {
    return std::stoul(persumm::scoring::pair_key(question, sentence).substr(17, 6), nullptr, 16) / 16777215.0;
  }

  std::atomic<int> requests{0};
  std::atomic<int> fail_next{0};        // answer this many requests with 503
  std::atomic<int> reject_status{0};    // when non-zero, answer every request with it
  std::atomic<bool> malformed{false};   // reply 200 with a body missing its field
  std::atomic<std::size_t> largest_batch{0};

 private:
  bool admit(const httplib::Request& req, httplib::Response& res, const char* field) {
    ++requests;
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (...) {
      return error(res, 400, "malformed body");
    }
    if (!body.contains(field) || !body[field].is_array() || body[field].empty()) {
      return error(res, 400, std::string("missing ") + field);
    }
    if (body[field].size() > persumm::scoring::HttpBackend::kMaxBatch) return error(res, 413, "batch too large");
    largest_batch = std::max<std::size_t>(largest_batch, body[field].size());
    if (reject_status) return error(res, reject_status, "rejected");
    if (fail_next > 0) {
      --fail_next;
      return error(res, 503, "busy");
    }
    if (malformed) {
      res.set_content("{}", "application/json");
      return false;
    }
    return true;
  }

  static bool error(httplib::Response& res, int status, const std::string& msg) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", msg}}.dump(), "application/json");
    return false;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};
