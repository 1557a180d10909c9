#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "mock_service.hpp"
#include "persumm/cli.hpp"
#include "persumm/scoring.hpp"

using namespace persumm;
using namespace persumm::scoring;
namespace fs = std::filesystem;

namespace {

ScoreFixture small_fixture() {
  ScoreFixture f;
  f.dim = 2;
  f.embeddings[text_hash("alpha")] = {1, 0};
  f.embeddings[text_hash("beta")] = {0, 1};
  f.embeddings[text_hash("gamma")] = {1, 1};
  f.entailments[pair_key("alpha", "beta")] = 0.25;
  f.relevance[pair_key("q", "alpha")] = 0.75;
  return f;
}

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("persumm_scoring_" + std::to_string(::getpid()) + "_" + name)).string();
}

}  // namespace

TEST(Hash, NormalizationAndFnv) {
  EXPECT_EQ(normalize_text("  Hello \t  World\n"), "hello world");
  EXPECT_EQ(text_hash(""), "cbf29ce484222325");
  EXPECT_EQ(text_hash("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(text_hash("Hello  world"), text_hash("hello world "));
  EXPECT_EQ(pair_key("a", "b"), text_hash("a") + "|" + text_hash("b"));
}

TEST(Fixture, LookupsInRequestOrder) {
  FixtureBackend b(small_fixture());
  const std::vector<std::string> texts{"gamma", "Alpha", "beta"};
  auto v = b.embed(texts);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0], (std::vector<double>{1, 1}));
  EXPECT_EQ(v[1], (std::vector<double>{1, 0}));
  const std::vector<TextPair> pairs{{"alpha", "beta"}};
  EXPECT_EQ(b.entail(pairs), (std::vector<double>{0.25}));
  const std::vector<std::string> sents{"alpha"};
  EXPECT_EQ(b.relevance("q", sents), (std::vector<double>{0.75}));
}

TEST(Fixture, MissingKeyNamesHash) {
  FixtureBackend b(small_fixture());
  const std::vector<TextPair> pairs{{"beta", "alpha"}};
  try {
    b.entail(pairs);
    FAIL();
  } catch (const MissingKeyError& e) {
    EXPECT_NE(std::string(e.what()).find(pair_key("beta", "alpha")), std::string::npos);
  }
  const std::vector<std::string> texts{"delta"};
  EXPECT_THROW(b.embed(texts), MissingKeyError);
}

TEST(Fixture, SchemaValidation) {
  using nlohmann::json;
  EXPECT_THROW(parse_fixture(json{{"version", 1}, {"dim", 2}, {"embeddings", {{"a", {1, 2}}, {"b", {1}}}}}),
               SchemaError);
  EXPECT_THROW(parse_fixture(json{{"version", 2}, {"dim", 2}}), SchemaError);
  EXPECT_THROW(parse_fixture(json{{"version", 1}, {"dim", 0}}), SchemaError);
  EXPECT_THROW(parse_fixture(json{{"version", 1}, {"dim", 2}, {"entailments", {{"a|b", 1.5}}}}), SchemaError);
  auto empty = parse_fixture(json{{"version", 1}, {"dim", 8}, {"embeddings", json::object()},
                                  {"entailments", json::object()}, {"relevance", json::object()}});
  EXPECT_EQ(empty.dim, 8u);
  EXPECT_TRUE(empty.embeddings.empty());
}

TEST(Fixture, MismatchErrorNamesRow) {
  using nlohmann::json;
  try {
    parse_fixture(json{{"version", 1}, {"dim", 2}, {"embeddings", {{"deadbeef", {1, 2, 3}}}}});
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("deadbeef"), std::string::npos);
  }
}

TEST(Fixture, RoundTrip) {
  const auto path = temp_path("rt.json");
  const auto f = small_fixture();
  save_fixture(f, path);
  EXPECT_EQ(load_fixture(path), f);
  fs::remove(path);
  EXPECT_THROW(load_fixture(path), IoError);
}

TEST(ScoreRequest, ValidationAndDispatch) {
  FixtureBackend b(small_fixture());
  EXPECT_THROW(score({ScoreKind::kEmbed, "", {}, {}}, b), ArgumentError);
  EXPECT_THROW(score({ScoreKind::kEmbed, "", {""}, {}}, b), ArgumentError);
  EXPECT_THROW(score({ScoreKind::kRelevance, "", {"alpha"}, {}}, b), ArgumentError);
  EXPECT_THROW(score({ScoreKind::kEntail, "", {}, {}}, b), ArgumentError);
  auto r = score({ScoreKind::kEmbed, "", {"alpha", "beta", "gamma"}, {}}, b);
  ASSERT_EQ(r.vectors.size(), 3u);
  for (const auto& v : r.vectors) EXPECT_EQ(v.size(), 2u);
  EXPECT_EQ(score({ScoreKind::kRelevance, "q", {"alpha"}, {}}, b).probs, (std::vector<double>{0.75}));
}

TEST(Http, RoundTripsAllEndpoints) {
  MockService svc;
  HttpBackend b(svc.url());
  EXPECT_NO_THROW(b.check_available());
  const std::vector<std::string> texts{"one", "two", "three"};
  auto v = b.embed(texts);
  ASSERT_EQ(v.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(v[i], MockService::embed(texts[i]));
  const std::vector<TextPair> pairs{{"a b", "A  B"}, {"x", "y"}};
  auto p = b.entail(pairs);
  EXPECT_EQ(p, (std::vector<double>{0.97, MockService::entail("x", "y")}));
  EXPECT_GT(p[0], 0.9);
  auto r = b.relevance("q?", texts);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(r[i], MockService::relevance("q?", texts[i]));
  EXPECT_EQ(b.embed(texts), v);  // deterministic repeat
}

TEST(Http, ChunksLargePayloadsPreservingOrder) {
  MockService svc;
  HttpBackend b(svc.url());
  std::vector<std::string> texts;
  for (int i = 0; i < 150; ++i) texts.push_back("text " + std::to_string(i));
  auto v = b.embed(texts);
  ASSERT_EQ(v.size(), 150u);
  for (int i = 0; i < 150; ++i) ASSERT_EQ(v[i], MockService::embed(texts[i]));
  EXPECT_EQ(svc.requests.load(), 3);
  EXPECT_EQ(svc.largest_batch.load(), HttpBackend::kMaxBatch);
}

TEST(Http, RetriesServerErrors) {
  MockService svc;
  HttpBackend b(svc.url(), 2);
  const std::vector<std::string> texts{"t"};
  svc.fail_next = 2;
  EXPECT_NO_THROW(b.embed(texts));
  EXPECT_EQ(svc.requests.load(), 3);
  svc.fail_next = 5;
  try {
    b.embed(texts);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.retries(), 2);
  }
}

TEST(Http, ClientErrorsAreNotRetried) {
  MockService svc;
  HttpBackend b(svc.url(), 3);
  svc.reject_status = 422;
  const std::vector<std::string> texts{"t"};
  try {
    b.embed(texts);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.retries(), 0);
    EXPECT_NE(std::string(e.what()).find("rejected"), std::string::npos);
  }
  EXPECT_EQ(svc.requests.load(), 1);
}

TEST(Http, MalformedBodyAndUnreachable) {
  MockService svc;
  svc.malformed = true;
  HttpBackend b(svc.url());
  const std::vector<std::string> texts{"t"};
  EXPECT_THROW(b.embed(texts), TransportError);
  HttpBackend dead("http://127.0.0.1:1", 0);
  EXPECT_THROW(dead.check_available(), TransportError);
  EXPECT_THROW(HttpBackend("https://example.com"), ArgumentError);
}

TEST(Http, FixtureGenReproducesServiceOutputs) {
  MockService svc;
  const auto texts = temp_path("texts.txt"), pairs = temp_path("pairs.tsv"), rel = temp_path("rel.tsv"),
             out = temp_path("fixture.json");
  std::ofstream(texts) << "alpha\nbeta gamma\n";
  std::ofstream(pairs) << "alpha\tbeta gamma\nbeta gamma\tbeta gamma\n";
  std::ofstream(rel) << "Why?\talpha\nWhy?\tbeta gamma\n";
  std::ostringstream so, se;
  ASSERT_EQ(cli::run({"persumm", "fixture-gen", "--texts", texts, "--pairs", pairs, "--relevance", rel,
                      "--endpoint", svc.url(), "--out", out},
                     so, se),
            0)
      << se.str();

  FixtureBackend fixture(load_fixture(out));
  HttpBackend live(svc.url());
  const std::vector<std::string> ts{"alpha", "beta gamma"};
  const auto fe = fixture.embed(ts), le = live.embed(ts);
  for (std::size_t i = 0; i < ts.size(); ++i)
    for (std::size_t k = 0; k < MockService::kDim; ++k) EXPECT_NEAR(fe[i][k], le[i][k], 1e-6);
  const std::vector<TextPair> ps{{"alpha", "beta gamma"}, {"beta gamma", "beta gamma"}};
  const auto fp = fixture.entail(ps), lp = live.entail(ps);
  for (std::size_t i = 0; i < ps.size(); ++i) EXPECT_NEAR(fp[i], lp[i], 1e-6);
  EXPECT_NEAR(fixture.relevance("Why?", ts)[1], live.relevance("Why?", ts)[1], 1e-6);
  for (const auto& p : {texts, pairs, rel, out}) fs::remove(p);
}

TEST(Backend, MakeBackendDispatch) {
  const auto path = temp_path("mb.json");
  save_fixture(small_fixture(), path);
  auto f = make_backend(path);
  EXPECT_NE(dynamic_cast<FixtureBackend*>(f.get()), nullptr);
  auto h = make_backend("http://127.0.0.1:9");
  EXPECT_NE(dynamic_cast<HttpBackend*>(h.get()), nullptr);
  fs::remove(path);
}
