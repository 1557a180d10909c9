#pragma once

// Silver-data construction: relevance gating, average-linkage agglomerative
// clustering under cosine distance, medoid extraction, and removal of the
// extracted sentences from the input.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "persumm/corpus.hpp"
#include "persumm/errors.hpp"
#include "persumm/geometry.hpp"
#include "persumm/log.hpp"
#include "persumm/scoring.hpp"
#include "persumm/textproc.hpp"

namespace persumm::augment {

using textproc::SentenceRecord;

struct RelevanceJudgment {
  std::size_t sentence = 0;  // index into the thread's sentence list
  double score = 0.0;
  bool relevant = false;
};

struct Merge {
  std::size_t left = 0;   // cluster ids (smallest member index) before merging
  std::size_t right = 0;
  double distance = 0.0;  // average-linkage distance at the time of the merge
};

struct ClusterSet {
  // Each cluster lists row indices ascending; clusters are ordered by their
  // smallest member.
  std::vector<std::vector<std::size_t>> clusters;
  double cutoff = 0.0;
  std::vector<Merge> merges;
  // Smallest linkage distance left unmerged; empty when one cluster remains.
  std::optional<double> first_rejected;
};

inline constexpr double kDefaultCutoff = 0.65;
inline constexpr double kDefaultThreshold = 0.5;

// Sentences of every answer, in answer order.
inline std::vector<SentenceRecord> segment_thread(const corpus::QuestionThread& t) {
  std::vector<SentenceRecord> out;
  for (const auto& a : t.answers) {
    const auto sentences = textproc::segment(a.body);
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      out.push_back({t.thread_id, a.id, i, sentences[i]});
    }
  }
  return out;
}

inline std::vector<RelevanceJudgment> gate_relevance(std::span<const SentenceRecord> sentences,
                                                     const std::string& question,
                                                     scoring::ScoreBackend& scorer, double threshold) {
  if (sentences.empty()) return {};
  std::vector<std::string> texts;
  texts.reserve(sentences.size());
  for (const auto& s : sentences) texts.push_back(s.text);

  std::vector<double> probs;
  try {
    probs = scorer.relevance(question, texts);
  } catch (const Error&) {
    // Re-score one at a time to name the sentence that failed.
    for (const auto& s : sentences) {
      try {
        const std::string text = s.text;
        scorer.relevance(question, std::span<const std::string>(&text, 1));
      } catch (const Error& e) {
        throw Error("relevance scoring failed for sentence " + s.thread_id + "/" + s.answer_id + "#" +
                    std::to_string(s.index) + ": " + e.what());
      }
    }
    throw;
  }
  if (probs.size() != sentences.size()) throw Error("relevance scorer returned the wrong count");

  std::vector<RelevanceJudgment> out(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (!(probs[i] >= 0.0 && probs[i] <= 1.0)) {
      throw Error("relevance score outside [0,1] for sentence " + sentences[i].answer_id + "#" +
                  std::to_string(sentences[i].index));
    }
    out[i] = {i, probs[i], probs[i] >= threshold};
  }
  return out;
}

// Bottom-up average-linkage clustering. The closest pair of clusters is merged
// while its mean pairwise cosine distance is <= cutoff; exact ties go to the
// lexicographically smallest (id, id) pair, where a cluster's id is its
// smallest member.
inline ClusterSet agglomerate(const geometry::EmbeddingMatrix& m, double cutoff) {
  const std::size_t n = m.rows();
  if (n < 1) throw PreconditionError("agglomerate needs at least one row");
  if (!(cutoff > 0.0)) throw ArgumentError("cutoff must be > 0");
  for (std::size_t r = 0; r < n; ++r) {
    if (geometry::norm(m.row(r)) == 0.0) {
      throw DegenerateVectorError("embedding row " + std::to_string(r) + " has zero norm");
    }
  }

  // sum[i][j] holds the sum of member-pair distances between clusters i and j.
  std::vector<double> sum(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      sum[i * n + j] = sum[j * n + i] = geometry::cosine_distance(m.row(i), m.row(j));
    }
  }
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  std::vector<bool> active(n, true);

  ClusterSet out;
  out.cutoff = cutoff;
  for (std::size_t remaining = n; remaining > 1; --remaining) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const double avg =
            sum[i * n + j] / static_cast<double>(members[i].size() * members[j].size());
        if (avg < best) {
          best = avg;
          bi = i;
          bj = j;
        }
      }
    }
    if (best > cutoff) {
      out.first_rejected = best;
      break;
    }
    out.merges.push_back({bi, bj, best});
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      sum[bi * n + k] = sum[k * n + bi] = sum[bi * n + k] + sum[bj * n + k];
    }
    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    std::sort(members[bi].begin(), members[bi].end());
    members[bj].clear();
    active[bj] = false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (active[i]) out.clusters.push_back(std::move(members[i]));
  }
  return out;
}

// Medoid under cosine distance: the member with the smallest mean distance to
// the other members. Ties go to the lowest row index.
inline std::size_t pick_centroid(std::span<const std::size_t> cluster, const geometry::EmbeddingMatrix& m) {
  if (cluster.size() < 2) throw PreconditionError("pick_centroid needs a cluster of size >= 2");
  std::vector<std::size_t> order(cluster.begin(), cluster.end());
  std::sort(order.begin(), order.end());
  std::size_t best = order.front();
  double best_mean = std::numeric_limits<double>::infinity();
  for (std::size_t a : order) {
    double total = 0.0;
    for (std::size_t b : order) {
      if (a != b) total += geometry::cosine_distance(m.row(a), m.row(b));
    }
    const double mean = total / static_cast<double>(order.size() - 1);
    if (mean < best_mean) {
      best_mean = mean;
      best = a;
    }
  }
  return best;
}

struct SilverExample {
  std::string thread_id;
  std::string question;
  std::vector<SentenceRecord> input_sentences;
  std::vector<std::string> bullets;
  // Size of the cluster each bullet was taken from, aligned with `bullets`.
  std::vector<std::size_t> bullet_cluster_sizes;
};

inline nlohmann::ordered_json to_json(const SilverExample& ex) {
  nlohmann::ordered_json j;
  j["question"] = ex.question;
  auto input = nlohmann::ordered_json::array();
  for (const auto& s : ex.input_sentences) input.push_back(s.text);
  j["input"] = std::move(input);
  j["bullets"] = ex.bullets;
  j["thread_id"] = ex.thread_id;
  return j;
}

// Inverse of to_json as far as the schema allows: sentence provenance is not
// serialized, so input records carry only thread id, position and text.
inline SilverExample silver_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("input") || !j.contains("bullets")) {
    throw SchemaError("silver record needs 'input' and 'bullets'");
  }
  SilverExample ex;
  ex.thread_id = j.value("thread_id", "");
  ex.question = j.value("question", "");
  const auto input = j["input"].get<std::vector<std::string>>();
  for (std::size_t i = 0; i < input.size(); ++i) ex.input_sentences.push_back({ex.thread_id, "", i, input[i]});
  ex.bullets = j["bullets"].get<std::vector<std::string>>();
  return ex;
}

// `clusters` index the relevant subset of `sentences` (judgments with
// relevant=true, in sentence order); `centroids` is aligned with the clusters
// and uses the same index space, empty for singleton clusters.
inline std::optional<SilverExample> build_silver(const corpus::QuestionThread& thread,
                                                 std::span<const SentenceRecord> sentences,
                                                 std::span<const RelevanceJudgment> judgments,
                                                 const ClusterSet& clusters,
                                                 std::span<const std::optional<std::size_t>> centroids) {
  if (centroids.size() != clusters.clusters.size()) {
    throw PreconditionError("one centroid slot per cluster is required");
  }
  std::vector<std::size_t> relevant;
  for (const auto& j : judgments) {
    if (j.relevant) relevant.push_back(j.sentence);
  }

  struct Pick {
    std::size_t earliest;
    std::size_t sentence;
    std::size_t size;
  };
  std::vector<Pick> picks;
  for (std::size_t c = 0; c < clusters.clusters.size(); ++c) {
    const auto& members = clusters.clusters[c];
    if (members.size() < 2) continue;
    if (!centroids[c]) throw PreconditionError("cluster of size >= 2 without a centroid");
    const std::size_t earliest = *std::min_element(members.begin(), members.end());
    picks.push_back({relevant.at(earliest), relevant.at(*centroids[c]), members.size()});
  }
  if (picks.empty()) return std::nullopt;
  std::sort(picks.begin(), picks.end(), [](const Pick& a, const Pick& b) { return a.earliest < b.earliest; });

  SilverExample ex;
  ex.thread_id = thread.thread_id;
  ex.question = corpus::question_text(thread);
  for (const auto& p : picks) {
    const auto& text = sentences[p.sentence].text;
    if (std::find(ex.bullets.begin(), ex.bullets.end(), text) != ex.bullets.end()) continue;
    ex.bullets.push_back(text);
    ex.bullet_cluster_sizes.push_back(p.size);
  }
  // Every sentence whose text became a bullet leaves the input, including
  // verbatim repeats elsewhere in the thread.
  for (const auto& s : sentences) {
    if (std::find(ex.bullets.begin(), ex.bullets.end(), s.text) == ex.bullets.end()) {
      ex.input_sentences.push_back(s);
    }
  }
  return ex;
}

struct PipelineConfig {
  double cutoff = kDefaultCutoff;
  double threshold = kDefaultThreshold;
  unsigned jobs = 1;
};

struct PipelineResult {
  std::vector<SilverExample> examples;  // ordered by thread_id
  std::size_t threads = 0;
  std::size_t without_example = 0;
  std::size_t failed = 0;
};

// Runs one thread through segment, relevance gating, embedding, clustering
// and centroid extraction.
inline std::optional<SilverExample> process_thread(const corpus::QuestionThread& thread,
                                                   scoring::ScoreBackend& scorer,
                                                   scoring::ScoreBackend& embedder,
                                                   const PipelineConfig& config) {
  const auto sentences = segment_thread(thread);
  const auto judgments = gate_relevance(sentences, corpus::question_text(thread), scorer, config.threshold);
  std::vector<std::string> relevant_texts;
  for (const auto& j : judgments) {
    if (j.relevant) relevant_texts.push_back(sentences[j.sentence].text);
  }
  if (relevant_texts.empty()) return std::nullopt;

  const auto vectors = embedder.embed(relevant_texts);
  const auto matrix = geometry::EmbeddingMatrix::from_rows(vectors);
  const auto clusters = agglomerate(matrix, config.cutoff);
  std::vector<std::optional<std::size_t>> centroids;
  for (const auto& c : clusters.clusters) {
    centroids.push_back(c.size() >= 2 ? std::optional(pick_centroid(c, matrix)) : std::nullopt);
  }
  return build_silver(thread, sentences, judgments, clusters, centroids);
}

// Threads are processed by up to `config.jobs` workers; failures are logged
// and skipped. Output order is by thread_id regardless of scheduling.
inline PipelineResult run_pipeline(const std::vector<corpus::QuestionThread>& threads,
                                   scoring::ScoreBackend& scorer, scoring::ScoreBackend& embedder,
                                   const PipelineConfig& config) {
  scorer.check_available();
  embedder.check_available();

  std::vector<std::optional<SilverExample>> slots(threads.size());
  std::vector<char> failed(threads.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < threads.size(); i = next++) {
      try {
        slots[i] = process_thread(threads[i], scorer, embedder, config);
      } catch (const std::exception& e) {
        failed[i] = 1;
        log_line("augment", "thread " + threads[i].thread_id + " skipped: " + e.what());
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(threads.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
  }

  PipelineResult out;
  out.threads = threads.size();
  for (std::size_t i = 0; i < threads.size(); ++i) {
    if (failed[i]) {
      ++out.failed;
    } else if (!slots[i]) {
      ++out.without_example;
    } else {
      out.examples.push_back(std::move(*slots[i]));
    }
  }
  std::stable_sort(out.examples.begin(), out.examples.end(),
                   [](const SilverExample& a, const SilverExample& b) { return a.thread_id < b.thread_id; });
  return out;
}

}  // namespace persumm::augment
