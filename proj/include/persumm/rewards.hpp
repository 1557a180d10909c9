#pragma once

// Faithfulness (entailment) and coverage (semantic area) rewards, batch
// min-max normalization and the per-minibatch reward rotation.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "persumm/errors.hpp"
#include "persumm/geometry.hpp"
#include "persumm/scoring.hpp"

namespace persumm::rewards {

struct RewardBundle {
  double nli = 0.0;
  double semantic_area_raw = 0.0;
  double semantic_area = 0.0;
};

inline constexpr const char* kNli = "nli";
inline constexpr const char* kArea = "area";

// table[i][j] = probability that summary sentence i is entailed by input
// sentence j. Returns the mean over summary sentences of the best premise.
inline double nli_from_table(const std::vector<std::vector<double>>& table) {
  if (table.empty()) throw PreconditionError("nli reward needs at least one summary sentence");
  double total = 0.0;
  for (const auto& row : table) {
    if (row.empty()) throw PreconditionError("nli reward needs at least one input sentence");
    double best = -std::numeric_limits<double>::infinity();
    for (double p : row) {
      if (!(p >= 0.0 && p <= 1.0)) throw Error("entailment probability outside [0,1]");
      best = std::max(best, p);
    }
    total += best;
  }
  return total / static_cast<double>(table.size());
}

struct NliOptions {
  // Skip premises whose normalized text equals the claim. Extractive outputs
  // copy input sentences, and a sentence trivially entails itself.
  bool exclude_self_premise = false;
};

// Scores every (premise, claim) pair through `entail` in one batch.
inline double nli_reward(std::span<const std::string> summary, std::span<const std::string> input,
                         scoring::ScoreBackend& entail, NliOptions opts = {}) {
  if (summary.empty()) throw PreconditionError("nli reward needs at least one summary sentence");
  if (input.empty()) throw PreconditionError("nli reward needs at least one input sentence");

  std::vector<scoring::TextPair> pairs;
  std::vector<std::vector<std::size_t>> slots(summary.size());
  for (std::size_t i = 0; i < summary.size(); ++i) {
    const std::string claim_key = opts.exclude_self_premise ? scoring::normalize_text(summary[i]) : "";
    for (const auto& premise : input) {
      if (opts.exclude_self_premise && scoring::normalize_text(premise) == claim_key) continue;
      slots[i].push_back(pairs.size());
      pairs.emplace_back(premise, summary[i]);
    }
  }
  const auto probs = pairs.empty() ? std::vector<double>{} : entail.entail(pairs);
  std::vector<std::vector<double>> table(summary.size());
  for (std::size_t i = 0; i < summary.size(); ++i) {
    // With every premise excluded the claim has no support at all.
    if (slots[i].empty()) {
      table[i] = {0.0};
      continue;
    }
    for (std::size_t k : slots[i]) table[i].push_back(probs.at(k));
  }
  return nli_from_table(table);
}

// Area of the convex hull of the embeddings after projection onto their top
// two principal directions. Fewer than three points enclose no area.
inline double semantic_area_from_embeddings(const geometry::EmbeddingMatrix& m) {
  if (m.rows() < 3) return 0.0;
  const auto hull = geometry::convex_hull(geometry::pca2(m));
  return geometry::polygon_area(hull);
}

inline double semantic_area_raw(std::span<const std::string> summary, scoring::ScoreBackend& embedder) {
  if (summary.empty()) throw PreconditionError("semantic area needs at least one summary sentence");
  if (summary.size() < 3) return 0.0;
  return semantic_area_from_embeddings(geometry::EmbeddingMatrix::from_rows(embedder.embed(summary)));
}

// (v - min) / (max - min); a zero span maps everything to 0.
inline std::vector<double> minmax_normalize(std::span<const double> values) {
  if (values.empty()) throw PreconditionError("minmax_normalize needs at least one value");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double span = *hi - *lo;
  std::vector<double> out(values.size(), 0.0);
  if (!(span > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = std::clamp((values[i] - *lo) / span, 0.0, 1.0);
  }
  return out;
}

// Round-robin over reward names, one step per minibatch.
struct RewardSchedule {
  std::vector<std::string> order{kNli, kArea};
  std::size_t cursor = 0;

  bool operator==(const RewardSchedule&) const = default;
};

inline std::string next_reward(RewardSchedule& s) {
  if (s.order.empty()) throw PreconditionError("reward schedule is empty");
  return s.order[s.cursor++ % s.order.size()];
}

inline nlohmann::json to_json(const RewardSchedule& s) {
  return {{"order", s.order}, {"cursor", s.cursor}};
}

inline RewardSchedule schedule_from_json(const nlohmann::json& j) {
  RewardSchedule s;
  s.order = j.at("order").get<std::vector<std::string>>();
  s.cursor = j.at("cursor").get<std::size_t>();
  if (s.order.empty()) throw SchemaError("reward schedule order is empty");
  return s;
}

struct SummaryInput {
  std::vector<std::string> summary;
  std::vector<std::string> input;
};

// Bundles for a batch; the semantic area is min-max normalized across the
// batch.
inline std::vector<RewardBundle> evaluate_batch(std::span<const SummaryInput> batch,
                                                scoring::ScoreBackend& entail,
                                                scoring::ScoreBackend& embedder, NliOptions opts = {}) {
  std::vector<RewardBundle> out(batch.size());
  std::vector<double> raw(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out[i].nli = nli_reward(batch[i].summary, batch[i].input, entail, opts);
    raw[i] = out[i].semantic_area_raw = semantic_area_raw(batch[i].summary, embedder);
  }
  if (batch.empty()) return out;
  const auto norm = minmax_normalize(raw);
  for (std::size_t i = 0; i < batch.size(); ++i) out[i].semantic_area = norm[i];
  return out;
}

inline nlohmann::ordered_json to_json(const RewardBundle& b) {
  nlohmann::ordered_json j;
  j["nli"] = b.nli;
  j["semantic_area_raw"] = b.semantic_area_raw;
  j["semantic_area"] = b.semantic_area;
  return j;
}

}  // namespace persumm::rewards
