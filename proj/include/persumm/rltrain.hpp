#pragma once

// Self-critical policy-gradient training with a mixed RL/ML objective,
// exercised on a small extractive policy: at each step the policy either
// selects one not-yet-selected input sentence or stops.
//
//   L_ml    = -sum_t log p(y*_t | y*_<t, x)                  (teacher forcing)
//   L_rl    = (r(y_greedy) - r(y_sample)) * sum_t log p(y_sample_t | ...)
//   L_mixed = gamma_rl * L_rl + gamma_ml * L_ml
//
// The greedy rollout is the baseline; rewards alternate per minibatch.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "persumm/errors.hpp"
#include "persumm/geometry.hpp"
#include "persumm/random.hpp"
#include "persumm/rewards.hpp"
#include "persumm/scoring.hpp"

namespace persumm::rltrain {

using Action = std::size_t;

// Selections per rollout before the episode is cut off without STOP.
inline constexpr std::size_t kStepCap = 10;

struct MixWeights {
  double gamma_rl = 0.9;
  double gamma_ml = 0.1;

  void validate() const {
    if (gamma_rl < 0.0 || gamma_ml < 0.0) throw ArgumentError("mix weights must be >= 0");
    if (gamma_rl == 0.0 && gamma_ml == 0.0) throw ArgumentError("mix weights cannot both be 0");
  }
};

// One input document: candidate sentences with their embeddings, plus the
// gold extractive sequence (sentence indices; STOP is implied at the end).
struct ToyInstance {
  std::string id;
  std::vector<std::string> sentences;
  geometry::EmbeddingMatrix features;
  std::vector<Action> gold;

  std::size_t size() const { return features.rows(); }
  Action stop() const { return size(); }
};

// Linear scorer: sentence logit = w . embedding, STOP logit = bias.
struct ToyPolicy {
  std::vector<double> weights;  // dim + 1; the last entry is the STOP bias

  static ToyPolicy zeros(std::size_t dim) { return {std::vector<double>(dim + 1, 0.0)}; }
  std::size_t dim() const { return weights.size() - 1; }
};

// Distribution over the actions available in one state.
struct StepDistribution {
  std::vector<Action> actions;
  std::vector<double> log_probs;
};

inline StepDistribution step_distribution(const ToyPolicy& policy, const ToyInstance& inst,
                                          const std::vector<bool>& selected) {
  StepDistribution d;
  std::vector<double> logits;
  const std::size_t dim = policy.dim();
  for (std::size_t i = 0; i < inst.size(); ++i) {
    if (selected[i]) continue;
    d.actions.push_back(i);
    logits.push_back(geometry::dot(inst.features.row(i), {policy.weights.data(), dim}));
  }
  d.actions.push_back(inst.stop());
  logits.push_back(policy.weights[dim]);

  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - top);
  const double log_z = top + std::log(z);
  d.log_probs.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) d.log_probs[k] = logits[k] - log_z;
  return d;
}

namespace detail {

// grad += coef * d/dw log p(action | state).
inline void accumulate_score_gradient(const ToyPolicy& policy, const ToyInstance& inst,
                                      const StepDistribution& d, Action action, double coef,
                                      std::vector<double>& grad) {
  const std::size_t dim = policy.dim();
  auto add_feature = [&](Action a, double scale) {
    if (a == inst.stop()) {
      grad[dim] += scale;
    } else {
      const auto row = inst.features.row(a);
      for (std::size_t k = 0; k < dim; ++k) grad[k] += scale * row[k];
    }
  };
  add_feature(action, coef);
  for (std::size_t k = 0; k < d.actions.size(); ++k) {
    add_feature(d.actions[k], -coef * std::exp(d.log_probs[k]));
  }
}

inline void check_dims(const ToyPolicy& policy, const ToyInstance& inst) {
  if (policy.weights.size() != inst.features.dim() + 1) {
    throw ArgumentError("policy has " + std::to_string(policy.weights.size()) +
                        " weights, instance needs " + std::to_string(inst.features.dim() + 1));
  }
}

}  // namespace detail

// Per-step log-probabilities of a fixed action sequence. When `grad` is given,
// coef * gradient of the summed log-probability is added to it.
inline std::vector<double> sequence_log_probs(const ToyPolicy& policy, const ToyInstance& inst,
                                              std::span<const Action> actions,
                                              std::vector<double>* grad = nullptr, double coef = 1.0) {
  detail::check_dims(policy, inst);
  std::vector<bool> selected(inst.size(), false);
  std::vector<double> out;
  out.reserve(actions.size());
  for (std::size_t t = 0; t < actions.size(); ++t) {
    const auto d = step_distribution(policy, inst, selected);
    const auto it = std::find(d.actions.begin(), d.actions.end(), actions[t]);
    if (it == d.actions.end()) {
      throw PreconditionError("action " + std::to_string(actions[t]) + " unavailable at step " +
                              std::to_string(t) + " of " + inst.id);
    }
    const double lp = d.log_probs[static_cast<std::size_t>(it - d.actions.begin())];
    out.push_back(lp);
    if (grad) detail::accumulate_score_gradient(policy, inst, d, actions[t], coef, *grad);
    if (actions[t] == inst.stop()) break;
    selected[actions[t]] = true;
  }
  return out;
}

// Gold selections followed by STOP, unless the step cap ends the episode.
inline std::vector<Action> gold_sequence(const ToyInstance& inst) {
  std::vector<Action> seq(inst.gold.begin(), inst.gold.end());
  if (seq.size() > kStepCap) seq.resize(kStepCap);
  if (seq.size() < kStepCap) seq.push_back(inst.stop());
  return seq;
}

// Teacher-forced negative log-likelihood of the gold sequence.
inline double nll_loss(const ToyPolicy& policy, const ToyInstance& inst,
                       std::vector<double>* grad = nullptr, double coef = 1.0) {
  const auto seq = gold_sequence(inst);
  // d(-sum log p) = -d(sum log p)
  const auto lps = sequence_log_probs(policy, inst, seq, grad, -coef);
  double total = 0.0;
  for (double lp : lps) {
    if (!std::isfinite(lp)) throw InfiniteLossError("gold action has probability 0 in " + inst.id);
    total -= lp;
  }
  return total;
}

struct Rollout {
  std::vector<Action> actions;
  std::vector<double> log_probs;

  // Selected sentence indices, excluding STOP.
  std::vector<std::size_t> selection(const ToyInstance& inst) const {
    std::vector<std::size_t> s;
    for (Action a : actions) {
      if (a != inst.stop()) s.push_back(a);
    }
    return s;
  }
};

namespace detail {

template <class Choose>
Rollout rollout(const ToyPolicy& policy, const ToyInstance& inst, Choose&& choose) {
  detail::check_dims(policy, inst);
  Rollout r;
  std::vector<bool> selected(inst.size(), false);
  for (std::size_t t = 0; t < kStepCap; ++t) {
    const auto d = step_distribution(policy, inst, selected);
    const std::size_t k = choose(d);
    r.actions.push_back(d.actions[k]);
    r.log_probs.push_back(d.log_probs[k]);
    if (d.actions[k] == inst.stop()) break;
    selected[d.actions[k]] = true;
  }
  return r;
}

}  // namespace detail

inline Rollout sample_rollout(const ToyPolicy& policy, const ToyInstance& inst, Rng& rng) {
  return detail::rollout(policy, inst, [&](const StepDistribution& d) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < d.log_probs.size(); ++k) {
      acc += std::exp(d.log_probs[k]);
      if (u < acc) return k;
    }
    return d.log_probs.size() - 1;
  });
}

// Argmax at every step; equal probabilities resolve to the lowest action
// index (sentences before STOP).
inline Rollout greedy_rollout(const ToyPolicy& policy, const ToyInstance& inst) {
  return detail::rollout(policy, inst, [](const StepDistribution& d) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < d.log_probs.size(); ++k) {
      if (d.log_probs[k] > d.log_probs[best]) best = k;
    }
    return best;
  });
}

struct PolicyTrace {
  std::vector<Action> sampled_actions;
  std::vector<Action> greedy_actions;
  std::vector<double> sampled_log_probs;
  double reward_greedy = 0.0;
  double reward_sampled = 0.0;

  double sampled_log_prob_sum() const {
    double s = 0.0;
    for (double lp : sampled_log_probs) s += lp;
    return s;
  }
};

// (r(greedy) - r(sample)) * sum_t log p(sample_t | ...)
inline double self_critical_loss(double reward_greedy, double reward_sampled, double log_prob_sum) {
  return (reward_greedy - reward_sampled) * log_prob_sum;
}

inline double self_critical_loss(const PolicyTrace& trace) {
  return self_critical_loss(trace.reward_greedy, trace.reward_sampled, trace.sampled_log_prob_sum());
}

inline double mixed_loss(double l_rl, double l_ml, const MixWeights& w) {
  return w.gamma_rl * l_rl + w.gamma_ml * l_ml;
}

// A sampled trace with its rewards fixed; the loss is then a smooth function
// of the policy weights.
struct FrozenExample {
  const ToyInstance* instance = nullptr;
  PolicyTrace trace;
};

struct LossBreakdown {
  double l_rl = 0.0;
  double l_ml = 0.0;
  double mixed = 0.0;
  std::vector<double> grad;
};

// Batch-mean losses and the analytic gradient of the mixed loss. Sampled
// log-probabilities are recomputed under `policy`, so the trace only fixes
// which actions were taken and what they earned.
inline LossBreakdown mixed_loss_and_grad(const ToyPolicy& policy, std::span<const FrozenExample> batch,
                                         const MixWeights& w) {
  LossBreakdown out;
  out.grad.assign(policy.weights.size(), 0.0);
  if (batch.empty()) return out;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    const auto& inst = *ex.instance;
    const double advantage = ex.trace.reward_greedy - ex.trace.reward_sampled;
    const auto lps = sequence_log_probs(policy, inst, ex.trace.sampled_actions, &out.grad,
                                        w.gamma_rl * advantage * inv);
    double lp_sum = 0.0;
    for (double lp : lps) lp_sum += lp;
    out.l_rl += self_critical_loss(ex.trace.reward_greedy, ex.trace.reward_sampled, lp_sum) * inv;
    if (w.gamma_ml != 0.0) out.l_ml += nll_loss(policy, inst, &out.grad, w.gamma_ml * inv) * inv;
  }
  out.mixed = mixed_loss(out.l_rl, out.l_ml, w);
  return out;
}

// Central finite differences against the analytic gradient; returns the
// largest |analytic - numeric| / max(|analytic|, |numeric|) over weights.
// Components where both are below `floor` in magnitude are compared
// absolutely against it instead.
inline double grad_check(const ToyPolicy& policy, std::span<const FrozenExample> batch,
                         const MixWeights& w, double step = 1e-5, double floor = 1e-8) {
  const auto analytic = mixed_loss_and_grad(policy, batch, w).grad;
  ToyPolicy probe = policy;
  double worst = 0.0;
  for (std::size_t k = 0; k < policy.weights.size(); ++k) {
    probe.weights[k] = policy.weights[k] + step;
    const double up = mixed_loss_and_grad(probe, batch, w).mixed;
    probe.weights[k] = policy.weights[k] - step;
    const double down = mixed_loss_and_grad(probe, batch, w).mixed;
    probe.weights[k] = policy.weights[k];
    const double numeric = (up - down) / (2.0 * step);
    const double scale = std::max({std::abs(analytic[k]), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic[k] - numeric) / scale);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Rewards for extractive selections

struct Candidate {
  const ToyInstance* instance = nullptr;
  std::vector<std::size_t> selection;
};

struct RewardValues {
  std::vector<double> used;  // what enters the loss, in [0,1]
  std::vector<double> raw;   // NLI value or un-normalized area
};

class RewardModel {
 public:
  virtual ~RewardModel() = default;
  virtual RewardValues evaluate(const std::string& reward, std::span<const Candidate> batch) = 0;
};

// NLI against the instance's other sentences, and semantic area of the
// selected sentences' embeddings min-max normalized over the evaluated batch.
// An empty selection earns 0 under both rewards. Entailment tables are
// fetched once per instance id and reused.
class ScoredRewardModel : public RewardModel {
 public:
  explicit ScoredRewardModel(scoring::ScoreBackend& entail) : entail_(entail) {}

  RewardValues evaluate(const std::string& reward, std::span<const Candidate> batch) override {
    RewardValues v;
    v.raw.resize(batch.size(), 0.0);
    if (reward == rewards::kNli) {
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& c = batch[i];
        if (c.selection.empty()) continue;
        const auto& table = entailment_table(*c.instance);
        std::vector<std::vector<double>> rows;
        for (auto claim : c.selection) rows.push_back(table[claim]);
        v.raw[i] = rewards::nli_from_table(rows);
      }
      v.used = v.raw;
    } else if (reward == rewards::kArea) {
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& c = batch[i];
        v.raw[i] = rewards::semantic_area_from_embeddings(c.instance->features.select(c.selection));
      }
      v.used = batch.empty() ? std::vector<double>{} : rewards::minmax_normalize(v.raw);
    } else {
      throw ArgumentError("unknown reward '" + reward + "'");
    }
    return v;
  }

 private:
  // table[claim] lists entailment probabilities from every other sentence
  // whose normalized text differs from the claim; {0} when none remain.
  const std::vector<std::vector<double>>& entailment_table(const ToyInstance& inst) {
    auto it = tables_.find(inst.id);
    if (it != tables_.end()) return it->second;
    const std::size_t n = inst.sentences.size();
    std::vector<std::string> norm(n);
    for (std::size_t i = 0; i < n; ++i) norm[i] = scoring::normalize_text(inst.sentences[i]);
    std::vector<scoring::TextPair> pairs;
    std::vector<std::pair<std::size_t, std::size_t>> where;
    for (std::size_t claim = 0; claim < n; ++claim) {
      for (std::size_t premise = 0; premise < n; ++premise) {
        if (norm[premise] == norm[claim]) continue;
        pairs.emplace_back(inst.sentences[premise], inst.sentences[claim]);
        where.emplace_back(claim, premise);
      }
    }
    const auto probs = pairs.empty() ? std::vector<double>{} : entail_.entail(pairs);
    std::vector<std::vector<double>> table(n);
    for (std::size_t k = 0; k < pairs.size(); ++k) table[where[k].first].push_back(probs.at(k));
    for (auto& row : table) {
      if (row.empty()) row.push_back(0.0);
    }
    return tables_.emplace(inst.id, std::move(table)).first->second;
  }

  scoring::ScoreBackend& entail_;
  std::map<std::string, std::vector<std::vector<double>>> tables_;
};

struct StepDiagnostics {
  std::size_t step = 0;
  std::string reward;
  double mean_sampled_reward = 0.0;  // reward entering the loss
  double mean_greedy_reward = 0.0;
  double mean_sampled_raw = 0.0;     // un-normalized reward of the samples
  double l_rl = 0.0;
  double l_ml = 0.0;
  double mixed = 0.0;
  double grad_norm = 0.0;
};

// Rolls out every instance (one sample plus the greedy baseline), scores both
// under the scheduled reward and returns the frozen batch.
inline std::vector<FrozenExample> collect_traces(const ToyPolicy& policy, std::span<const ToyInstance> batch,
                                                 const std::string& reward, RewardModel& model, Rng& rng,
                                                 RewardValues* sampled_values = nullptr) {
  std::vector<FrozenExample> frozen(batch.size());
  std::vector<Candidate> candidates;
  candidates.reserve(2 * batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto sample = sample_rollout(policy, batch[i], rng);
    const auto greedy = greedy_rollout(policy, batch[i]);
    frozen[i].instance = &batch[i];
    frozen[i].trace.sampled_actions = sample.actions;
    frozen[i].trace.sampled_log_probs = sample.log_probs;
    frozen[i].trace.greedy_actions = greedy.actions;
    candidates.push_back({&batch[i], greedy.selection(batch[i])});
    candidates.push_back({&batch[i], sample.selection(batch[i])});
  }
  // Greedy and sampled outputs share one normalization population.
  const auto values = model.evaluate(reward, candidates);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    frozen[i].trace.reward_greedy = values.used[2 * i];
    frozen[i].trace.reward_sampled = values.used[2 * i + 1];
  }
  if (sampled_values) {
    sampled_values->used.clear();
    sampled_values->raw.clear();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      sampled_values->used.push_back(values.used[2 * i + 1]);
      sampled_values->raw.push_back(values.raw[2 * i + 1]);
    }
  }
  return frozen;
}

// One gradient step on the mixed loss with the reward chosen by `schedule`.
inline StepDiagnostics train_step(ToyPolicy& policy, std::span<const ToyInstance> batch,
                                  rewards::RewardSchedule& schedule, const MixWeights& w,
                                  double learning_rate, RewardModel& model, Rng& rng) {
  w.validate();
  if (batch.empty()) throw PreconditionError("train_step needs a non-empty batch");
  StepDiagnostics diag;
  diag.step = schedule.cursor;
  diag.reward = rewards::next_reward(schedule);

  RewardValues sampled;
  const auto frozen = collect_traces(policy, batch, diag.reward, model, rng, &sampled);
  const auto loss = mixed_loss_and_grad(policy, frozen, w);

  double sq = 0.0;
  for (double g : loss.grad) {
    if (!std::isfinite(g)) {
      throw NonFiniteGradientError("non-finite gradient at step " + std::to_string(diag.step) +
                                   " (l_rl=" + std::to_string(loss.l_rl) +
                                   ", l_ml=" + std::to_string(loss.l_ml) + ")");
    }
    sq += g * g;
  }
  const double n = static_cast<double>(batch.size());
  for (const auto& ex : frozen) diag.mean_greedy_reward += ex.trace.reward_greedy / n;
  for (double r : sampled.used) diag.mean_sampled_reward += r / n;
  for (double r : sampled.raw) diag.mean_sampled_raw += r / n;
  diag.l_rl = loss.l_rl;
  diag.l_ml = loss.l_ml;
  diag.mixed = loss.mixed;
  diag.grad_norm = std::sqrt(sq);

  if (learning_rate != 0.0) {
    for (std::size_t k = 0; k < policy.weights.size(); ++k) policy.weights[k] -= learning_rate * loss.grad[k];
  }
  return diag;
}

struct RewardWindows {
  std::size_t size = 0;
  double first = 0.0;  // mean over the first `size` steps
  double last = 0.0;   // mean over the last `size` steps
};

// Compares the start and end of a training curve. Each window holds whole
// schedule cycles when `size` is a multiple of the schedule length, so both
// windows weigh every reward equally.
inline RewardWindows windowed_reward(std::span<const StepDiagnostics> curve, std::size_t size = 20,
                                     double StepDiagnostics::*metric = &StepDiagnostics::mean_sampled_raw) {
  RewardWindows w;
  w.size = std::min(size, curve.size());
  if (w.size == 0) return w;
  for (std::size_t i = 0; i < w.size; ++i) {
    w.first += curve[i].*metric;
    w.last += curve[curve.size() - w.size + i].*metric;
  }
  w.first /= static_cast<double>(w.size);
  w.last /= static_cast<double>(w.size);
  return w;
}

// ---------------------------------------------------------------------------
// Instances from silver data

// Gold selection for a silver example: for each bullet, the input sentence
// nearest to it in embedding space (each input sentence used at most once),
// in bullet order.
inline std::vector<Action> nearest_gold(const geometry::EmbeddingMatrix& input,
                                        const geometry::EmbeddingMatrix& bullets) {
  std::vector<Action> gold;
  std::vector<bool> used(input.rows(), false);
  for (std::size_t b = 0; b < bullets.rows(); ++b) {
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < input.rows(); ++i) {
      if (used[i]) continue;
      const double d = geometry::cosine_distance(input.row(i), bullets.row(b));
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    if (best) {
      used[*best] = true;
      gold.push_back(*best);
    }
  }
  return gold;
}

inline ToyInstance make_instance(std::string id, std::vector<std::string> input,
                                 const std::vector<std::string>& bullets, scoring::ScoreBackend& embedder) {
  if (input.empty()) throw PreconditionError("instance " + id + " has no input sentences");
  ToyInstance inst;
  inst.id = std::move(id);
  inst.features = geometry::EmbeddingMatrix::from_rows(embedder.embed(input));
  if (!bullets.empty()) {
    inst.gold = nearest_gold(inst.features, geometry::EmbeddingMatrix::from_rows(embedder.embed(bullets)));
  }
  inst.sentences = std::move(input);
  return inst;
}

}  // namespace persumm::rltrain
