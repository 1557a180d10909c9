#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "persumm/rltrain.hpp"

using namespace persumm;
using namespace persumm::rltrain;

namespace {

ToyInstance random_instance(Rng& rng, std::size_t n, std::size_t dim, const std::string& id = "i") {
  ToyInstance inst;
  inst.id = id;
  inst.features = geometry::EmbeddingMatrix(n, dim);
  for (std::size_t r = 0; r < n; ++r) {
    inst.sentences.push_back(id + "/s" + std::to_string(r));
    for (std::size_t c = 0; c < dim; ++c) inst.features(r, c) = rng.normal();
  }
  std::vector<Action> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
  pool.resize(rng.below(n + 1));
  inst.gold = pool;
  return inst;
}

ToyPolicy random_policy(Rng& rng, std::size_t dim, double scale = 0.5) {
  ToyPolicy p = ToyPolicy::zeros(dim);
  for (auto& w : p.weights) w = scale * rng.normal();
  return p;
}

// Reward = number of selected sentences (raw and used alike).
class CountReward : public RewardModel {
 public:
  double nan_after = std::numeric_limits<double>::infinity();
  std::vector<std::string> seen;
  RewardValues evaluate(const std::string& reward, std::span<const Candidate> batch) override {
    seen.push_back(reward);
    RewardValues v;
    for (const auto& c : batch) {
      v.raw.push_back(static_cast<double>(c.selection.size()));
      v.used.push_back(seen.size() > nan_after ? NAN : v.raw.back());
    }
    return v;
  }
};

// log p of a path by direct softmax products, without log-sum-exp.
double direct_log_prob(const ToyPolicy& p, const ToyInstance& inst, const std::vector<Action>& seq) {
  std::vector<bool> used(inst.size(), false);
  double total = 0;
  for (Action a : seq) {
    double z = std::exp(p.weights.back()), num = 0;
    for (std::size_t i = 0; i < inst.size(); ++i) {
      if (used[i]) continue;
      double l = 0;
      for (std::size_t k = 0; k < p.dim(); ++k) l += p.weights[k] * inst.features(i, k);
      z += std::exp(l);
      if (i == a) num = std::exp(l);
    }
    if (a == inst.stop()) num = std::exp(p.weights.back());
    total += std::log(num / z);
    if (a == inst.stop()) break;
    used[a] = true;
  }
  return total;
}

}  // namespace

TEST(Nll, CertainPolicyGivesZero) {
  ToyInstance inst;
  inst.id = "c";
  inst.features = geometry::EmbeddingMatrix::from_rows({{1, 0}, {0, 1}});
  inst.gold = {0};
  ToyPolicy p{{1000, -1000, 0}};
  EXPECT_NEAR(nll_loss(p, inst), 0.0, 1e-12);
}

TEST(Nll, UniformPolicyGivesLogK) {
  Rng rng(1);
  auto inst = random_instance(rng, 6, 3);
  inst.gold = {};
  EXPECT_NEAR(nll_loss(ToyPolicy::zeros(3), inst), std::log(7.0), 1e-12);
}

TEST(Nll, MatchesDirectPathProbability) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = random_instance(rng, 2 + rng.below(8), 1 + rng.below(5));
    auto p = random_policy(rng, inst.features.dim());
    EXPECT_NEAR(nll_loss(p, inst), -direct_log_prob(p, inst, gold_sequence(inst)), 1e-10);
  }
}

TEST(Nll, ZeroProbabilityGoldThrows) {
  ToyInstance inst;
  inst.id = "z";
  inst.features = geometry::EmbeddingMatrix::from_rows({{1}, {2}});
  inst.gold = {0};
  ToyPolicy p{{-std::numeric_limits<double>::infinity(), 0}};
  EXPECT_THROW(nll_loss(p, inst), InfiniteLossError);
}

TEST(Nll, DescendsOnSingleExample) {
  Rng rng(3);
  auto inst = random_instance(rng, 6, 4);
  inst.gold = {4, 1, 2};
  auto p = random_policy(rng, 4);
  double prev = nll_loss(p, inst);
  for (int step = 0; step < 50; ++step) {
    std::vector<double> g(p.weights.size(), 0.0);
    nll_loss(p, inst, &g);
    for (std::size_t k = 0; k < g.size(); ++k) p.weights[k] -= 0.05 * g[k];
    const double now = nll_loss(p, inst);
    ASSERT_LT(now, prev) << step;
    prev = now;
  }
}

TEST(SelfCritical, Examples) {
  EXPECT_EQ(self_critical_loss(0.3, 0.3, -4.2), 0.0);
  EXPECT_DOUBLE_EQ(self_critical_loss(0.9, 0.4, -2.0), -1.0);
  PolicyTrace t;
  t.reward_greedy = 0.2;
  t.reward_sampled = 0.7;
  t.sampled_log_probs = {-0.5, -1.0};
  EXPECT_GT(self_critical_loss(t), 0.0);
}

TEST(SelfCritical, Bilinear) {
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    const double d = rng.uniform(-1, 1), s1 = -rng.uniform(0, 5), s2 = -rng.uniform(0, 5), a = rng.uniform(-3, 3);
    EXPECT_NEAR(self_critical_loss(a * d, 0, s1), a * self_critical_loss(d, 0, s1), 1e-12);
    EXPECT_NEAR(self_critical_loss(d, 0, s1 + s2), self_critical_loss(d, 0, s1) + self_critical_loss(d, 0, s2), 1e-12);
    EXPECT_NEAR(self_critical_loss(d, 0, a * s1), a * self_critical_loss(d, 0, s1), 1e-12);
  }
}

TEST(SelfCritical, BetterSampleIsPushedUp) {
  Rng rng(5);
  auto inst = random_instance(rng, 5, 3);
  auto p = random_policy(rng, 3);
  auto sample = sample_rollout(p, inst, rng);
  FrozenExample ex{&inst, {sample.actions, {}, sample.log_probs, 0.1, 0.9}};
  ASSERT_GT(self_critical_loss(ex.trace), 0.0);
  const MixWeights rl_only{1.0, 0.0};
  auto g = mixed_loss_and_grad(p, std::span(&ex, 1), rl_only).grad;
  double before = 0, after = 0;
  for (double lp : sequence_log_probs(p, inst, sample.actions)) before += lp;
  for (std::size_t k = 0; k < g.size(); ++k) p.weights[k] -= 1e-3 * g[k];
  for (double lp : sequence_log_probs(p, inst, sample.actions)) after += lp;
  EXPECT_GT(after, before);
}

TEST(Mixed, Examples) {
  EXPECT_EQ(mixed_loss(5.0, 2.0, {0.0, 0.3}), 0.3 * 2.0);
  EXPECT_EQ(mixed_loss(-1.0, 2.0, {1.0, 1.0}), 1.0);
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform(0, 2), b = rng.uniform(0, 2), x = rng.normal(), y = rng.normal();
    EXPECT_EQ(mixed_loss(x, y, {a, b}), a * x + b * y);
  }
  EXPECT_THROW((MixWeights{0, 0}.validate()), ArgumentError);
  EXPECT_THROW((MixWeights{-1, 1}.validate()), ArgumentError);
}

TEST(Rollout, GreedyTiesAndStepCap) {
  Rng rng(7);
  auto inst = random_instance(rng, 12, 3);
  auto g = greedy_rollout(ToyPolicy::zeros(3), inst);
  ASSERT_EQ(g.actions.size(), kStepCap);
  for (std::size_t t = 0; t < kStepCap; ++t) EXPECT_EQ(g.actions[t], t);
  auto small = random_instance(rng, 2, 3);
  auto gs = greedy_rollout(ToyPolicy::zeros(3), small);
  EXPECT_EQ(gs.actions, (std::vector<Action>{0, 1, small.stop()}));
}

TEST(Rollout, SamplesAreWellFormed) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = random_instance(rng, 1 + rng.below(14), 3);
    auto p = random_policy(rng, 3, 1.0);
    auto r = sample_rollout(p, inst, rng);
    ASSERT_FALSE(r.actions.empty());
    ASSERT_TRUE(r.actions.back() == inst.stop() || r.actions.size() == kStepCap);
    std::set<Action> distinct(r.actions.begin(), r.actions.end());
    ASSERT_EQ(distinct.size(), r.actions.size());
    for (double lp : r.log_probs) ASSERT_LE(lp, 0.0);
    const auto lps = sequence_log_probs(p, inst, r.actions);
    for (std::size_t t = 0; t < lps.size(); ++t) ASSERT_NEAR(lps[t], r.log_probs[t], 1e-12);
  }
}

TEST(GradCheck, ZeroPolicyMixedAndNllOnly) {
  Rng rng(9);
  std::vector<ToyInstance> insts;
  for (int i = 0; i < 3; ++i) insts.push_back(random_instance(rng, 4, 3, "i" + std::to_string(i)));
  std::vector<FrozenExample> batch;
  for (auto& inst : insts) {
    auto s = sample_rollout(ToyPolicy::zeros(3), inst, rng);
    batch.push_back({&inst, {s.actions, {}, s.log_probs, rng.uniform(), rng.uniform()}});
  }
  EXPECT_LT(grad_check(ToyPolicy::zeros(3), batch, {0.9, 0.1}), 1e-4);
  EXPECT_LT(grad_check(ToyPolicy::zeros(3), batch, {0.0, 1.0}), 1e-6);
  auto p = random_policy(rng, 3);
  EXPECT_LT(grad_check(p, batch, {0.9, 0.1}), 1e-4);
}

TEST(Bandit, ReinforceMatchesPolicyGradientWithin3Sigma) {
  // One sentence: the first step chooses between selecting it and STOP.
  ToyInstance inst;
  inst.id = "bandit";
  inst.sentences = {"only"};
  inst.features = geometry::EmbeddingMatrix::from_rows({{1.0}});
  const ToyPolicy p{{0.4, -0.3}};
  const double ps = 1.0 / (1.0 + std::exp(-(0.4 - -0.3)));
  // E[r] = p(select) with r = 1 for select and 0 for STOP.
  const std::vector<double> analytic{ps * (1 - ps), -ps * (1 - ps)};

  CountReward model;
  Rng rng(10);
  const int n = 20000;
  std::vector<double> mean(2, 0.0), sq(2, 0.0);
  std::vector<ToyInstance> batch{inst};
  for (int i = 0; i < n; ++i) {
    auto frozen = collect_traces(p, batch, "count", model, rng);
    auto g = mixed_loss_and_grad(p, frozen, {1.0, 0.0}).grad;
    for (int k = 0; k < 2; ++k) {
      mean[k] += -g[k] / n;
      sq[k] += g[k] * g[k] / n;
    }
  }
  for (int k = 0; k < 2; ++k) {
    const double se = std::sqrt((sq[k] - mean[k] * mean[k]) / n);
    EXPECT_LE(std::abs(mean[k] - analytic[k]), 3 * se) << k;
  }
}

TEST(TrainStep, ZeroLearningRateLeavesPolicy) {
  Rng rng(11);
  std::vector<ToyInstance> batch{random_instance(rng, 5, 3)};
  auto p = random_policy(rng, 3);
  const auto before = p.weights;
  rewards::RewardSchedule s;
  CountReward model;
  auto d = train_step(p, batch, s, {}, 0.0, model, rng);
  EXPECT_EQ(p.weights, before);
  EXPECT_GT(d.grad_norm, 0.0);
}

TEST(TrainStep, AlternatesRewards) {
  Rng rng(12);
  std::vector<ToyInstance> batch{random_instance(rng, 5, 3)};
  auto p = ToyPolicy::zeros(3);
  rewards::RewardSchedule s;
  CountReward model;
  std::vector<std::string> used;
  for (int k = 0; k < 5; ++k) used.push_back(train_step(p, batch, s, {}, 0.1, model, rng).reward);
  EXPECT_EQ(used, (std::vector<std::string>{"nli", "area", "nli", "area", "nli"}));
  EXPECT_EQ(model.seen, used);
}

TEST(TrainStep, NonFiniteGradientAborts) {
  Rng rng(13);
  std::vector<ToyInstance> batch{random_instance(rng, 5, 3)};
  auto p = ToyPolicy::zeros(3);
  rewards::RewardSchedule s;
  CountReward model;
  model.nan_after = 1;
  EXPECT_NO_THROW(train_step(p, batch, s, {}, 0.1, model, rng));
  EXPECT_THROW(train_step(p, batch, s, {}, 0.1, model, rng), NonFiniteGradientError);
}

TEST(Windows, FirstAndLastMeans) {
  std::vector<StepDiagnostics> curve(50);
  for (std::size_t i = 0; i < curve.size(); ++i) curve[i].mean_sampled_raw = static_cast<double>(i);
  auto w = windowed_reward(curve, 20);
  EXPECT_DOUBLE_EQ(w.first, 9.5);
  EXPECT_DOUBLE_EQ(w.last, 39.5);
  EXPECT_EQ(windowed_reward(std::span(curve).first(5), 20).size, 5u);
}

TEST(Instances, NearestGoldUsesEachSentenceOnce) {
  auto input = geometry::EmbeddingMatrix::from_rows({{1, 0}, {0, 1}, {1, 1}});
  auto bullets = geometry::EmbeddingMatrix::from_rows({{0.1, 1}, {0, 1}, {1, 0.05}});
  EXPECT_EQ(nearest_gold(input, bullets), (std::vector<Action>{1, 2, 0}));
}

TEST(ScoredRewards, NliExcludesSelfAndAreaIsNormalized) {
  Rng rng(14);
  scoring::ScoreFixture f;
  f.dim = 3;
  const std::vector<std::string> sents{"a", "b", "c", "d"};
  for (const auto& s : sents) f.embeddings[scoring::text_hash(s)] = oracle::gaussian(rng, 3);
  for (const auto& p : sents)
    for (const auto& c : sents) f.entailments[scoring::pair_key(p, c)] = p == c ? 0.99 : rng.uniform(0, 0.5);
  scoring::FixtureBackend backend(f);
  auto inst = make_instance("x", sents, {}, backend);
  ScoredRewardModel model(backend);

  std::vector<Candidate> batch{{&inst, {0, 2}}, {&inst, {1, 2, 3}}, {&inst, {}}, {&inst, {0, 1, 2, 3}}};
  auto nli = model.evaluate(rewards::kNli, batch);
  const std::vector<std::string> summary{"a", "c"};
  EXPECT_NEAR(nli.used[0], rewards::nli_reward(summary, sents, backend, {true}), 1e-15);
  EXPECT_EQ(nli.used[2], 0.0);

  auto area = model.evaluate(rewards::kArea, batch);
  EXPECT_EQ(area.raw[0], 0.0);
  EXPECT_EQ(area.used, rewards::minmax_normalize(area.raw));
  EXPECT_THROW(model.evaluate("bogus", batch), ArgumentError);
}
