#include "prooftrain/dpo.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "prooftrain/corpus.hpp"
#include "prooftrain/pairing.hpp"
#include "prooftrain/scoring.hpp"
#include "oracles.hpp"

using namespace prooftrain;

namespace {

// preference pairs with real scores from a small search-scored bucket
std::vector<PreferencePair> demo_pairs(std::uint64_t seed, double threshold = 0.3) {
  GenConfig gc;
  gc.n_theorems = 40;
  gc.max_depth = 4;
  Curriculum cur = build_curriculum(corpus_triplets(generate_corpus(gc, seed)));
  TacticPolicy p = make_policy(seed, 256);
  ScoringConfig sc;
  sc.n_candidates = 4;
  sc.n_attempt = 4;
  sc.subset_size = 12;
  sc.budget.max_simulations = 16;
  sc.budget.max_depth = 6;
  sc.budget.max_expansions = 100000;
  SubsetScores sub = fgps_subset(p, curriculum_bucket(cur, 2), sc, seed);
  PairingConfig pc;
  pc.threshold = threshold;
  return filter_and_pair(sub.scored, pc);
}

}  // namespace

TEST(Dpo, SoftplusAgreesWithClosedForm) {
  // -log sigmoid(0.2), a handy anchor value
  EXPECT_NEAR(softplus(-0.2), 0.5981388693815918, 1e-15);
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(softplus(-40.0), 0.0, 1e-15);  // clamped tail
}

TEST(Dpo, IdenticalPoliciesSitAtLogTwo) {
  auto pairs = demo_pairs(61);
  ASSERT_FALSE(pairs.empty());
  TacticPolicy ref = make_policy(612, 256);
  TacticPolicy theta = ref;
  EXPECT_NEAR(dpo_loss(theta, ref, pairs, 0.1), std::log(2.0), 1e-12);
  EXPECT_NEAR(dpo_loss(theta, ref, pairs, 0.7), std::log(2.0), 1e-12);
}

TEST(Dpo, LossMatchesFullLogProbFormula) {
  // the shared-normalizer shortcut must equal the literal definition computed
  // from full per-state log probabilities
  auto pairs = demo_pairs(62);
  ASSERT_FALSE(pairs.empty());
  TacticPolicy ref = make_policy(620, 256, 0.8);
  TacticPolicy theta = make_policy(621, 256, 0.8);
  const double beta = 0.25;

  double manual = 0.0;
  for (const PreferencePair& p : pairs) {
    double gap_theta =
        policy_log_prob(theta, p.state, p.chosen) - policy_log_prob(theta, p.state, p.rejected);
    double gap_ref =
        policy_log_prob(ref, p.state, p.chosen) - policy_log_prob(ref, p.state, p.rejected);
    manual += softplus(-beta * (gap_theta - gap_ref));
  }
  manual /= static_cast<double>(pairs.size());
  EXPECT_NEAR(dpo_loss(theta, ref, pairs, beta), manual, 1e-10);
}

TEST(Dpo, GradientMatchesFiniteDifferences) {
  auto pairs = demo_pairs(63);
  ASSERT_FALSE(pairs.empty());
  TacticPolicy ref = make_policy(630, 64, 1.3);
  TacticPolicy theta = make_policy(631, 64, 1.3);
  const double beta = 0.1;

  std::vector<double> grad = dpo_grad(theta, ref, pairs, beta);
  auto loss_at = [&](const std::vector<double>& w) {
    TacticPolicy q = theta;
    q.w = w;
    return dpo_loss(q, ref, pairs, beta);
  };
  auto fd = oracles::fd_gradient(loss_at, theta.w, 1e-6);
  EXPECT_LT(oracles::rel_error(grad, fd), 1e-6);
}

TEST(Dpo, FitLowersLossAndRaisesMargins) {
  auto pairs = demo_pairs(64);
  ASSERT_FALSE(pairs.empty());
  TacticPolicy ref = make_policy(640, 256);
  TacticPolicy theta = ref;

  auto mean_gap = [&](const TacticPolicy& q) {
    double g = 0.0;
    for (const PreferencePair& p : pairs)
      g += policy_log_prob(q, p.state, p.chosen) - policy_log_prob(q, p.state, p.rejected);
    return g / static_cast<double>(pairs.size());
  };
  double gap_before = mean_gap(theta);

  DpoConfig cfg;
  cfg.beta = 0.1;
  cfg.lr = 1.0;
  cfg.epochs = 25;
  FitStats stats = dpo_fit(theta, ref, pairs, cfg);
  EXPECT_NEAR(stats.initial_loss, std::log(2.0), 1e-12);
  EXPECT_LT(stats.final_loss, stats.initial_loss);
  EXPECT_GT(mean_gap(theta), gap_before);
  EXPECT_EQ(ref.w, make_policy(640, 256).w);  // reference never moves
}

TEST(Dpo, InputValidation) {
  auto pairs = demo_pairs(65);
  ASSERT_FALSE(pairs.empty());
  TacticPolicy ref = make_policy(650, 128);
  TacticPolicy theta = ref;

  try {
    dpo_loss(theta, ref, {}, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyPairs);
  }

  TacticPolicy wrong_dim = make_policy(650, 64);
  EXPECT_THROW(dpo_loss(wrong_dim, ref, pairs, 0.1), Error);
  TacticPolicy wrong_temp = ref;
  wrong_temp.temperature = 2.0;
  EXPECT_THROW(dpo_loss(wrong_temp, ref, pairs, 0.1), Error);
  EXPECT_THROW(dpo_loss(theta, ref, pairs, 0.0), Error);
  EXPECT_THROW(dpo_loss(theta, ref, pairs, -1.0), Error);

  DpoConfig cfg;
  cfg.lr = 0.0;
  EXPECT_THROW(dpo_fit(theta, ref, pairs, cfg), Error);
}
