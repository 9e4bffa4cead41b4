#include "prooftrain/scoring.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <set>

#include "prooftrain/corpus.hpp"
#include "prooftrain/io.hpp"
#include "oracles.hpp"

using namespace prooftrain;

namespace {

std::vector<Triplet> demo_bucket(int difficulty = 2) {
  GenConfig cfg;
  cfg.n_theorems = 50;
  cfg.max_depth = 5;
  Curriculum cur = build_curriculum(corpus_triplets(generate_corpus(cfg, 2718)));
  return curriculum_bucket(cur, difficulty);
}

ScoringConfig fast_config() {
  ScoringConfig cfg;
  cfg.n_candidates = 4;
  cfg.n_attempt = 5;
  cfg.subset_size = 6;
  cfg.budget.max_simulations = 24;
  cfg.budget.max_depth = 6;
  cfg.budget.max_expansions = 100000;
  return cfg;
}

}  // namespace

TEST(Scoring, ScoreIsAnExactAttemptRatio) {
  auto bucket = demo_bucket();
  TacticPolicy p = make_policy(31, 256);
  ScoringConfig cfg = fast_config();
  Rng rng(5);
  int checked = 0;
  for (std::size_t i = 0; i < bucket.size() && checked < 60; ++i, ++checked) {
    const Triplet& tr = bucket[i];
    int n_success = -1;
    double score = fgps_score(p, tr.state, tr.tactic, cfg, rng.next(), nullptr, &n_success);
    ASSERT_GE(n_success, 0);
    ASSERT_LE(n_success, cfg.n_attempt);
    // score times n_attempt reproduces the integer success count exactly
    EXPECT_EQ(score * cfg.n_attempt, static_cast<double>(n_success));
    EXPECT_GE(score, 0.0);
    EXPECT_LE(score, 1.0);
  }
  EXPECT_GT(checked, 30);
}

TEST(Scoring, WinningAndDeadEndMovesGetExtremeScores) {
  // h0 leads to b = b (one refl away); h1 leads to the dead end c = b
  ProofState s = parse_state("0: h0 : a = b; h1 : a = c; |- a = b");
  TacticPolicy p = make_policy(32, 64);
  ScoringConfig cfg = fast_config();
  cfg.n_attempt = 10;

  int n_success = -1;
  double win = fgps_score(p, s, parse_tactic("apply_hyp h0 lhs"), cfg, 99, nullptr, &n_success);
  EXPECT_DOUBLE_EQ(win, 1.0);
  EXPECT_EQ(n_success, 10);

  double dead = fgps_score(p, s, parse_tactic("apply_hyp h1 lhs"), cfg, 99, nullptr, &n_success);
  EXPECT_DOUBLE_EQ(dead, 0.0);
  EXPECT_EQ(n_success, 0);

  // a tactic that closes the goal outright gets full credit
  ProofState eq = parse_state("0: |- (+ a b) = (+ a b)");
  double refl = fgps_score(p, eq, parse_tactic("refl"), cfg, 99, nullptr, &n_success);
  EXPECT_DOUBLE_EQ(refl, 1.0);
  EXPECT_EQ(n_success, 10);

  EXPECT_THROW(fgps_score(p, s, parse_tactic("refl"), cfg, 99), Error);  // not applicable
  cfg.n_attempt = 0;
  EXPECT_THROW(fgps_score(p, s, parse_tactic("apply_hyp h0 lhs"), cfg, 99), Error);
}

TEST(Scoring, CandidateDrawsDeduplicateWithCounts) {
  TacticPolicy p = make_policy(33, 256);
  ProofState s = parse_state("0: |- (+ 0 (+ a b)) = (+ b a)");
  TacticDistribution d = policy_distribution(p, s);
  Rng rng(17);
  auto cands = sample_candidates(d, 20, rng);
  ASSERT_FALSE(cands.empty());
  int total = 0;
  std::set<std::string> seen;
  for (const auto& [tactic, count] : cands) {
    EXPECT_GT(count, 0);
    total += count;
    EXPECT_TRUE(seen.insert(to_string(tactic)).second) << "duplicate candidate";
  }
  EXPECT_EQ(total, 20);  // multiplicities account for every draw
}

TEST(Scoring, SubsetScoresCoverExactlyTheChosenStates) {
  auto bucket = demo_bucket();
  TacticPolicy p = make_policy(34, 256);
  ScoringConfig cfg = fast_config();
  SubsetScores sub = fgps_subset(p, bucket, cfg, 1234);

  std::size_t n_distinct = distinct_states(bucket).size();
  EXPECT_EQ(sub.scored.size(), std::min<std::size_t>(cfg.subset_size, n_distinct));
  EXPECT_EQ(sub.scored.size() + sub.remainder.size(), n_distinct);

  std::set<std::string> all;
  for (const ScoredState& row : sub.scored) {
    EXPECT_TRUE(all.insert(goals_key(row.state)).second);
    for (const ScoredCandidate& c : row.entries) {
      EXPECT_EQ(c.provenance, ScoreProvenance::Search);
      EXPECT_EQ(c.n_attempt, cfg.n_attempt);
      EXPECT_EQ(c.score * c.n_attempt, static_cast<double>(c.n_success));
    }
    int mult = 0;
    for (const ScoredCandidate& c : row.entries) mult += c.multiplicity;
    EXPECT_EQ(mult, cfg.n_candidates);
  }
  for (const ProofState& s : sub.remainder) EXPECT_TRUE(all.insert(goals_key(s)).second);
  EXPECT_EQ(all.size(), n_distinct);

  EXPECT_THROW(fgps_subset(p, {}, cfg, 1), Error);
}

TEST(Scoring, SubsetSelectionIsSeeded) {
  auto bucket = demo_bucket();
  TacticPolicy p = make_policy(35, 256);
  ScoringConfig cfg = fast_config();
  SubsetScores a = fgps_subset(p, bucket, cfg, 42);
  SubsetScores b = fgps_subset(p, bucket, cfg, 42);
  ASSERT_EQ(a.scored.size(), b.scored.size());
  for (std::size_t i = 0; i < a.scored.size(); ++i) {
    EXPECT_EQ(goals_key(a.scored[i].state), goals_key(b.scored[i].state));
    ASSERT_EQ(a.scored[i].entries.size(), b.scored[i].entries.size());
    for (std::size_t j = 0; j < a.scored[i].entries.size(); ++j) {
      EXPECT_EQ(a.scored[i].entries[j].tactic, b.scored[i].entries[j].tactic);
      EXPECT_EQ(a.scored[i].entries[j].score, b.scored[i].entries[j].score);
    }
  }
  SubsetScores c = fgps_subset(p, bucket, cfg, 43);
  bool same = a.scored.size() == c.scored.size();
  if (same)
    for (std::size_t i = 0; i < a.scored.size(); ++i)
      same = same && goals_key(a.scored[i].state) == goals_key(c.scored[i].state);
  EXPECT_FALSE(same) << "different seeds should pick different subsets";
}

TEST(Scoring, GeneratorScoresTheRemainder) {
  auto bucket = demo_bucket();
  TacticPolicy p = make_policy(36, 256);
  ScoringConfig cfg = fast_config();
  SubsetScores sub = fgps_subset(p, bucket, cfg, 7);
  ASSERT_FALSE(sub.remainder.empty());

  ScoreRegressor unfitted = make_regressor(256);
  EXPECT_THROW(generator_score_remainder(unfitted, p, sub.remainder, cfg, 8), Error);

  ScoreRegressor reg = make_regressor(256);
  RegConfig rc;
  rc.epochs = 20;
  regressor_fit(reg, scored_examples(sub.scored), rc);
  ScoredCandidateSet gen = generator_score_remainder(reg, p, sub.remainder, cfg, 8);
  ASSERT_EQ(gen.size(), sub.remainder.size());
  for (const ScoredState& row : gen) {
    for (const ScoredCandidate& c : row.entries) {
      EXPECT_EQ(c.provenance, ScoreProvenance::Generator);
      EXPECT_EQ(c.n_attempt, 0);
      EXPECT_EQ(c.n_success, 0);
      EXPECT_GT(c.score, 0.0);
      EXPECT_LT(c.score, 1.0);
      EXPECT_NEAR(c.score, regressor_predict(reg, row.state, c.tactic), 1e-12);
    }
  }

  // merged coverage equals the distinct states of the bucket
  ScoredCandidateSet merged = merge_scores(sub.scored, gen);
  EXPECT_EQ(merged.size(), distinct_states(bucket).size());
}

TEST(Scoring, ScoresJsonlRoundTrip) {
  auto bucket = demo_bucket();
  TacticPolicy p = make_policy(37, 256);
  ScoringConfig cfg = fast_config();
  cfg.subset_size = 4;
  SubsetScores sub = fgps_subset(p, bucket, cfg, 55);

  std::string path = "scores_roundtrip_test.jsonl";
  write_scores(path, sub.scored);
  ScoredCandidateSet back = read_scores(path);
  ASSERT_EQ(back.size(), sub.scored.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(goals_key(back[i].state), goals_key(sub.scored[i].state));
    ASSERT_EQ(back[i].entries.size(), sub.scored[i].entries.size());
    for (std::size_t j = 0; j < back[i].entries.size(); ++j) {
      const ScoredCandidate& x = back[i].entries[j];
      const ScoredCandidate& y = sub.scored[i].entries[j];
      EXPECT_EQ(x.tactic, y.tactic);
      EXPECT_DOUBLE_EQ(x.score, y.score);
      EXPECT_EQ(x.provenance, y.provenance);
      EXPECT_EQ(x.n_success, y.n_success);
      EXPECT_EQ(x.n_attempt, y.n_attempt);
      EXPECT_EQ(x.multiplicity, y.multiplicity);
    }
  }
  std::remove(path.c_str());
}
