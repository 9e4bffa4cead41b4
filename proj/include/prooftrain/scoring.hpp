#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include "prooftrain/corpus.hpp"
#include "prooftrain/errors.hpp"
#include "prooftrain/io.hpp"
#include "prooftrain/policy.hpp"
#include "prooftrain/search.hpp"

namespace prooftrain {

enum class ScoreProvenance : std::uint8_t { Search, Generator };

inline const char* provenance_name(ScoreProvenance p) {
  return p == ScoreProvenance::Search ? "search" : "generator";
}

struct ScoredCandidate {
  Tactic tactic;
  double score = 0.0;
  ScoreProvenance provenance = ScoreProvenance::Search;
  int n_success = 0, n_attempt = 0;  // zero for generator scores
  int multiplicity = 1;              // how many policy draws produced this tactic
};

struct ScoredState {
  ProofState state;
  std::vector<ScoredCandidate> entries;
};

using ScoredCandidateSet = std::vector<ScoredState>;

struct ScoringConfig {
  int n_candidates = 32;  // policy draws per state
  int n_attempt = 10;    // search attempts behind one score
  int subset_size = 48;  // states per bucket scored by search
  SearchBudget budget{64, 10, 1000, 60.0};
  double c_puct = 1.0;
};

// The score of a tactic at a state: apply it, then measure how often seeded
// tree search closes the successor. Exactly n_success / n_attempt. A tactic
// that closes the goal outright counts as succeeding on every attempt.
inline double fgps_score(const TacticPolicy& policy, const ProofState& s, const Tactic& t,
                         const ScoringConfig& cfg, std::uint64_t seed,
                         PolicyEvalCache* cache = nullptr, int* out_n_success = nullptr) {
  if (cfg.n_attempt <= 0) raise(Errc::InvalidConfig, "n_attempt must be positive");
  ProofState next = apply_tactic(s, t);
  int n_success = 0;
  if (is_proved(next)) {
    n_success = cfg.n_attempt;
  } else {
    for (int j = 0; j < cfg.n_attempt; ++j) {
      SearchResult r = mcts_attempt(policy, next, cfg.budget, mix64(seed, static_cast<std::uint64_t>(j)),
                                    cfg.c_puct, cache);
      if (r.outcome == SearchOutcome::Proved) ++n_success;
    }
  }
  if (out_n_success != nullptr) *out_n_success = n_success;
  return static_cast<double>(n_success) / static_cast<double>(cfg.n_attempt);
}

// n policy draws, deduplicated into (tactic, draw count) in first-draw order.
inline std::vector<std::pair<Tactic, int>> sample_candidates(const TacticDistribution& dist,
                                                             int n, Rng& rng) {
  std::vector<std::pair<Tactic, int>> out;
  if (dist.tactics.empty()) return out;
  std::vector<int> counts(dist.tactics.size(), 0);
  std::vector<std::size_t> order;
  for (int draw = 0; draw < n; ++draw) {
    std::size_t i = sample_index(dist, rng);
    if (counts[i] == 0) order.push_back(i);
    ++counts[i];
  }
  for (std::size_t i : order) out.emplace_back(dist.tactics[i], counts[i]);
  return out;
}

// Distinct states of a bucket, first-occurrence order.
inline std::vector<ProofState> distinct_states(const std::vector<Triplet>& bucket) {
  std::vector<ProofState> out;
  std::set<std::string> seen;
  for (const Triplet& t : bucket) {
    if (seen.insert(goals_key(t.state)).second) out.push_back(t.state);
  }
  return out;
}

struct SubsetScores {
  ScoredCandidateSet scored;          // search-scored subset
  std::vector<ProofState> remainder;  // bucket states left for the generator
};

// Scores a seeded subset of the bucket's states by search. For each chosen
// state, candidate tactics are drawn from the policy, deduplicated with their
// draw counts, and each distinct tactic gets a search-backed score.
inline SubsetScores fgps_subset(const TacticPolicy& policy, const std::vector<Triplet>& bucket,
                                const ScoringConfig& cfg, std::uint64_t seed) {
  if (bucket.empty()) raise(Errc::EmptyBucket, "cannot score an empty bucket");
  if (cfg.n_candidates <= 0 || cfg.subset_size < 0)
    raise(Errc::InvalidConfig, "bad scoring config");
  std::vector<ProofState> states = distinct_states(bucket);
  std::size_t take = std::min(states.size(), static_cast<std::size_t>(cfg.subset_size));
  Rng pick_rng(Rng::derive(seed, "fgps_subset"));
  std::vector<std::size_t> picked = pick_rng.sample_without_replacement(states.size(), take);
  std::vector<bool> in_subset(states.size(), false);
  for (std::size_t i : picked) in_subset[i] = true;

  SubsetScores out;
  for (std::size_t si = 0; si < states.size(); ++si) {
    if (!in_subset[si]) {
      out.remainder.push_back(states[si]);
      continue;
    }
    const ProofState& s = states[si];
    std::uint64_t state_seed = mix64(seed, 0x5c01ull, static_cast<std::uint64_t>(si));
    Rng cand_rng(Rng::derive(state_seed, "candidates"));
    PolicyEvalCache cache;
    std::shared_ptr<const TacticDistribution> dist = get_distribution(policy, s, &cache);
    ScoredState row;
    row.state = s;
    std::vector<std::pair<Tactic, int>> cands = sample_candidates(*dist, cfg.n_candidates, cand_rng);
    for (std::size_t ci = 0; ci < cands.size(); ++ci) {
      ScoredCandidate sc;
      sc.tactic = cands[ci].first;
      sc.multiplicity = cands[ci].second;
      sc.provenance = ScoreProvenance::Search;
      sc.n_attempt = cfg.n_attempt;
      sc.score = fgps_score(policy, s, sc.tactic, cfg,
                            mix64(state_seed, static_cast<std::uint64_t>(ci)), &cache,
                            &sc.n_success);
      row.entries.push_back(std::move(sc));
    }
    out.scored.push_back(std::move(row));
  }
  return out;
}

// Scores the remaining states with the fitted regressor instead of search.
// Candidates are drawn the same way; n_success/n_attempt stay zero because no
// search happened behind these numbers.
inline ScoredCandidateSet generator_score_remainder(const ScoreRegressor& reg,
                                                    const TacticPolicy& policy,
                                                    std::span<const ProofState> states,
                                                    const ScoringConfig& cfg,
                                                    std::uint64_t seed) {
  if (!reg.fitted) raise(Errc::UnfittedRegressor, "fit the regressor before generator scoring");
  ScoredCandidateSet out;
  for (std::size_t si = 0; si < states.size(); ++si) {
    const ProofState& s = states[si];
    std::uint64_t state_seed = mix64(seed, 0x9e4eull, static_cast<std::uint64_t>(si));
    Rng cand_rng(Rng::derive(state_seed, "candidates"));
    TacticDistribution dist = policy_distribution(policy, s);
    ScoredState row;
    row.state = s;
    StateContext ctx = make_context(s);
    for (auto& [tactic, count] : sample_candidates(dist, cfg.n_candidates, cand_rng)) {
      ScoredCandidate sc;
      sc.tactic = tactic;
      sc.multiplicity = count;
      sc.provenance = ScoreProvenance::Generator;
      sc.score = sigmoid(dot(state_tactic_features(s, ctx, tactic, reg.dim), reg.v));
      row.entries.push_back(std::move(sc));
    }
    out.push_back(std::move(row));
  }
  return out;
}

// Search scores become regression targets.
inline std::vector<ScoredExample> scored_examples(const ScoredCandidateSet& sc) {
  std::vector<ScoredExample> out;
  for (const ScoredState& row : sc)
    for (const ScoredCandidate& c : row.entries)
      out.push_back(ScoredExample{row.state, c.tactic, c.score});
  return out;
}

inline ScoredCandidateSet merge_scores(ScoredCandidateSet a, ScoredCandidateSet b) {
  a.insert(a.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
  return a;
}

// ---------------------------------------------------------------------------
// JSONL persistence.

inline void write_scores(const std::filesystem::path& path, const ScoredCandidateSet& sc) {
  std::vector<Json> rows;
  rows.reserve(sc.size());
  for (const ScoredState& row : sc) {
    Json j;
    j["state"] = to_string(row.state);
    Json entries = Json::array();
    for (const ScoredCandidate& c : row.entries) {
      Json e;
      e["tactic"] = to_string(c.tactic);
      e["score"] = c.score;
      e["provenance"] = provenance_name(c.provenance);
      e["n_success"] = c.n_success;
      e["n_attempt"] = c.n_attempt;
      e["multiplicity"] = c.multiplicity;
      entries.push_back(std::move(e));
    }
    j["entries"] = std::move(entries);
    rows.push_back(std::move(j));
  }
  write_jsonl(path, rows);
}

inline ScoredCandidateSet read_scores(const std::filesystem::path& path) {
  ScoredCandidateSet out;
  for (const Json& row : read_jsonl(path)) {
    ScoredState s;
    s.state = parse_state(row.at("state").get<std::string>());
    for (const Json& e : row.at("entries")) {
      ScoredCandidate c;
      c.tactic = parse_tactic(e.at("tactic").get<std::string>());
      c.score = e.at("score").get<double>();
      std::string prov = e.at("provenance").get<std::string>();
      if (prov == "search") {
        c.provenance = ScoreProvenance::Search;
      } else if (prov == "generator") {
        c.provenance = ScoreProvenance::Generator;
      } else {
        raise(Errc::ParseError, "unknown provenance: " + prov);
      }
      c.n_success = e.at("n_success").get<int>();
      c.n_attempt = e.at("n_attempt").get<int>();
      c.multiplicity = e.at("multiplicity").get<int>();
      s.entries.push_back(std::move(c));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace prooftrain
