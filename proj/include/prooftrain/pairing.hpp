#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "prooftrain/errors.hpp"
#include "prooftrain/io.hpp"
#include "prooftrain/kernel.hpp"
#include "prooftrain/scoring.hpp"

namespace prooftrain {

struct PairingConfig {
  double threshold = 0.5;        // margin must strictly exceed this
  bool allow_dual_role = false;  // may one tactic be chosen in one pair and rejected in another?
  bool same_provenance_only = false;
  int max_pairs_per_state = 0;  // 0 = no cap
};

struct PreferencePair {
  ProofState state;
  Tactic chosen, rejected;
  double score_w = 0.0, score_l = 0.0;
};

// Builds preference pairs per state: every ordered candidate pair whose score
// margin strictly exceeds the threshold, taken in descending-margin order
// (ties broken on serialized tactics). With dual roles forbidden, a pair is
// kept only if its winner never lost earlier and its loser never won earlier;
// reuse within one role stays allowed.
inline std::vector<PreferencePair> filter_and_pair(const ScoredCandidateSet& sc,
                                                   const PairingConfig& cfg) {
  if (!(cfg.threshold > 0.0 && cfg.threshold <= 1.0))
    raise(Errc::InvalidThreshold, "threshold must lie in (0, 1]");
  if (cfg.max_pairs_per_state < 0) raise(Errc::InvalidConfig, "negative pair cap");

  std::vector<PreferencePair> out;
  for (const ScoredState& row : sc) {
    struct Cand {
      std::size_t w, l;
      double margin;
      std::string w_key, l_key;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < row.entries.size(); ++i) {
      for (std::size_t j = 0; j < row.entries.size(); ++j) {
        if (i == j) continue;
        const ScoredCandidate& a = row.entries[i];
        const ScoredCandidate& b = row.entries[j];
        if (cfg.same_provenance_only && a.provenance != b.provenance) continue;
        double margin = a.score - b.score;
        if (!(a.score > b.score) || !(margin > cfg.threshold)) continue;
        cands.push_back(Cand{i, j, margin, to_string(a.tactic), to_string(b.tactic)});
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.margin != b.margin) return a.margin > b.margin;
      return std::tie(a.w_key, a.l_key) < std::tie(b.w_key, b.l_key);
    });

    std::set<std::string> winners, losers;
    int taken = 0;
    for (const Cand& c : cands) {
      if (cfg.max_pairs_per_state > 0 && taken >= cfg.max_pairs_per_state) break;
      if (!cfg.allow_dual_role) {
        if (losers.count(c.w_key) || winners.count(c.l_key)) continue;
      }
      winners.insert(c.w_key);
      losers.insert(c.l_key);
      out.push_back(PreferencePair{row.state, row.entries[c.w].tactic, row.entries[c.l].tactic,
                                   row.entries[c.w].score, row.entries[c.l].score});
      ++taken;
    }
  }
  return out;
}

struct PairStats {
  int n_pairs = 0;
  int n_states = 0;  // distinct states contributing pairs
  double mean_margin = 0.0;
  double min_margin = 0.0;
};

inline PairStats pair_stats(const std::vector<PreferencePair>& pairs) {
  PairStats st;
  st.n_pairs = static_cast<int>(pairs.size());
  if (pairs.empty()) return st;
  std::set<std::string> states;
  double sum = 0.0, mn = 2.0;
  for (const PreferencePair& p : pairs) {
    states.insert(goals_key(p.state));
    double m = p.score_w - p.score_l;
    sum += m;
    mn = std::min(mn, m);
  }
  st.n_states = static_cast<int>(states.size());
  st.mean_margin = sum / static_cast<double>(pairs.size());
  st.min_margin = mn;
  return st;
}

inline void write_pairs(const std::filesystem::path& path,
                        const std::vector<PreferencePair>& pairs) {
  std::vector<Json> rows;
  rows.reserve(pairs.size());
  for (const PreferencePair& p : pairs) {
    Json row;
    row["state"] = to_string(p.state);
    row["chosen"] = to_string(p.chosen);
    row["rejected"] = to_string(p.rejected);
    row["score_w"] = p.score_w;
    row["score_l"] = p.score_l;
    rows.push_back(std::move(row));
  }
  write_jsonl(path, rows);
}

inline std::vector<PreferencePair> read_pairs(const std::filesystem::path& path) {
  std::vector<PreferencePair> out;
  for (const Json& row : read_jsonl(path)) {
    PreferencePair p;
    p.state = parse_state(row.at("state").get<std::string>());
    p.chosen = parse_tactic(row.at("chosen").get<std::string>());
    p.rejected = parse_tactic(row.at("rejected").get<std::string>());
    p.score_w = row.at("score_w").get<double>();
    p.score_l = row.at("score_l").get<double>();
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace prooftrain
