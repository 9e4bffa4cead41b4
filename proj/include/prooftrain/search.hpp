#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "prooftrain/corpus.hpp"
#include "prooftrain/errors.hpp"
#include "prooftrain/io.hpp"
#include "prooftrain/kernel.hpp"
#include "prooftrain/policy.hpp"
#include "prooftrain/rng.hpp"

namespace prooftrain {

struct SearchBudget {
  int max_simulations = 1000;  // tree-search simulations
  int max_depth = 10;          // tactics from the search root
  int max_expansions = 1000;   // best-first node expansions; 0 is an immediate budget hit
  double max_seconds = 60.0;
};

inline void validate_budget(const SearchBudget& b) {
  if (b.max_simulations <= 0 || b.max_depth <= 0 || b.max_expansions < 0 ||
      !(b.max_seconds > 0.0)) {
    raise(Errc::InvalidConfig, "search budget limits must be positive (expansions may be 0)");
  }
}

enum class SearchOutcome : std::uint8_t { Proved, Exhausted, BudgetHit };

inline const char* outcome_name(SearchOutcome o) {
  switch (o) {
    case SearchOutcome::Proved: return "proved";
    case SearchOutcome::Exhausted: return "exhausted";
    case SearchOutcome::BudgetHit: return "budget_hit";
  }
  return "?";
}

inline SearchOutcome outcome_from_name(std::string_view s) {
  if (s == "proved") return SearchOutcome::Proved;
  if (s == "exhausted") return SearchOutcome::Exhausted;
  if (s == "budget_hit") return SearchOutcome::BudgetHit;
  raise(Errc::ParseError, "unknown outcome: " + std::string(s));
}

struct SearchResult {
  SearchOutcome outcome = SearchOutcome::BudgetHit;
  std::vector<Tactic> proof;  // set iff outcome == Proved
  int nodes = 0;              // simulations (tree search) or expansions (best-first)
  int root_visits = 0;        // tree search only; equals completed simulations
  double elapsed = 0.0;       // seconds
};

inline bool proof_closes(const ProofState& root, std::span<const Tactic> proof) {
  ProofState cur = root;
  for (const Tactic& t : proof) {
    std::optional<ProofState> next = try_apply(cur, t);
    if (!next) return false;
    cur = std::move(*next);
  }
  return is_proved(cur);
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline void check_proof(const ProofState& root, const std::vector<Tactic>& proof) {
  if (!proof_closes(root, proof)) raise(Errc::ReplayMismatch, "search produced an invalid proof");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Monte Carlo tree search with policy priors. Selection maximizes
// Q + c * P * sqrt(N_parent) / (1 + N_edge); leaves are scored by a
// policy-guided rollout, proved = 1 and stuck or out of depth = 0. Fully
// explored subtrees are marked dead and never reselected, so a root that goes
// dead means the bounded search space holds no proof.

namespace detail {

struct MctsNode {
  ProofState state;
  std::shared_ptr<const TacticDistribution> dist;
  std::vector<int> child;  // node index per tactic, -1 until materialized
  std::vector<double> edge_w;
  std::vector<int> edge_n;
  int visits = 0;
  bool dead = false;  // no proof anywhere below within the depth budget
};

}  // namespace detail

inline SearchResult mcts_attempt(const TacticPolicy& policy, const ProofState& root,
                                 const SearchBudget& budget, std::uint64_t seed,
                                 double c_puct = 1.0, PolicyEvalCache* cache = nullptr) {
  validate_budget(budget);
  auto start = std::chrono::steady_clock::now();
  SearchResult res;
  if (is_proved(root)) {
    res.outcome = SearchOutcome::Proved;
    res.elapsed = detail::seconds_since(start);
    return res;
  }

  Rng rng(Rng::derive(seed, "mcts"));
  std::vector<detail::MctsNode> pool;
  auto make_node = [&](ProofState s) {
    detail::MctsNode n;
    n.dist = get_distribution(policy, s, cache);
    n.state = std::move(s);
    std::size_t deg = n.dist->tactics.size();
    n.child.assign(deg, -1);
    n.edge_w.assign(deg, 0.0);
    n.edge_n.assign(deg, 0);
    n.dead = deg == 0 && !is_proved(n.state);
    pool.push_back(std::move(n));
    return static_cast<int>(pool.size() - 1);
  };
  make_node(root);

  auto rollout = [&](const ProofState& from, int depth_left) {
    ProofState cur = from;
    while (!is_proved(cur)) {
      if (depth_left <= 0) return 0.0;
      std::shared_ptr<const TacticDistribution> d = get_distribution(policy, cur, cache);
      if (d->tactics.empty()) return 0.0;
      std::size_t pick = sample_index(*d, rng);
      cur = apply_tactic(cur, d->tactics[pick]);
      --depth_left;
    }
    return 1.0;
  };

  for (int sim = 0; sim < budget.max_simulations; ++sim) {
    if (pool[0].dead) {
      res.outcome = SearchOutcome::Exhausted;
      res.root_visits = pool[0].visits;
      res.elapsed = detail::seconds_since(start);
      return res;
    }
    if (detail::seconds_since(start) > budget.max_seconds) {
      res.outcome = SearchOutcome::BudgetHit;
      res.root_visits = pool[0].visits;
      res.elapsed = detail::seconds_since(start);
      return res;
    }

    // Selection: walk live edges until an unmaterialized edge or a leaf.
    int cur = 0;
    int depth = 0;
    std::vector<std::pair<int, std::size_t>> path;  // (node, edge)
    double value = 0.0;
    bool value_set = false;
    std::vector<Tactic> proof_found;
    while (true) {
      detail::MctsNode& node = pool[static_cast<std::size_t>(cur)];
      double sqrt_n = std::sqrt(static_cast<double>(node.visits) + 1.0);
      int best = -1;
      double best_score = 0.0;
      for (std::size_t e = 0; e < node.dist->tactics.size(); ++e) {
        int c = node.child[e];
        if (c >= 0 && pool[static_cast<std::size_t>(c)].dead) continue;
        double q = node.edge_n[e] > 0 ? node.edge_w[e] / node.edge_n[e] : 0.0;
        double u = c_puct * node.dist->probs[e] * sqrt_n / (1.0 + node.edge_n[e]);
        double score = q + u;
        if (best < 0 || score > best_score) {
          best = static_cast<int>(e);
          best_score = score;
        }
      }
      if (best < 0) {
        // Every edge leads to a dead child; this node is exhausted too.
        node.dead = true;
        value = 0.0;
        value_set = true;
        break;
      }
      auto e = static_cast<std::size_t>(best);
      path.emplace_back(cur, e);
      ++depth;
      if (node.child[e] < 0) {
        ProofState next = apply_tactic(node.state, node.dist->tactics[e]);
        bool proved = is_proved(next);
        int idx = make_node(std::move(next));
        // make_node may reallocate the pool; `node` is dead from here on.
        pool[static_cast<std::size_t>(cur)].child[e] = idx;
        if (proved) {
          for (const auto& [ni, ei] : path)
            proof_found.push_back(pool[static_cast<std::size_t>(ni)].dist->tactics[ei]);
          value = 1.0;
        } else if (depth >= budget.max_depth) {
          pool[static_cast<std::size_t>(idx)].dead = true;
          value = 0.0;
        } else {
          value = rollout(pool[static_cast<std::size_t>(idx)].state, budget.max_depth - depth);
        }
        value_set = true;
        break;
      }
      cur = node.child[e];
      detail::MctsNode& child = pool[static_cast<std::size_t>(cur)];
      if (is_proved(child.state)) {
        for (const auto& [ni, ei] : path)
          proof_found.push_back(pool[static_cast<std::size_t>(ni)].dist->tactics[ei]);
        value = 1.0;
        value_set = true;
        break;
      }
      if (depth >= budget.max_depth) {
        child.dead = true;
        value = 0.0;
        value_set = true;
        break;
      }
    }
    (void)value_set;
    if (path.empty()) {
      // The root itself just went dead; nothing was simulated this round.
      res.outcome = SearchOutcome::Exhausted;
      res.root_visits = pool[0].visits;
      res.elapsed = detail::seconds_since(start);
      return res;
    }

    // Backpropagation, plus upward dead-state propagation.
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      detail::MctsNode& node = pool[static_cast<std::size_t>(it->first)];
      node.edge_w[it->second] += value;
      node.edge_n[it->second] += 1;
      node.visits += 1;
      bool all_dead = true;
      for (std::size_t e = 0; e < node.child.size(); ++e) {
        int c = node.child[e];
        if (c < 0 || !pool[static_cast<std::size_t>(c)].dead) {
          all_dead = false;
          break;
        }
      }
      if (all_dead) node.dead = true;
    }
    res.nodes = sim + 1;

    if (!proof_found.empty()) {
      detail::check_proof(root, proof_found);
      res.outcome = SearchOutcome::Proved;
      res.proof = std::move(proof_found);
      res.root_visits = pool[0].visits;
      res.elapsed = detail::seconds_since(start);
      return res;
    }
  }

  res.outcome = pool[0].dead ? SearchOutcome::Exhausted : SearchOutcome::BudgetHit;
  res.root_visits = pool[0].visits;
  res.elapsed = detail::seconds_since(start);
  return res;
}

// ---------------------------------------------------------------------------
// Best-first search ordered by cumulative policy log probability. Without a
// seed the top_k most probable tactics of each expanded state are pushed; with
// a seed the candidate set comes from top_k policy draws (deduplicated), so
// different seeds explore different slices of the tree.

inline SearchResult best_first_attempt(const TacticPolicy& policy, const ProofState& root,
                                       const SearchBudget& budget,
                                       std::optional<std::uint64_t> seed = std::nullopt,
                                       int top_k = 32, PolicyEvalCache* cache = nullptr) {
  validate_budget(budget);
  if (top_k <= 0) raise(Errc::InvalidConfig, "top_k must be positive");
  auto start = std::chrono::steady_clock::now();
  SearchResult res;
  if (is_proved(root)) {
    res.outcome = SearchOutcome::Proved;
    res.elapsed = detail::seconds_since(start);
    return res;
  }

  struct Entry {
    double log_prob;
    int steps;
    std::string key;
    ProofState state;
    std::vector<Tactic> proof;
  };
  struct Worse {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.log_prob != b.log_prob) return a.log_prob < b.log_prob;
      if (a.steps != b.steps) return a.steps > b.steps;
      return a.key > b.key;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, Worse> frontier;
  std::set<std::string> expanded;
  std::optional<Rng> rng;
  if (seed) rng.emplace(Rng::derive(*seed, "best_first"));

  frontier.push(Entry{0.0, 0, goals_key(root), root, {}});
  int expansions = 0;
  bool budget_hit = false;
  while (!frontier.empty()) {
    if (expansions >= budget.max_expansions ||
        detail::seconds_since(start) > budget.max_seconds) {
      budget_hit = true;
      break;
    }
    Entry cur = frontier.top();
    frontier.pop();
    if (!expanded.insert(cur.key).second) continue;
    ++expansions;
    res.nodes = expansions;

    std::shared_ptr<const TacticDistribution> dist = get_distribution(policy, cur.state, cache);
    std::vector<std::size_t> picks;
    if (!rng) {
      picks.resize(dist->tactics.size());
      for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
      std::stable_sort(picks.begin(), picks.end(),
                       [&](std::size_t a, std::size_t b) { return dist->probs[a] > dist->probs[b]; });
      if (picks.size() > static_cast<std::size_t>(top_k)) picks.resize(static_cast<std::size_t>(top_k));
    } else if (!dist->tactics.empty()) {
      std::vector<bool> taken(dist->tactics.size(), false);
      for (int draw = 0; draw < top_k; ++draw) {
        std::size_t i = sample_index(*dist, *rng);
        if (!taken[i]) {
          taken[i] = true;
          picks.push_back(i);
        }
      }
    }

    for (std::size_t i : picks) {
      if (cur.steps + 1 > budget.max_depth) break;
      ProofState next = apply_tactic(cur.state, dist->tactics[i]);
      std::vector<Tactic> proof = cur.proof;
      proof.push_back(dist->tactics[i]);
      if (is_proved(next)) {
        detail::check_proof(root, proof);
        res.outcome = SearchOutcome::Proved;
        res.proof = std::move(proof);
        res.elapsed = detail::seconds_since(start);
        return res;
      }
      std::string key = goals_key(next);
      if (expanded.count(key)) continue;
      frontier.push(Entry{cur.log_prob + log_prob(*dist, i), cur.steps + 1, std::move(key),
                          std::move(next), std::move(proof)});
    }
  }
  res.outcome = budget_hit ? SearchOutcome::BudgetHit : SearchOutcome::Exhausted;
  res.elapsed = detail::seconds_since(start);
  return res;
}

// ---------------------------------------------------------------------------
// pass@k evaluation: attempt 0 is the deterministic best-first search, further
// attempts reseed the sampled candidate selection. A theorem counts as proved
// if any attempt proves it; later attempts are skipped once one does.

struct AttemptRecord {
  std::string theorem;
  int attempt = 0;
  std::uint64_t seed = 0;
  SearchOutcome outcome = SearchOutcome::BudgetHit;
  std::vector<Tactic> proof;
  int nodes = 0;
  double elapsed = 0.0;
};

struct PassAtKResult {
  int n_theorems = 0;
  int n_proved = 0;
  double pass_rate = 0.0;
  std::vector<AttemptRecord> attempts;
};

inline PassAtKResult pass_at_k(const TacticPolicy& policy, const std::vector<ProofTree>& theorems,
                               int k, const SearchBudget& budget, std::uint64_t seed,
                               int top_k = 32) {
  if (k <= 0) raise(Errc::InvalidConfig, "k must be positive");
  if (theorems.empty()) raise(Errc::EmptyDataset, "no theorems to evaluate");
  PassAtKResult out;
  out.n_theorems = static_cast<int>(theorems.size());
  for (std::size_t ti = 0; ti < theorems.size(); ++ti) {
    PolicyEvalCache cache;
    bool proved = false;
    for (int attempt = 0; attempt < k && !proved; ++attempt) {
      AttemptRecord rec;
      rec.theorem = theorems[ti].id;
      rec.attempt = attempt;
      SearchResult r;
      if (attempt == 0) {
        r = best_first_attempt(policy, theorems[ti].root, budget, std::nullopt, top_k, &cache);
      } else {
        rec.seed = mix64(seed, ti, static_cast<std::uint64_t>(attempt));
        r = best_first_attempt(policy, theorems[ti].root, budget, rec.seed, top_k, &cache);
      }
      rec.outcome = r.outcome;
      rec.proof = std::move(r.proof);
      rec.nodes = r.nodes;
      rec.elapsed = r.elapsed;
      proved = rec.outcome == SearchOutcome::Proved;
      out.attempts.push_back(std::move(rec));
    }
    if (proved) ++out.n_proved;
  }
  out.pass_rate = static_cast<double>(out.n_proved) / static_cast<double>(out.n_theorems);
  return out;
}

// Recomputes the pass rate from a log alone: a theorem counts once, and is
// proved if any of its logged attempts proved it.
inline double pass_rate_from_log(const std::vector<AttemptRecord>& attempts) {
  if (attempts.empty()) raise(Errc::EmptyDataset, "empty attempt log");
  std::map<std::string, bool> by_theorem;
  for (const AttemptRecord& a : attempts)
    by_theorem[a.theorem] = by_theorem[a.theorem] || a.outcome == SearchOutcome::Proved;
  int proved = 0;
  for (const auto& [_, ok] : by_theorem) proved += ok ? 1 : 0;
  return static_cast<double>(proved) / static_cast<double>(by_theorem.size());
}

inline void write_attempt_log(const std::filesystem::path& path,
                              const std::vector<AttemptRecord>& attempts) {
  std::vector<Json> rows;
  rows.reserve(attempts.size());
  for (const AttemptRecord& a : attempts) {
    Json row;
    row["theorem"] = a.theorem;
    row["attempt"] = a.attempt;
    row["seed"] = a.seed;
    row["outcome"] = outcome_name(a.outcome);
    Json proof = Json::array();
    for (const Tactic& t : a.proof) proof.push_back(to_string(t));
    row["proof"] = std::move(proof);
    row["nodes"] = a.nodes;
    row["elapsed"] = a.elapsed;
    rows.push_back(std::move(row));
  }
  write_jsonl(path, rows);
}

inline std::vector<AttemptRecord> read_attempt_log(const std::filesystem::path& path) {
  std::vector<AttemptRecord> out;
  for (const Json& row : read_jsonl(path)) {
    AttemptRecord a;
    a.theorem = row.at("theorem").get<std::string>();
    a.attempt = row.at("attempt").get<int>();
    a.seed = row.at("seed").get<std::uint64_t>();
    a.outcome = outcome_from_name(row.at("outcome").get<std::string>());
    for (const Json& t : row.at("proof")) a.proof.push_back(parse_tactic(t.get<std::string>()));
    a.nodes = row.at("nodes").get<int>();
    a.elapsed = row.at("elapsed").get<double>();
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace prooftrain
