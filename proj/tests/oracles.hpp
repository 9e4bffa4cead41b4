// Independent reference implementations used only by tests. These deliberately
// avoid the library's search/scoring code paths so they can catch bugs there.
#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "prooftrain/corpus.hpp"
#include "prooftrain/kernel.hpp"
#include "prooftrain/policy.hpp"
#include "prooftrain/rng.hpp"

namespace oracles {

using namespace prooftrain;

// Breadth-first shortest proof over the full tactic graph, no policy involved.
inline std::optional<std::vector<Tactic>> bfs_shortest_proof(const ProofState& root,
                                                             int max_depth,
                                                             std::size_t max_states = 2000000) {
  if (is_proved(root)) return std::vector<Tactic>{};
  struct Item {
    ProofState state;
    std::vector<Tactic> proof;
  };
  std::deque<Item> queue{{root, {}}};
  std::set<std::string> seen{goals_key(root)};
  while (!queue.empty()) {
    Item cur = std::move(queue.front());
    queue.pop_front();
    if (static_cast<int>(cur.proof.size()) >= max_depth) continue;
    for (const Tactic& t : enumerate_tactics(cur.state)) {
      ProofState next = apply_tactic(cur.state, t);
      std::vector<Tactic> proof = cur.proof;
      proof.push_back(t);
      if (is_proved(next)) return proof;
      if (seen.size() > max_states) throw std::runtime_error("bfs oracle state cap hit");
      if (seen.insert(goals_key(next)).second) queue.push_back(Item{std::move(next), std::move(proof)});
    }
  }
  return std::nullopt;
}

// Distance of states[i] from the proved end, by literally walking the
// recorded path and counting the remaining hops.
inline int path_walk_distance(const ProofTree& tree, std::size_t index) {
  ProofState cur = tree.states.at(index);
  int hops = 0;
  std::size_t at = index;
  while (!is_proved(cur)) {
    cur = apply_tactic(cur, tree.tactics.at(at));
    ++at;
    ++hops;
  }
  return hops;
}

// Central finite differences for any loss over a dense weight vector.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& loss,
                                       std::vector<double> w, double h = 1e-6) {
  std::vector<double> g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    double keep = w[i];
    w[i] = keep + h;
    double up = loss(w);
    w[i] = keep - h;
    double down = loss(w);
    w[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += a[i] * a[i] + b[i] * b[i];
  }
  return den == 0.0 ? 0.0 : std::sqrt(num / den);
}

// Random variable assignment for soundness checks.
inline std::map<std::string, std::uint64_t> random_env(Rng& rng, int max_vars) {
  std::map<std::string, std::uint64_t> env;
  for (int i = 0; i < max_vars; ++i)
    env[std::string(1, static_cast<char>('a' + i))] = rng.below(17);
  return env;
}

inline std::map<std::string, std::uint64_t> term_env(const Term& t, Rng& rng) {
  std::map<std::string, std::uint64_t> env;
  std::function<void(const Term&)> walk = [&](const Term& u) {
    if (u.kind == TermKind::Variable && !env.count(u.var)) env[u.var] = rng.below(13);
    for (const Term& c : u.children) walk(c);
  };
  walk(t);
  return env;
}

}  // namespace oracles
