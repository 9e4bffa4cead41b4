#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "prooftrain/errors.hpp"
#include "prooftrain/io.hpp"
#include "prooftrain/kernel.hpp"
#include "prooftrain/rng.hpp"

namespace prooftrain {

struct GenConfig {
  int n_theorems = 100;
  int max_depth = 7;       // proof length sampled uniformly from {1..max_depth}
  int term_depth = 4;      // depth bound for sampled seed terms
  int max_vars = 3;        // variable pool a, b, c, ...
  double hyp_prob = 0.25;  // chance a theorem carries local hypotheses
  int max_hyps = 2;
  int max_term_size = 48;  // inflationary moves are gated on this
  int max_tries = 200;     // total walk budget = max_tries * n_theorems
};

// One generated theorem with its recorded proof. states[0] is the root,
// states[i+1] = apply(states[i], tactics[i]), and the last state is proved.
struct ProofTree {
  std::string id;
  ProofState root;
  std::vector<Tactic> tactics;
  std::vector<ProofState> states;
};

// Training example: a state, the recorded tactic from it, and how many
// recorded steps remain until the proof closes.
struct Triplet {
  ProofState state;
  Tactic tactic;
  int difficulty = 0;
};

inline std::string var_name(std::uint64_t i) { return std::string(1, static_cast<char>('a' + i % 26)); }

inline Term random_term(Rng& rng, int depth, int max_vars) {
  double u = rng.uniform();
  if (depth <= 0) {
    if (u < 0.8) return Term::variable(var_name(rng.below(static_cast<std::uint64_t>(max_vars))));
    return Term::zero();
  }
  if (u < 0.22) return Term::variable(var_name(rng.below(static_cast<std::uint64_t>(max_vars))));
  if (u < 0.30) return Term::zero();
  if (u < 0.45) return Term::succ(random_term(rng, depth - 1, max_vars));
  if (u < 0.75) {
    Term l = random_term(rng, depth - 1, max_vars);
    Term r = random_term(rng, depth - 1, max_vars);
    return Term::add(std::move(l), std::move(r));
  }
  Term l = random_term(rng, depth - 1, max_vars);
  Term r = random_term(rng, depth - 1, max_vars);
  return Term::mul(std::move(l), std::move(r));
}

namespace detail {

// An un-rewrite: replacing the subterm at pos by `replacement` yields a goal
// from which the forward tactic {kind, pos, hyp} recovers the original.
struct InverseMove {
  TacticKind kind;
  TacticPos pos;
  std::string hyp;
  Term replacement;
};

inline std::vector<InverseMove> inverse_moves(const Goal& goal, int max_term_size) {
  std::vector<InverseMove> moves;
  for (int side = 0; side < 2; ++side) {
    const Term& root = side == 0 ? goal.lhs : goal.rhs;
    int root_size = root.size();
    TermPath path;
    each_position(root, path, [&](const TermPath& p, const Term& sub) {
      auto push = [&](TacticKind kind, Term repl, const std::string& hyp = {}) {
        int next_size = root_size - sub.size() + repl.size();
        if (next_size > max_term_size) return;
        moves.push_back(InverseMove{kind, TacticPos{side, p}, hyp, std::move(repl)});
      };
      if (sub.kind == TermKind::Add) {
        push(TacticKind::RwCommAdd, Term::add(sub.children[1], sub.children[0]));
        if (sub.children[1].kind == TermKind::Add) {
          push(TacticKind::RwAssocAdd,
               Term::add(Term::add(sub.children[0], sub.children[1].children[0]),
                         sub.children[1].children[1]));
        }
      }
      if (sub.kind == TermKind::Mul)
        push(TacticKind::RwCommMul, Term::mul(sub.children[1], sub.children[0]));
      if (sub.kind == TermKind::Successor && sub.children[0].kind == TermKind::Add) {
        push(TacticKind::RwSuccAdd, Term::add(Term::succ(sub.children[0].children[0]),
                                              sub.children[0].children[1]));
      }
      push(TacticKind::RwZeroAdd, Term::add(Term::zero(), sub));
      push(TacticKind::RwAddZero, Term::add(sub, Term::zero()));
      push(TacticKind::RwOneMul, Term::mul(Term::succ(Term::zero()), sub));
      for (const Hypothesis& h : goal.hyps) {
        if (sub == h.rhs && h.lhs != h.rhs) push(TacticKind::ApplyHyp, h.lhs, h.name);
      }
    });
  }
  return moves;
}

inline Goal apply_inverse(const Goal& goal, const InverseMove& m) {
  Goal next = goal;
  const Term& root = m.pos.side == 0 ? goal.lhs : goal.rhs;
  Term rewritten = *replace_at(root, m.pos.path, m.replacement);
  (m.pos.side == 0 ? next.lhs : next.rhs) = std::move(rewritten);
  return next;
}

inline std::vector<const Term*> all_subterms(const Term& t) {
  std::vector<const Term*> out;
  TermPath path;
  each_position(t, path, [&](const TermPath&, const Term& sub) { out.push_back(&sub); });
  return out;
}

}  // namespace detail

// Raises ReplayMismatch if the recorded tactics do not reproduce the recorded
// states from the root, or the proof does not close.
inline void replay_tree(const ProofTree& tree) {
  if (tree.states.size() != tree.tactics.size() + 1)
    raise(Errc::ReplayMismatch, tree.id + ": state/tactic count mismatch");
  if (!(tree.states.front() == tree.root))
    raise(Errc::ReplayMismatch, tree.id + ": first state is not the root");
  ProofState cur = tree.root;
  for (std::size_t i = 0; i < tree.tactics.size(); ++i) {
    std::optional<ProofState> next = try_apply(cur, tree.tactics[i]);
    if (!next) raise(Errc::ReplayMismatch, tree.id + ": tactic " + std::to_string(i) + " failed");
    cur = std::move(*next);
    if (!(cur == tree.states[i + 1]))
      raise(Errc::ReplayMismatch, tree.id + ": state " + std::to_string(i + 1) + " diverges");
  }
  if (!is_proved(cur)) raise(Errc::ReplayMismatch, tree.id + ": proof does not close");
}

// Generates theorems by inverse-rewriting away from trivially true equations,
// then validates each recorded proof by forward replay. Roots are deduplicated
// on their serialized goal. Raises GenerationExhausted when the walk budget
// runs out before n_theorems distinct theorems are found.
inline std::vector<ProofTree> generate_corpus(const GenConfig& cfg, std::uint64_t seed) {
  if (cfg.n_theorems <= 0 || cfg.max_depth <= 0 || cfg.max_vars <= 0)
    raise(Errc::InvalidConfig, "n_theorems, max_depth and max_vars must be positive");
  std::vector<ProofTree> out;
  std::set<std::string> seen_roots;
  Rng rng(Rng::derive(seed, "corpus"));
  long long attempts = 0;
  const long long budget =
      static_cast<long long>(cfg.max_tries) * static_cast<long long>(cfg.n_theorems);

  while (static_cast<int>(out.size()) < cfg.n_theorems) {
    if (attempts >= budget) {
      raise(Errc::GenerationExhausted,
            "gave up after " + std::to_string(attempts) + " walks with " +
                std::to_string(out.size()) + "/" + std::to_string(cfg.n_theorems) + " theorems");
    }
    ++attempts;

    Term t = random_term(rng, cfg.term_depth, cfg.max_vars);
    Goal g;
    g.lhs = t;
    g.rhs = t;
    if (cfg.max_hyps > 0 && rng.uniform() < cfg.hyp_prob) {
      int n_hyps = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_hyps)));
      std::vector<const Term*> subs = detail::all_subterms(t);
      for (int i = 0; i < n_hyps; ++i) {
        Term rhs = *subs[rng.below(subs.size())];
        Term lhs = random_term(rng, 2, cfg.max_vars);
        if (lhs == rhs) continue;
        g.hyps.push_back(Hypothesis{"h" + std::to_string(g.hyps.size()), std::move(lhs),
                                    std::move(rhs)});
      }
    }

    int proof_len = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_depth)));
    std::vector<Goal> walk{g};
    std::vector<Tactic> rev_tactics;
    std::set<std::string> on_path{to_string(g)};
    bool ok = true;
    for (int k = 0; k + 1 < proof_len; ++k) {
      std::vector<detail::InverseMove> moves = detail::inverse_moves(walk.back(), cfg.max_term_size);
      bool stepped = false;
      for (int pick = 0; pick < 4 && !moves.empty(); ++pick) {
        std::size_t mi = rng.below(moves.size());
        Goal ng = detail::apply_inverse(walk.back(), moves[mi]);
        std::string key = to_string(ng);
        if (on_path.count(key)) {
          moves.erase(moves.begin() + static_cast<std::ptrdiff_t>(mi));
          continue;
        }
        rev_tactics.push_back(Tactic{moves[mi].kind, moves[mi].pos, moves[mi].hyp});
        walk.push_back(std::move(ng));
        on_path.insert(std::move(key));
        stepped = true;
        break;
      }
      if (!stepped) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;

    std::string root_key = to_string(walk.back());
    if (seen_roots.count(root_key)) continue;

    ProofTree tree;
    tree.root = ProofState{{walk.back()}, 0};
    tree.tactics.assign(rev_tactics.rbegin(), rev_tactics.rend());
    tree.tactics.push_back(Tactic{TacticKind::Refl, TacticPos{}, {}});
    tree.states.push_back(tree.root);
    for (const Tactic& tac : tree.tactics)
      tree.states.push_back(apply_tactic(tree.states.back(), tac));
    replay_tree(tree);

    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "thm_%06zu", out.size());
    tree.id = idbuf;
    seen_roots.insert(std::move(root_key));
    out.push_back(std::move(tree));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Difficulty labels and curriculum buckets.

// Steps remaining on the recorded path from states[i] to the proved state.
inline int path_distance(const ProofTree& tree, std::size_t state_index) {
  return static_cast<int>(tree.tactics.size() - state_index);
}

inline std::vector<Triplet> tree_triplets(const ProofTree& tree) {
  std::vector<Triplet> out;
  out.reserve(tree.tactics.size());
  for (std::size_t i = 0; i < tree.tactics.size(); ++i)
    out.push_back(Triplet{tree.states[i], tree.tactics[i], path_distance(tree, i)});
  return out;
}

inline std::vector<Triplet> corpus_triplets(const std::vector<ProofTree>& trees) {
  std::vector<Triplet> out;
  for (const ProofTree& tree : trees) {
    std::vector<Triplet> part = tree_triplets(tree);
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

// Buckets keyed by difficulty, ascending. Together they partition the input.
struct Curriculum {
  std::map<int, std::vector<Triplet>> buckets;
};

inline Curriculum build_curriculum(std::vector<Triplet> triplets) {
  Curriculum c;
  for (Triplet& t : triplets) c.buckets[t.difficulty].push_back(std::move(t));
  return c;
}

inline const std::vector<Triplet>& curriculum_bucket(const Curriculum& c, int n) {
  auto it = c.buckets.find(n);
  if (it == c.buckets.end() || it->second.empty())
    raise(Errc::EmptyBucket, "no bucket with difficulty " + std::to_string(n));
  return it->second;
}

// ---------------------------------------------------------------------------
// Held-out split by whole theorem, exact count, deterministic in the seed.

struct CorpusSplit {
  std::vector<ProofTree> train, eval;
};

inline CorpusSplit split_corpus(const std::vector<ProofTree>& trees, double held_out_frac,
                                std::uint64_t seed) {
  if (held_out_frac < 0.0 || held_out_frac >= 1.0)
    raise(Errc::InvalidConfig, "held_out_frac must be in [0, 1)");
  std::size_t n = trees.size();
  std::size_t n_eval = static_cast<std::size_t>(held_out_frac * static_cast<double>(n));
  Rng rng(Rng::derive(seed, "split"));
  std::vector<std::size_t> picked = rng.sample_without_replacement(n, n_eval);
  std::vector<bool> is_eval(n, false);
  for (std::size_t i : picked) is_eval[i] = true;
  CorpusSplit split;
  for (std::size_t i = 0; i < n; ++i) (is_eval[i] ? split.eval : split.train).push_back(trees[i]);
  return split;
}

// ---------------------------------------------------------------------------
// JSONL persistence.

inline Json tree_to_json(const ProofTree& tree) {
  Json row;
  row["id"] = tree.id;
  row["root"] = to_string(tree.root);
  Json tactics = Json::array();
  for (const Tactic& t : tree.tactics) tactics.push_back(to_string(t));
  row["tactics"] = std::move(tactics);
  Json states = Json::array();
  for (const ProofState& s : tree.states) states.push_back(to_string(s));
  row["states"] = std::move(states);
  return row;
}

inline ProofTree tree_from_json(const Json& row) {
  ProofTree tree;
  tree.id = row.at("id").get<std::string>();
  tree.root = parse_state(row.at("root").get<std::string>());
  for (const Json& t : row.at("tactics")) tree.tactics.push_back(parse_tactic(t.get<std::string>()));
  for (const Json& s : row.at("states")) tree.states.push_back(parse_state(s.get<std::string>()));
  return tree;
}

inline void write_corpus(const std::filesystem::path& path, const std::vector<ProofTree>& trees) {
  std::vector<Json> rows;
  rows.reserve(trees.size());
  for (const ProofTree& tree : trees) rows.push_back(tree_to_json(tree));
  write_jsonl(path, rows);
}

inline std::vector<ProofTree> read_corpus(const std::filesystem::path& path) {
  std::vector<ProofTree> trees;
  for (const Json& row : read_jsonl(path)) trees.push_back(tree_from_json(row));
  return trees;
}

inline void write_triplets(const std::filesystem::path& path, const std::vector<Triplet>& triplets) {
  std::vector<Json> rows;
  rows.reserve(triplets.size());
  for (const Triplet& t : triplets) {
    Json row;
    row["state"] = to_string(t.state);
    row["tactic"] = to_string(t.tactic);
    row["difficulty"] = t.difficulty;
    rows.push_back(std::move(row));
  }
  write_jsonl(path, rows);
}

inline std::vector<Triplet> read_triplets(const std::filesystem::path& path) {
  std::vector<Triplet> out;
  for (const Json& row : read_jsonl(path)) {
    Triplet t;
    t.state = parse_state(row.at("state").get<std::string>());
    t.tactic = parse_tactic(row.at("tactic").get<std::string>());
    t.difficulty = row.at("difficulty").get<int>();
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace prooftrain
