#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "prooftrain/kernel.hpp"
#include "prooftrain/rng.hpp"

namespace prooftrain {

// Sparse feature vector over a hashed index space, sorted by index with
// duplicates merged. Hash collisions are accepted (standard hashing trick);
// the sign bit keeps collisions roughly unbiased.
using FeatureVec = std::vector<std::pair<std::uint32_t, double>>;

inline double dot(const FeatureVec& f, std::span<const double> w) {
  double acc = 0.0;
  for (const auto& [i, v] : f) acc += v * w[i];
  return acc;
}

inline void axpy(double a, const FeatureVec& f, std::span<double> w) {
  for (const auto& [i, v] : f) w[i] += a * v;
}

namespace detail {

inline int size_bucket(int n) {
  if (n <= 4) return std::max(n, 0);
  if (n <= 8) return 5;
  if (n <= 16) return 6;
  return 7;
}

inline int diff_bucket(int d) { return std::clamp(d, -3, 3) + 3; }

inline std::uint64_t fnv_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline void count_kinds(const Term& t, int counts[5]) {
  ++counts[static_cast<int>(t.kind)];
  for (const Term& c : t.children) count_kinds(c, counts);
}

struct FeatureAccum {
  std::uint32_t dim;
  FeatureVec out;

  void add(std::uint64_t tag, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = mix64(mix64(tag, a, b), c);
    double sign = (h >> 63) ? -1.0 : 1.0;
    out.emplace_back(static_cast<std::uint32_t>(h % dim), sign);
  }

  FeatureVec finish() {
    std::sort(out.begin(), out.end());
    FeatureVec merged;
    for (const auto& [i, v] : out) {
      if (!merged.empty() && merged.back().first == i)
        merged.back().second += v;
      else
        merged.emplace_back(i, v);
    }
    std::erase_if(merged, [](const auto& p) { return p.second == 0.0; });
    return merged;
  }
};

}  // namespace detail

// Per-state values shared by every tactic's feature vector; compute once per
// state when scoring many tactics.
struct StateContext {
  bool proved = true;
  bool sides_equal = false;
  int lhs_size = 0, rhs_size = 0;
  int hyp_count = 0, goal_count = 0;
  TermKind lhs_kind = TermKind::Zero, rhs_kind = TermKind::Zero;
  int lhs_counts[5] = {0}, rhs_counts[5] = {0};
};

inline StateContext make_context(const ProofState& s) {
  StateContext ctx;
  ctx.goal_count = static_cast<int>(s.goals.size());
  if (s.goals.empty()) return ctx;
  const Goal& g = s.goals[0];
  ctx.proved = false;
  ctx.sides_equal = g.lhs == g.rhs;
  ctx.lhs_size = g.lhs.size();
  ctx.rhs_size = g.rhs.size();
  ctx.hyp_count = static_cast<int>(g.hyps.size());
  ctx.lhs_kind = g.lhs.kind;
  ctx.rhs_kind = g.rhs.kind;
  detail::count_kinds(g.lhs, ctx.lhs_counts);
  detail::count_kinds(g.rhs, ctx.rhs_counts);
  return ctx;
}

// Hashed features of a (state, tactic) pair. Tactic-crossed families carry
// the action signal; the trailing state-only families matter only for score
// regression (they cancel inside a softmax over tactics).
inline FeatureVec state_tactic_features(const ProofState& s, const StateContext& ctx,
                                        const Tactic& t, std::uint32_t dim) {
  detail::FeatureAccum acc{dim, {}};
  const auto k = static_cast<std::uint64_t>(t.kind);

  acc.add(1, k);
  acc.add(2, k, static_cast<std::uint64_t>(t.pos.side));
  acc.add(3, k, static_cast<std::uint64_t>(detail::size_bucket(static_cast<int>(t.pos.path.size()))));
  acc.add(5, k, ctx.sides_equal ? 1 : 0);
  acc.add(7, k, static_cast<std::uint64_t>(detail::diff_bucket(ctx.lhs_size - ctx.rhs_size)));
  acc.add(8, k, static_cast<std::uint64_t>(detail::size_bucket(ctx.lhs_size + ctx.rhs_size)));
  acc.add(9, k, static_cast<std::uint64_t>(ctx.lhs_kind), static_cast<std::uint64_t>(ctx.rhs_kind));
  acc.add(10, k, static_cast<std::uint64_t>(std::min(ctx.hyp_count, 4)));

  if (!s.goals.empty()) {
    const Goal& g = s.goals[0];
    const Term& root = t.pos.side == 0 ? g.lhs : g.rhs;
    if (const Term* sub = subterm_at(root, t.pos.path)) {
      acc.add(4, k, static_cast<std::uint64_t>(sub->kind));
      acc.add(6, k, term_hash(*sub) % 4096);
      if (!t.pos.path.empty()) {
        TermPath parent_path(t.pos.path.begin(), t.pos.path.end() - 1);
        const Term* parent = subterm_at(root, parent_path);
        acc.add(11, k, static_cast<std::uint64_t>(parent->kind));
      } else {
        acc.add(11, k, 99);
      }
    }
  }
  if (t.kind == TacticKind::ApplyHyp) acc.add(12, k, detail::fnv_string(t.hyp));

  // State-only families.
  acc.add(20, static_cast<std::uint64_t>(detail::size_bucket(ctx.lhs_size)),
          static_cast<std::uint64_t>(detail::size_bucket(ctx.rhs_size)));
  for (int kind = 0; kind < 5; ++kind) {
    acc.add(21, static_cast<std::uint64_t>(kind),
            static_cast<std::uint64_t>(detail::size_bucket(ctx.lhs_counts[kind])));
    acc.add(22, static_cast<std::uint64_t>(kind),
            static_cast<std::uint64_t>(detail::size_bucket(ctx.rhs_counts[kind])));
  }
  acc.add(23, static_cast<std::uint64_t>(std::min(ctx.hyp_count, 4)),
          static_cast<std::uint64_t>(std::min(ctx.goal_count, 4)));

  return acc.finish();
}

inline FeatureVec state_tactic_features(const ProofState& s, const Tactic& t, std::uint32_t dim) {
  return state_tactic_features(s, make_context(s), t, dim);
}

}  // namespace prooftrain
