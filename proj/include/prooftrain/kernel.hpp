#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prooftrain/errors.hpp"
#include "prooftrain/term.hpp"

namespace prooftrain {

// A named equation available to apply_hyp within one goal.
struct Hypothesis {
  std::string name;
  Term lhs, rhs;

  bool operator==(const Hypothesis& o) const = default;
};

// An equation to prove, with its local premises.
struct Goal {
  Term lhs, rhs;
  std::vector<Hypothesis> hyps;

  bool operator==(const Goal& o) const = default;
};

// Ordered open goals plus the number of tactics applied so far.
// An empty goal list means the proof is complete.
struct ProofState {
  std::vector<Goal> goals;
  int steps = 0;

  bool operator==(const ProofState& o) const = default;
};

inline bool is_proved(const ProofState& s) { return s.goals.empty(); }

enum class TacticKind : std::uint8_t {
  Refl,
  RwCommAdd,
  RwAssocAdd,
  RwZeroAdd,
  RwAddZero,
  RwCommMul,
  RwOneMul,
  RwSuccAdd,
  ApplyHyp,
  SimpArith,
};

inline constexpr int kTacticKindCount = 10;

inline const char* tactic_kind_name(TacticKind k) {
  switch (k) {
    case TacticKind::Refl: return "refl";
    case TacticKind::RwCommAdd: return "rw_comm_add";
    case TacticKind::RwAssocAdd: return "rw_assoc_add";
    case TacticKind::RwZeroAdd: return "rw_zero_add";
    case TacticKind::RwAddZero: return "rw_add_zero";
    case TacticKind::RwCommMul: return "rw_comm_mul";
    case TacticKind::RwOneMul: return "rw_one_mul";
    case TacticKind::RwSuccAdd: return "rw_succ_add";
    case TacticKind::ApplyHyp: return "apply_hyp";
    case TacticKind::SimpArith: return "simp_arith";
  }
  return "?";
}

// Where a tactic acts in the first goal: which side of the equation, and the
// child path within that side's term. Root = empty path.
struct TacticPos {
  int side = 0;  // 0 = lhs, 1 = rhs
  TermPath path;

  bool operator==(const TacticPos& o) const = default;
};

struct Tactic {
  TacticKind kind = TacticKind::Refl;
  TacticPos pos;
  std::string hyp;  // set iff kind == ApplyHyp

  bool operator==(const Tactic& o) const = default;
};

// ---------------------------------------------------------------------------
// Canonical text serialization. Stable, injective, documented in the README.
//
//   term    a | 0 | (S t) | (+ t u) | (* t u)
//   tactic  refl | <kind> <side>[ <path>] | apply_hyp <name> <side>[ <path>]
//   goal    [<name> : <eq>; ]... |- <eq>         where eq = <term> = <term>
//   state   <steps>: proved | <steps>: <goal>[ ;; <goal>]...

inline std::string to_string(const TacticPos& pos) {
  std::string out = pos.side == 0 ? "lhs" : "rhs";
  for (std::size_t i = 0; i < pos.path.size(); ++i) {
    out += i == 0 ? " " : ".";
    out += std::to_string(pos.path[i]);
  }
  return out;
}

inline std::string to_string(const Tactic& t) {
  if (t.kind == TacticKind::Refl) return "refl";
  std::string out = tactic_kind_name(t.kind);
  if (t.kind == TacticKind::ApplyHyp) {
    out += ' ';
    out += t.hyp;
  }
  out += ' ';
  out += to_string(t.pos);
  return out;
}

inline std::string to_string(const Goal& g) {
  std::string out;
  for (const Hypothesis& h : g.hyps) {
    out += h.name;
    out += " : ";
    print_term(h.lhs, out);
    out += " = ";
    print_term(h.rhs, out);
    out += "; ";
  }
  out += "|- ";
  print_term(g.lhs, out);
  out += " = ";
  print_term(g.rhs, out);
  return out;
}

inline std::string to_string(const ProofState& s) {
  std::string out = std::to_string(s.steps);
  out += ": ";
  if (s.goals.empty()) {
    out += "proved";
    return out;
  }
  for (std::size_t i = 0; i < s.goals.size(); ++i) {
    if (i > 0) out += " ;; ";
    out += to_string(s.goals[i]);
  }
  return out;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, std::string_view sep) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    std::size_t at = s.find(sep, pos);
    if (at == std::string_view::npos) {
      parts.push_back(s.substr(pos));
      return parts;
    }
    parts.push_back(s.substr(pos, at - pos));
    pos = at + sep.size();
  }
}

}  // namespace detail

inline TacticPos parse_tactic_pos(std::string_view side, std::string_view path) {
  TacticPos pos;
  if (side == "lhs") {
    pos.side = 0;
  } else if (side == "rhs") {
    pos.side = 1;
  } else {
    raise(Errc::ParseError, "bad tactic side: " + std::string(side));
  }
  if (!path.empty()) {
    for (std::string_view part : detail::split(path, ".")) {
      if (part.empty()) raise(Errc::ParseError, "bad tactic path");
      int v = 0;
      for (char c : part) {
        if (c < '0' || c > '9') raise(Errc::ParseError, "bad tactic path digit");
        v = v * 10 + (c - '0');
      }
      pos.path.push_back(v);
    }
  }
  return pos;
}

inline Tactic parse_tactic(std::string_view s) {
  std::vector<std::string_view> parts = detail::split(s, " ");
  if (parts.empty()) raise(Errc::ParseError, "empty tactic");
  Tactic t;
  std::string_view kind = parts[0];
  if (kind == "refl") {
    if (parts.size() != 1) raise(Errc::ParseError, "refl takes no arguments");
    t.kind = TacticKind::Refl;
    return t;
  }
  for (int k = 0; k < kTacticKindCount; ++k) {
    if (kind == tactic_kind_name(static_cast<TacticKind>(k))) {
      t.kind = static_cast<TacticKind>(k);
      std::size_t arg = 1;
      if (t.kind == TacticKind::ApplyHyp) {
        if (parts.size() < 3) raise(Errc::ParseError, "apply_hyp needs a hypothesis and position");
        t.hyp = std::string(parts[arg++]);
      }
      if (arg >= parts.size()) raise(Errc::ParseError, "tactic missing position");
      std::string_view side = parts[arg++];
      std::string_view path = arg < parts.size() ? parts[arg++] : std::string_view{};
      if (arg != parts.size()) raise(Errc::ParseError, "trailing tactic arguments");
      t.pos = parse_tactic_pos(side, path);
      return t;
    }
  }
  raise(Errc::ParseError, "unknown tactic kind: " + std::string(kind));
}

inline Goal parse_goal(std::string_view s) {
  Goal g;
  std::size_t turnstile = s.find("|- ");
  if (turnstile == std::string_view::npos) raise(Errc::ParseError, "goal missing '|-'");
  std::string_view hyp_text = s.substr(0, turnstile);
  std::string_view eq_text = s.substr(turnstile + 3);
  if (!hyp_text.empty()) {
    if (!hyp_text.ends_with("; ")) raise(Errc::ParseError, "malformed hypothesis list");
    hyp_text.remove_suffix(2);
    for (std::string_view part : detail::split(hyp_text, "; ")) {
      std::size_t colon = part.find(" : ");
      if (colon == std::string_view::npos) raise(Errc::ParseError, "hypothesis missing ':'");
      Hypothesis h;
      h.name = std::string(part.substr(0, colon));
      std::string_view eq = part.substr(colon + 3);
      std::size_t eq_at = eq.find(" = ");
      if (eq_at == std::string_view::npos) raise(Errc::ParseError, "hypothesis missing '='");
      h.lhs = parse_term(eq.substr(0, eq_at));
      h.rhs = parse_term(eq.substr(eq_at + 3));
      g.hyps.push_back(std::move(h));
    }
  }
  // The goal equation: terms contain no spaces around '=' except the separator.
  std::size_t eq_at = eq_text.find(" = ");
  // '=' never occurs inside a serialized term, so the first match is it.
  if (eq_at == std::string_view::npos) raise(Errc::ParseError, "goal missing '='");
  g.lhs = parse_term(eq_text.substr(0, eq_at));
  g.rhs = parse_term(eq_text.substr(eq_at + 3));
  return g;
}

inline ProofState parse_state(std::string_view s) {
  std::size_t colon = s.find(": ");
  if (colon == std::string_view::npos) raise(Errc::ParseError, "state missing step prefix");
  ProofState st;
  int steps = 0;
  std::string_view num = s.substr(0, colon);
  if (num.empty()) raise(Errc::ParseError, "state missing step count");
  for (char c : num) {
    if (c < '0' || c > '9') raise(Errc::ParseError, "bad step count");
    steps = steps * 10 + (c - '0');
  }
  st.steps = steps;
  std::string_view rest = s.substr(colon + 2);
  if (rest == "proved") return st;
  for (std::string_view part : detail::split(rest, " ;; ")) st.goals.push_back(parse_goal(part));
  return st;
}

// ---------------------------------------------------------------------------
// Tactic semantics. Rewrites act left-to-right at an explicit position in the
// first goal; refl closes the first goal when both sides are structurally
// equal; simp_arith replaces the addressed subterm by its polynomial normal
// form. Only the first goal is ever attacked.

namespace detail {

inline std::optional<Term> rewrite_once(TacticKind kind, const Term& sub) {
  switch (kind) {
    case TacticKind::RwCommAdd:
      if (sub.kind == TermKind::Add) return Term::add(sub.children[1], sub.children[0]);
      return std::nullopt;
    case TacticKind::RwAssocAdd:
      if (sub.kind == TermKind::Add && sub.children[0].kind == TermKind::Add) {
        return Term::add(sub.children[0].children[0],
                         Term::add(sub.children[0].children[1], sub.children[1]));
      }
      return std::nullopt;
    case TacticKind::RwZeroAdd:
      if (sub.kind == TermKind::Add && sub.children[0].kind == TermKind::Zero)
        return sub.children[1];
      return std::nullopt;
    case TacticKind::RwAddZero:
      if (sub.kind == TermKind::Add && sub.children[1].kind == TermKind::Zero)
        return sub.children[0];
      return std::nullopt;
    case TacticKind::RwCommMul:
      if (sub.kind == TermKind::Mul) return Term::mul(sub.children[1], sub.children[0]);
      return std::nullopt;
    case TacticKind::RwOneMul:
      if (sub.kind == TermKind::Mul && sub.children[0].kind == TermKind::Successor &&
          sub.children[0].children[0].kind == TermKind::Zero) {
        return sub.children[1];
      }
      return std::nullopt;
    case TacticKind::RwSuccAdd:
      if (sub.kind == TermKind::Add && sub.children[0].kind == TermKind::Successor) {
        return Term::succ(Term::add(sub.children[0].children[0], sub.children[1]));
      }
      return std::nullopt;
    default:
      return std::nullopt;
  }
}

struct ApplyOutcome {
  std::optional<ProofState> state;
  Errc error = Errc::InapplicableTactic;
  std::string detail;
};

inline ApplyOutcome apply_impl(const ProofState& s, const Tactic& t) {
  ApplyOutcome out;
  if (s.goals.empty()) {
    out.error = Errc::NoOpenGoals;
    out.detail = "state is already proved";
    return out;
  }
  const Goal& goal = s.goals[0];

  if (t.kind == TacticKind::Refl) {
    if (t.pos.side != 0 || !t.pos.path.empty()) {
      out.error = Errc::InvalidPosition;
      out.detail = "refl acts at the goal root";
      return out;
    }
    if (goal.lhs != goal.rhs) {
      out.detail = "sides differ";
      return out;
    }
    ProofState next;
    next.goals.assign(s.goals.begin() + 1, s.goals.end());
    next.steps = s.steps + 1;
    out.state = std::move(next);
    return out;
  }

  if (t.pos.side != 0 && t.pos.side != 1) {
    out.error = Errc::InvalidPosition;
    out.detail = "side must be lhs or rhs";
    return out;
  }
  const Term& side = t.pos.side == 0 ? goal.lhs : goal.rhs;
  const Term* sub = subterm_at(side, t.pos.path);
  if (sub == nullptr) {
    out.error = Errc::InvalidPosition;
    out.detail = "path leaves the term";
    return out;
  }

  std::optional<Term> replacement;
  if (t.kind == TacticKind::ApplyHyp) {
    const Hypothesis* hyp = nullptr;
    for (const Hypothesis& h : goal.hyps) {
      if (h.name == t.hyp) {
        hyp = &h;
        break;
      }
    }
    if (hyp == nullptr) {
      out.detail = "no hypothesis named " + t.hyp;
      return out;
    }
    if (*sub != hyp->lhs) {
      out.detail = "hypothesis lhs does not match";
      return out;
    }
    replacement = hyp->rhs;
  } else if (t.kind == TacticKind::SimpArith) {
    Term normal = normalize_term(*sub);
    if (normal == *sub) {
      out.detail = "already in normal form";
      return out;
    }
    replacement = std::move(normal);
  } else {
    replacement = rewrite_once(t.kind, *sub);
    if (!replacement) {
      out.detail = "pattern does not match";
      return out;
    }
  }

  Goal next_goal = goal;
  Term rewritten = *replace_at(side, t.pos.path, std::move(*replacement));
  (t.pos.side == 0 ? next_goal.lhs : next_goal.rhs) = std::move(rewritten);
  ProofState next;
  next.goals.reserve(s.goals.size());
  next.goals.push_back(std::move(next_goal));
  next.goals.insert(next.goals.end(), s.goals.begin() + 1, s.goals.end());
  next.steps = s.steps + 1;
  out.state = std::move(next);
  return out;
}

template <typename Fn>
void each_position(const Term& t, TermPath& path, Fn&& fn) {
  fn(path, t);
  for (int i = 0; i < static_cast<int>(t.children.size()); ++i) {
    path.push_back(i);
    each_position(t.children[i], path, fn);
    path.pop_back();
  }
}

}  // namespace detail

inline std::optional<ProofState> try_apply(const ProofState& s, const Tactic& t) {
  return detail::apply_impl(s, t).state;
}

inline ProofState apply_tactic(const ProofState& s, const Tactic& t) {
  detail::ApplyOutcome out = detail::apply_impl(s, t);
  if (!out.state) raise(out.error, out.detail + " (tactic: " + to_string(t) + ")");
  return std::move(*out.state);
}

// Every syntactically applicable tactic for the first goal, in a fixed order:
// tactic kinds in declaration order, positions in pre-order (lhs before rhs),
// hypotheses in goal order. Empty iff the state is proved or stuck.
inline std::vector<Tactic> enumerate_tactics(const ProofState& s) {
  std::vector<Tactic> tactics;
  if (s.goals.empty()) return tactics;
  const Goal& goal = s.goals[0];

  struct Node {
    TacticPos pos;
    const Term* term;
  };
  std::vector<Node> nodes;
  for (int side = 0; side < 2; ++side) {
    const Term& root = side == 0 ? goal.lhs : goal.rhs;
    TermPath path;
    detail::each_position(root, path, [&](const TermPath& p, const Term& sub) {
      nodes.push_back(Node{TacticPos{side, p}, &sub});
    });
  }

  if (goal.lhs == goal.rhs) tactics.push_back(Tactic{TacticKind::Refl, TacticPos{}, {}});

  for (TacticKind kind : {TacticKind::RwCommAdd, TacticKind::RwAssocAdd, TacticKind::RwZeroAdd,
                          TacticKind::RwAddZero, TacticKind::RwCommMul, TacticKind::RwOneMul,
                          TacticKind::RwSuccAdd}) {
    for (const Node& n : nodes) {
      if (detail::rewrite_once(kind, *n.term)) tactics.push_back(Tactic{kind, n.pos, {}});
    }
  }

  for (const Hypothesis& h : goal.hyps) {
    for (const Node& n : nodes) {
      if (*n.term == h.lhs) tactics.push_back(Tactic{TacticKind::ApplyHyp, n.pos, h.name});
    }
  }

  for (const Node& n : nodes) {
    if (normalize_term(*n.term) != *n.term)
      tactics.push_back(Tactic{TacticKind::SimpArith, n.pos, {}});
  }

  return tactics;
}

// Total order used for deterministic tie-breaking; the serialized form is
// injective, so string order works.
inline bool tactic_less(const Tactic& a, const Tactic& b) { return to_string(a) < to_string(b); }

}  // namespace prooftrain
