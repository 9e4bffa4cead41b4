#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prooftrain/errors.hpp"
#include "prooftrain/rng.hpp"

namespace prooftrain {

enum class TermKind : std::uint8_t { Variable, Zero, Successor, Add, Mul };

// An expression over natural numbers: variables, 0, successor, + and *.
// Canonical text form is prefix notation: `a`, `0`, `(S t)`, `(+ t u)`, `(* t u)`.
struct Term {
  TermKind kind = TermKind::Zero;
  std::string var;              // set iff kind == Variable
  std::vector<Term> children;   // arity 0/1/2 matching kind

  static Term variable(std::string name) {
    Term t;
    t.kind = TermKind::Variable;
    t.var = std::move(name);
    return t;
  }
  static Term zero() { return Term{}; }
  static Term succ(Term a) {
    Term t;
    t.kind = TermKind::Successor;
    t.children.push_back(std::move(a));
    return t;
  }
  static Term add(Term a, Term b) {
    Term t;
    t.kind = TermKind::Add;
    t.children.push_back(std::move(a));
    t.children.push_back(std::move(b));
    return t;
  }
  static Term mul(Term a, Term b) {
    Term t;
    t.kind = TermKind::Mul;
    t.children.push_back(std::move(a));
    t.children.push_back(std::move(b));
    return t;
  }

  bool operator==(const Term& o) const {
    if (kind != o.kind) return false;
    if (kind == TermKind::Variable) return var == o.var;
    return children == o.children;
  }
  bool operator!=(const Term& o) const { return !(*this == o); }

  std::size_t size() const {
    std::size_t n = 1;
    for (const Term& c : children) n += c.size();
    return n;
  }
  std::size_t depth() const {
    std::size_t d = 0;
    for (const Term& c : children) d = std::max(d, c.depth());
    return d + 1;
  }
};

inline Term numeral(std::uint64_t n) {
  Term t = Term::zero();
  for (std::uint64_t i = 0; i < n; ++i) t = Term::succ(std::move(t));
  return t;
}

inline void print_term(const Term& t, std::string& out) {
  switch (t.kind) {
    case TermKind::Variable:
      out += t.var;
      break;
    case TermKind::Zero:
      out += '0';
      break;
    case TermKind::Successor:
      out += "(S ";
      print_term(t.children[0], out);
      out += ')';
      break;
    case TermKind::Add:
    case TermKind::Mul:
      out += t.kind == TermKind::Add ? "(+ " : "(* ";
      print_term(t.children[0], out);
      out += ' ';
      print_term(t.children[1], out);
      out += ')';
      break;
  }
}

inline std::string to_string(const Term& t) {
  std::string s;
  s.reserve(t.size() * 4);
  print_term(t, s);
  return s;
}

namespace detail {

inline bool is_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

// Recursive-descent parser over the prefix grammar. `pos` is advanced past the
// parsed term; whitespace handling is strict (single spaces as printed).
inline Term parse_term_at(std::string_view s, std::size_t& pos) {
  if (pos >= s.size()) raise(Errc::ParseError, "unexpected end of term");
  char c = s[pos];
  if (c == '0') {
    ++pos;
    return Term::zero();
  }
  if (c >= 'a' && c <= 'z') {
    std::size_t start = pos;
    while (pos < s.size() && is_name_char(s[pos])) ++pos;
    return Term::variable(std::string(s.substr(start, pos - start)));
  }
  if (c == '(') {
    ++pos;
    if (pos >= s.size()) raise(Errc::ParseError, "unterminated term");
    char op = s[pos];
    if (op != 'S' && op != '+' && op != '*') raise(Errc::ParseError, "unknown operator in term");
    ++pos;
    if (pos >= s.size() || s[pos] != ' ') raise(Errc::ParseError, "expected space after operator");
    ++pos;
    Term first = parse_term_at(s, pos);
    if (op == 'S') {
      if (pos >= s.size() || s[pos] != ')') raise(Errc::ParseError, "expected ')' after successor");
      ++pos;
      return Term::succ(std::move(first));
    }
    if (pos >= s.size() || s[pos] != ' ') raise(Errc::ParseError, "expected space between operands");
    ++pos;
    Term second = parse_term_at(s, pos);
    if (pos >= s.size() || s[pos] != ')') raise(Errc::ParseError, "expected ')'");
    ++pos;
    return op == '+' ? Term::add(std::move(first), std::move(second))
                     : Term::mul(std::move(first), std::move(second));
  }
  raise(Errc::ParseError, "unexpected character in term: " + std::string(1, c));
}

}  // namespace detail

inline Term parse_term(std::string_view s) {
  std::size_t pos = 0;
  Term t = detail::parse_term_at(s, pos);
  if (pos != s.size()) raise(Errc::ParseError, "trailing input after term");
  return t;
}

// Path from a term's root: child indices, empty path = the term itself.
using TermPath = std::vector<int>;

inline const Term* subterm_at(const Term& t, std::span<const int> path) {
  const Term* cur = &t;
  for (int step : path) {
    if (step < 0 || static_cast<std::size_t>(step) >= cur->children.size()) return nullptr;
    cur = &cur->children[step];
  }
  return cur;
}

inline std::optional<Term> replace_at(const Term& t, std::span<const int> path, Term replacement) {
  if (path.empty()) return replacement;
  int step = path[0];
  if (step < 0 || static_cast<std::size_t>(step) >= t.children.size()) return std::nullopt;
  auto inner = replace_at(t.children[step], path.subspan(1), std::move(replacement));
  if (!inner) return std::nullopt;
  Term out = t;
  out.children[static_cast<std::size_t>(step)] = std::move(*inner);
  return out;
}

// Structural hash, stable across runs and platforms.
inline std::uint64_t term_hash(const Term& t) {
  std::uint64_t h = mix64(0x7465726dULL, static_cast<std::uint64_t>(t.kind));
  if (t.kind == TermKind::Variable) {
    for (char c : t.var) h = mix64(h, static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
  }
  for (const Term& c : t.children) h = mix64(h, term_hash(c));
  return h;
}

// ---------------------------------------------------------------------------
// Polynomial normal form. Every term over (N, +, *, 0, S) denotes a polynomial
// with natural-number coefficients; the normal form re-encodes that polynomial
// as a term: monomials sorted by (total degree desc, then variable sequence),
// summed right-associatively, with numerals as S-towers.

using Monomial = std::vector<std::pair<std::string, std::uint32_t>>;  // sorted by var

struct MonomialOrder {
  bool operator()(const Monomial& a, const Monomial& b) const {
    std::uint64_t da = 0, db = 0;
    for (const auto& [v, e] : a) da += e;
    for (const auto& [v, e] : b) db += e;
    if (da != db) return da > db;
    return a < b;
  }
};

using Polynomial = std::map<Monomial, std::uint64_t, MonomialOrder>;

namespace detail {

inline void poly_add(Polynomial& into, const Polynomial& p) {
  for (const auto& [m, c] : p) {
    auto& slot = into[m];
    if (slot > UINT64_MAX - c) throw std::overflow_error("polynomial coefficient overflow");
    slot += c;
  }
}

inline Monomial monomial_mul(const Monomial& a, const Monomial& b) {
  Monomial out;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      out.push_back(b[j++]);
    } else {
      out.emplace_back(a[i].first, a[i].second + b[j].second);
      ++i;
      ++j;
    }
  }
  return out;
}

inline Polynomial poly_mul(const Polynomial& a, const Polynomial& b) {
  Polynomial out;
  for (const auto& [ma, ca] : a) {
    for (const auto& [mb, cb] : b) {
      if (cb != 0 && ca > UINT64_MAX / cb) throw std::overflow_error("polynomial coefficient overflow");
      std::uint64_t c = ca * cb;
      auto& slot = out[monomial_mul(ma, mb)];
      if (slot > UINT64_MAX - c) throw std::overflow_error("polynomial coefficient overflow");
      slot += c;
    }
  }
  return out;
}

}  // namespace detail

inline Polynomial term_polynomial(const Term& t) {
  switch (t.kind) {
    case TermKind::Variable:
      return Polynomial{{Monomial{{t.var, 1}}, 1}};
    case TermKind::Zero:
      return Polynomial{};
    case TermKind::Successor: {
      Polynomial p = term_polynomial(t.children[0]);
      detail::poly_add(p, Polynomial{{Monomial{}, 1}});
      return p;
    }
    case TermKind::Add: {
      Polynomial p = term_polynomial(t.children[0]);
      detail::poly_add(p, term_polynomial(t.children[1]));
      return p;
    }
    case TermKind::Mul:
      return detail::poly_mul(term_polynomial(t.children[0]), term_polynomial(t.children[1]));
  }
  return Polynomial{};
}

namespace detail {

inline Term encode_monomial(const Monomial& m, std::uint64_t coeff) {
  std::vector<Term> factors;
  for (const auto& [v, e] : m) {
    for (std::uint32_t i = 0; i < e; ++i) factors.push_back(Term::variable(v));
  }
  if (factors.empty()) return numeral(coeff);
  Term prod = factors.back();
  for (std::size_t i = factors.size() - 1; i-- > 0;) prod = Term::mul(factors[i], std::move(prod));
  if (coeff == 1) return prod;
  return Term::mul(numeral(coeff), std::move(prod));
}

}  // namespace detail

inline Term polynomial_term(const Polynomial& p) {
  std::vector<Term> parts;
  for (const auto& [m, c] : p) {
    if (c != 0) parts.push_back(detail::encode_monomial(m, c));
  }
  if (parts.empty()) return Term::zero();
  Term sum = parts.back();
  for (std::size_t i = parts.size() - 1; i-- > 0;) sum = Term::add(parts[i], std::move(sum));
  return sum;
}

inline Term normalize_term(const Term& t) { return polynomial_term(term_polynomial(t)); }

// Evaluate under a variable assignment, modulo 2^64. Test oracle for rewrite
// soundness; also useful when debugging the kernel.
inline std::uint64_t eval_term(const Term& t, const std::map<std::string, std::uint64_t>& env) {
  switch (t.kind) {
    case TermKind::Variable: {
      auto it = env.find(t.var);
      return it == env.end() ? 0 : it->second;
    }
    case TermKind::Zero:
      return 0;
    case TermKind::Successor:
      return eval_term(t.children[0], env) + 1;
    case TermKind::Add:
      return eval_term(t.children[0], env) + eval_term(t.children[1], env);
    case TermKind::Mul:
      return eval_term(t.children[0], env) * eval_term(t.children[1], env);
  }
  return 0;
}

}  // namespace prooftrain
