// mtlplan/formula.hpp -- metric temporal logic syntax tree and transforms
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mtlplan/detail/numfmt.hpp"

namespace mtlplan {

class FormulaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Time window attached to temporal operators. `hi` may be infinite.
// Units are whatever the surrounding pipeline says: seconds as parsed,
// discrete steps after `to_steps`.
struct Interval {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();

  Interval() = default;
  Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!(lo >= 0.0)) throw FormulaError("interval lower bound must be >= 0");
    if (!(hi >= lo)) throw FormulaError("interval requires lo <= hi");
  }

  static Interval unbounded() { return Interval(0.0, std::numeric_limits<double>::infinity()); }
  bool is_unbounded() const { return std::isinf(hi); }
  bool is_default() const { return lo == 0.0 && is_unbounded(); }

  // Valid only once bounds are integral step counts.
  int lo_steps() const { return static_cast<int>(lo); }
  int hi_steps() const {
    if (is_unbounded()) throw FormulaError("interval upper bound is unbounded; truncate first");
    return static_cast<int>(hi);
  }

  bool operator==(const Interval& o) const { return lo == o.lo && hi == o.hi; }
};

enum class Kind {
  True,
  False,
  Atom,
  Not,
  And,
  Or,
  Next,
  Eventually,
  Always,
  Until,
  Release,
};

inline bool is_temporal(Kind k) {
  return k == Kind::Next || k == Kind::Eventually || k == Kind::Always ||
         k == Kind::Until || k == Kind::Release;
}

// Immutable formula value. Copies share nodes, so passing by value is cheap.
class Formula {
 public:
  struct Node {
    Kind kind;
    std::string name;             // Atom only
    Interval window;              // Eventually/Always/Until/Release only
    std::vector<Formula> kids;
  };

  Formula() : Formula(constant(true)) {}

  static Formula constant(bool v) { return make({v ? Kind::True : Kind::False, {}, {}, {}}); }
  static Formula atom(std::string name) {
    if (name.empty()) throw FormulaError("atom requires a name");
    return make({Kind::Atom, std::move(name), {}, {}});
  }
  static Formula negation(Formula f) { return make({Kind::Not, {}, {}, {std::move(f)}}); }
  static Formula conjunction(std::vector<Formula> kids) {
    if (kids.size() < 2) throw FormulaError("conjunction requires >= 2 children");
    return make({Kind::And, {}, {}, std::move(kids)});
  }
  static Formula disjunction(std::vector<Formula> kids) {
    if (kids.size() < 2) throw FormulaError("disjunction requires >= 2 children");
    return make({Kind::Or, {}, {}, std::move(kids)});
  }
  static Formula next(Formula f) { return make({Kind::Next, {}, {}, {std::move(f)}}); }
  static Formula eventually(Interval w, Formula f) {
    return make({Kind::Eventually, {}, w, {std::move(f)}});
  }
  static Formula always(Interval w, Formula f) {
    return make({Kind::Always, {}, w, {std::move(f)}});
  }
  static Formula until(Interval w, Formula lhs, Formula rhs) {
    return make({Kind::Until, {}, w, {std::move(lhs), std::move(rhs)}});
  }
  static Formula release(Interval w, Formula lhs, Formula rhs) {
    return make({Kind::Release, {}, w, {std::move(lhs), std::move(rhs)}});
  }

  Kind kind() const { return node_->kind; }
  const std::string& name() const { return node_->name; }
  const Interval& window() const { return node_->window; }
  const std::vector<Formula>& kids() const { return node_->kids; }
  const Formula& kid(std::size_t i) const { return node_->kids.at(i); }

  bool operator==(const Formula& o) const {
    if (node_ == o.node_) return true;
    if (node_->kind != o.node_->kind) return false;
    if (node_->name != o.node_->name) return false;
    if (!(node_->window == o.node_->window)) return false;
    if (node_->kids.size() != o.node_->kids.size()) return false;
    for (std::size_t i = 0; i < node_->kids.size(); ++i)
      if (!(node_->kids[i] == o.node_->kids[i])) return false;
    return true;
  }
  bool operator!=(const Formula& o) const { return !(*this == o); }

 private:
  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Formula make(Node n) { return Formula(std::make_shared<const Node>(std::move(n))); }

  std::shared_ptr<const Node> node_;
};

namespace detail {

inline int precedence(Kind k) {
  switch (k) {
    case Kind::Until:
    case Kind::Release: return 1;
    case Kind::Or: return 3;
    case Kind::And: return 4;
    default: return 5;  // atoms, constants and unary operators bind tightest
  }
}

inline std::string window_suffix(const Interval& w) {
  if (w.is_default()) return "";
  std::string hi = w.is_unbounded() ? "inf" : detail::format_double(w.hi);
  return "[" + detail::format_double(w.lo) + "," + hi + "]";
}

}  // namespace detail

// Canonical printer; parse(to_string(f)) reproduces f exactly.
inline std::string to_string(const Formula& f) {
  auto wrap = [](const Formula& kid, int parent_prec) {
    std::string s = to_string(kid);
    if (detail::precedence(kid.kind()) < parent_prec) return "(" + s + ")";
    return s;
  };
  switch (f.kind()) {
    case Kind::True: return "true";
    case Kind::False: return "false";
    case Kind::Atom: return f.name();
    case Kind::Not: return "!" + wrap(f.kid(0), 5);
    case Kind::Next: return "X " + wrap(f.kid(0), 5);
    case Kind::Eventually: return "F" + detail::window_suffix(f.window()) + " " + wrap(f.kid(0), 5);
    case Kind::Always: return "G" + detail::window_suffix(f.window()) + " " + wrap(f.kid(0), 5);
    case Kind::And: {
      std::string s;
      for (std::size_t i = 0; i < f.kids().size(); ++i) {
        if (i) s += " & ";
        s += wrap(f.kid(i), 5);  // nested And/Or re-parenthesized to keep shape
      }
      return s;
    }
    case Kind::Or: {
      std::string s;
      for (std::size_t i = 0; i < f.kids().size(); ++i) {
        if (i) s += " | ";
        s += wrap(f.kid(i), 4);
      }
      return s;
    }
    case Kind::Until:
      return wrap(f.kid(0), 2) + " U" + detail::window_suffix(f.window()) + " " + wrap(f.kid(1), 2);
    case Kind::Release:
      return wrap(f.kid(0), 2) + " R" + detail::window_suffix(f.window()) + " " + wrap(f.kid(1), 2);
  }
  throw FormulaError("unreachable formula kind");
}

// Negation normal form: negation survives only directly above atoms.
inline Formula to_nnf(const Formula& f, bool negate = false) {
  switch (f.kind()) {
    case Kind::True: return Formula::constant(!negate);
    case Kind::False: return Formula::constant(negate);
    case Kind::Atom: return negate ? Formula::negation(f) : f;
    case Kind::Not: return to_nnf(f.kid(0), !negate);
    case Kind::And:
    case Kind::Or: {
      std::vector<Formula> kids;
      kids.reserve(f.kids().size());
      for (const auto& k : f.kids()) kids.push_back(to_nnf(k, negate));
      bool is_and = (f.kind() == Kind::And) != negate;
      return is_and ? Formula::conjunction(std::move(kids)) : Formula::disjunction(std::move(kids));
    }
    case Kind::Next: return Formula::next(to_nnf(f.kid(0), negate));
    case Kind::Eventually:
      return negate ? Formula::always(f.window(), to_nnf(f.kid(0), true))
                    : Formula::eventually(f.window(), to_nnf(f.kid(0), false));
    case Kind::Always:
      return negate ? Formula::eventually(f.window(), to_nnf(f.kid(0), true))
                    : Formula::always(f.window(), to_nnf(f.kid(0), false));
    case Kind::Until:
      return negate ? Formula::release(f.window(), to_nnf(f.kid(0), true), to_nnf(f.kid(1), true))
                    : Formula::until(f.window(), to_nnf(f.kid(0), false), to_nnf(f.kid(1), false));
    case Kind::Release:
      return negate ? Formula::until(f.window(), to_nnf(f.kid(0), true), to_nnf(f.kid(1), true))
                    : Formula::release(f.window(), to_nnf(f.kid(0), false), to_nnf(f.kid(1), false));
  }
  throw FormulaError("unreachable formula kind");
}

inline bool is_nnf(const Formula& f) {
  if (f.kind() == Kind::Not && f.kid(0).kind() != Kind::Atom) return false;
  for (const auto& k : f.kids())
    if (!is_nnf(k)) return false;
  return true;
}

// Convert interval bounds from seconds to discrete steps:
// lo -> ceil(lo/dt), hi -> floor(hi/dt). Infinite bounds pass through.
inline Formula to_steps(const Formula& f, double dt) {
  if (!(dt > 0.0)) throw FormulaError("to_steps requires dt > 0");
  std::vector<Formula> kids;
  kids.reserve(f.kids().size());
  for (const auto& k : f.kids()) kids.push_back(to_steps(k, dt));
  if (!is_temporal(f.kind()) || f.kind() == Kind::Next) {
    switch (f.kind()) {
      case Kind::True:
      case Kind::False:
      case Kind::Atom: return f;
      case Kind::Not: return Formula::negation(std::move(kids[0]));
      case Kind::And: return Formula::conjunction(std::move(kids));
      case Kind::Or: return Formula::disjunction(std::move(kids));
      case Kind::Next: return Formula::next(std::move(kids[0]));
      default: break;
    }
  }
  // Tolerate representation noise in lo/dt before rounding up.
  const double tol = 1e-9;
  double lo = std::ceil(f.window().lo / dt - tol);
  double hi = f.window().is_unbounded() ? f.window().hi : std::floor(f.window().hi / dt + tol);
  if (!std::isinf(hi) && hi < lo)
    throw FormulaError("interval [" + detail::format_double(f.window().lo) + "," +
                       detail::format_double(f.window().hi) + "]s is empty at dt=" +
                       detail::format_double(dt));
  Interval w(lo, hi);
  switch (f.kind()) {
    case Kind::Eventually: return Formula::eventually(w, std::move(kids[0]));
    case Kind::Always: return Formula::always(w, std::move(kids[0]));
    case Kind::Until: return Formula::until(w, std::move(kids[0]), std::move(kids[1]));
    case Kind::Release: return Formula::release(w, std::move(kids[0]), std::move(kids[1]));
    default: break;
  }
  throw FormulaError("unreachable formula kind");
}

// Largest time offset the formula inspects from its evaluation instant.
// Requires bounded (already truncated) windows; bounds must be integral steps.
inline int horizon(const Formula& f) {
  switch (f.kind()) {
    case Kind::True:
    case Kind::False:
    case Kind::Atom: return 0;
    case Kind::Not: return horizon(f.kid(0));
    case Kind::And:
    case Kind::Or: {
      int h = 0;
      for (const auto& k : f.kids()) h = std::max(h, horizon(k));
      return h;
    }
    case Kind::Next: return 1 + horizon(f.kid(0));
    case Kind::Eventually:
    case Kind::Always: return f.window().hi_steps() + horizon(f.kid(0));
    case Kind::Until:
    case Kind::Release:
      return f.window().hi_steps() + std::max(horizon(f.kid(0)), horizon(f.kid(1)));
  }
  throw FormulaError("unreachable formula kind");
}

// Spec-facing variant: checks the horizon fits a planning horizon of N steps.
inline int horizon_of(const Formula& f, int n_steps) {
  int h = horizon(f);
  if (h > n_steps) throw FormulaError("formula needs longer trajectory: inspects " +
                                      std::to_string(h) + " steps, horizon is " +
                                      std::to_string(n_steps));
  return h;
}

// Replace unbounded upper limits by N - horizon(children), bottom-up, so the
// whole formula resolves inside a trajectory of N+1 samples.
inline Formula truncate_unbounded(const Formula& f, int n_steps) {
  std::vector<Formula> kids;
  kids.reserve(f.kids().size());
  for (const auto& k : f.kids()) kids.push_back(truncate_unbounded(k, n_steps));
  switch (f.kind()) {
    case Kind::True:
    case Kind::False:
    case Kind::Atom: return f;
    case Kind::Not: return Formula::negation(std::move(kids[0]));
    case Kind::And: return Formula::conjunction(std::move(kids));
    case Kind::Or: return Formula::disjunction(std::move(kids));
    case Kind::Next: return Formula::next(std::move(kids[0]));
    default: break;
  }
  Interval w = f.window();
  if (w.is_unbounded()) {
    int child_h = 0;
    for (const auto& k : kids) child_h = std::max(child_h, horizon(k));
    double hi = static_cast<double>(n_steps - child_h);
    if (hi < w.lo)
      throw FormulaError("formula needs longer trajectory: unbounded window cannot open before step " +
                         detail::format_double(w.lo) + " within horizon " + std::to_string(n_steps));
    w = Interval(w.lo, hi);
  }
  switch (f.kind()) {
    case Kind::Eventually: return Formula::eventually(w, std::move(kids[0]));
    case Kind::Always: return Formula::always(w, std::move(kids[0]));
    case Kind::Until: return Formula::until(w, std::move(kids[0]), std::move(kids[1]));
    case Kind::Release: return Formula::release(w, std::move(kids[0]), std::move(kids[1]));
    default: break;
  }
  throw FormulaError("unreachable formula kind");
}

// Rewrite R[a,b](p,q) into always/eventually form over the bounded window:
//   G[a,b] q  |  OR_{k=0}^{b-1} ( F[k,k] p & G[a,min(b,k)] q )
// where the G term drops out for k < a (p released q before the window).
inline Formula eliminate_release(const Formula& f) {
  std::vector<Formula> kids;
  kids.reserve(f.kids().size());
  for (const auto& k : f.kids()) kids.push_back(eliminate_release(k));
  switch (f.kind()) {
    case Kind::True:
    case Kind::False:
    case Kind::Atom: return f;
    case Kind::Not: return Formula::negation(std::move(kids[0]));
    case Kind::And: return Formula::conjunction(std::move(kids));
    case Kind::Or: return Formula::disjunction(std::move(kids));
    case Kind::Next: return Formula::next(std::move(kids[0]));
    case Kind::Eventually: return Formula::eventually(f.window(), std::move(kids[0]));
    case Kind::Always: return Formula::always(f.window(), std::move(kids[0]));
    case Kind::Until: return Formula::until(f.window(), std::move(kids[0]), std::move(kids[1]));
    case Kind::Release: break;
  }
  const Formula& p = kids[0];
  const Formula& q = kids[1];
  int a = f.window().lo_steps();
  int b = f.window().hi_steps();
  std::vector<Formula> terms;
  terms.push_back(Formula::always(Interval(a, b), q));
  for (int k = 0; k < b; ++k) {
    Formula released = Formula::eventually(Interval(k, k), p);
    if (k < a) {
      terms.push_back(std::move(released));
    } else {
      terms.push_back(Formula::conjunction({std::move(released), Formula::always(Interval(a, k), q)}));
    }
  }
  if (terms.size() == 1) return std::move(terms[0]);
  return Formula::disjunction(std::move(terms));
}

inline void collect_atoms(const Formula& f, std::vector<std::string>& out) {
  if (f.kind() == Kind::Atom) {
    if (std::find(out.begin(), out.end(), f.name()) == out.end()) out.push_back(f.name());
  }
  for (const auto& k : f.kids()) collect_atoms(k, out);
}

inline std::vector<std::string> collect_atoms(const Formula& f) {
  std::vector<std::string> out;
  collect_atoms(f, out);
  return out;
}

// Full preparation pipeline used by the encoder and the verification oracle:
// seconds -> steps, NNF, unbounded windows truncated to the horizon.
inline Formula prepare_for_horizon(const Formula& f, double dt, int n_steps, bool nnf = true) {
  Formula g = to_steps(nnf ? to_nnf(f) : f, dt);
  g = truncate_unbounded(g, n_steps);
  horizon_of(g, n_steps);  // throws if the formula does not fit
  return g;
}

}  // namespace mtlplan
