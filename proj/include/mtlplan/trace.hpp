// mtlplan/trace.hpp -- finite timed traces and reference MTL semantics
//
// `evaluate` is the ground-truth oracle the MILP encoding is checked against.
// It walks the syntax tree directly; in particular Release is evaluated as
// the native dual of until, not via the rewrite the encoder uses.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtlplan/formula.hpp"

namespace mtlplan {

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Boolean atom valuations over samples 0..length()-1.
class Trace {
 public:
  Trace() = default;
  explicit Trace(int length) : length_(length) {
    if (length < 1) throw TraceError("trace needs at least one sample");
  }

  int length() const { return length_; }
  int last() const { return length_ - 1; }

  void set(const std::string& atom, int t, bool v) {
    check_index(t);
    auto& col = ap_[atom];
    if (static_cast<int>(col.size()) != length_) col.assign(length_, 0);
    col[t] = v ? 1 : 0;
  }

  bool value(const std::string& atom, int t) const {
    check_index(t);
    auto it = ap_.find(atom);
    if (it == ap_.end()) throw TraceError("trace has no atom '" + atom + "'");
    return it->second[t] != 0;
  }

  bool has_atom(const std::string& atom) const { return ap_.count(atom) != 0; }
  const std::map<std::string, std::vector<char>>& atoms() const { return ap_; }

  std::set<std::string> labels_at(int t) const {
    check_index(t);
    std::set<std::string> out;
    for (const auto& [name, col] : ap_)
      if (col[t]) out.insert(name);
    return out;
  }

 private:
  void check_index(int t) const {
    if (t < 0 || t >= length_)
      throw TraceError("sample index " + std::to_string(t) + " outside trace of length " +
                       std::to_string(length_));
  }

  int length_ = 0;
  std::map<std::string, std::vector<char>> ap_;
};

// Truth of `f` over `trace` at sample `t`. Windows must already be bounded
// integer step counts (run the formula through prepare_for_horizon first);
// out-of-range window accesses throw instead of being clamped.
inline bool evaluate(const Formula& f, const Trace& trace, int t = 0) {
  switch (f.kind()) {
    case Kind::True: return true;
    case Kind::False: return false;
    case Kind::Atom: return trace.value(f.name(), t);
    case Kind::Not: return !evaluate(f.kid(0), trace, t);
    case Kind::And:
      for (const auto& k : f.kids())
        if (!evaluate(k, trace, t)) return false;
      return true;
    case Kind::Or:
      for (const auto& k : f.kids())
        if (evaluate(k, trace, t)) return true;
      return false;
    case Kind::Next: return evaluate(f.kid(0), trace, t + 1);
    case Kind::Eventually: {
      int a = f.window().lo_steps(), b = f.window().hi_steps();
      for (int j = t + a; j <= t + b; ++j)
        if (evaluate(f.kid(0), trace, j)) return true;
      return false;
    }
    case Kind::Always: {
      int a = f.window().lo_steps(), b = f.window().hi_steps();
      for (int j = t + a; j <= t + b; ++j)
        if (!evaluate(f.kid(0), trace, j)) return false;
      return true;
    }
    case Kind::Until: {
      // exists j in [t+a, t+b] with rhs at j and lhs at every k in [t, j)
      int a = f.window().lo_steps(), b = f.window().hi_steps();
      for (int j = t + a; j <= t + b; ++j) {
        if (!evaluate(f.kid(1), trace, j)) continue;
        bool lhs_held = true;
        for (int k = t; k < j; ++k)
          if (!evaluate(f.kid(0), trace, k)) { lhs_held = false; break; }
        if (lhs_held) return true;
      }
      return false;
    }
    case Kind::Release: {
      // dual: every j in [t+a, t+b] has rhs at j or lhs at some k in [t, j)
      int a = f.window().lo_steps(), b = f.window().hi_steps();
      for (int j = t + a; j <= t + b; ++j) {
        if (evaluate(f.kid(1), trace, j)) continue;
        bool released = false;
        for (int k = t; k < j; ++k)
          if (evaluate(f.kid(0), trace, k)) { released = true; break; }
        if (!released) return false;
      }
      return true;
    }
  }
  throw FormulaError("unreachable formula kind");
}

namespace detail {

inline Formula simplified_not(Formula f) {
  if (f.kind() == Kind::True) return Formula::constant(false);
  if (f.kind() == Kind::False) return Formula::constant(true);
  if (f.kind() == Kind::Not) return f.kid(0);
  return Formula::negation(std::move(f));
}

inline Formula simplified_and(std::vector<Formula> kids) {
  std::vector<Formula> keep;
  for (auto& k : kids) {
    if (k.kind() == Kind::False) return Formula::constant(false);
    if (k.kind() != Kind::True) keep.push_back(std::move(k));
  }
  if (keep.empty()) return Formula::constant(true);
  if (keep.size() == 1) return keep.front();
  return Formula::conjunction(std::move(keep));
}

inline Formula simplified_or(std::vector<Formula> kids) {
  std::vector<Formula> keep;
  for (auto& k : kids) {
    if (k.kind() == Kind::True) return Formula::constant(true);
    if (k.kind() != Kind::False) keep.push_back(std::move(k));
  }
  if (keep.empty()) return Formula::constant(false);
  if (keep.size() == 1) return keep.front();
  return Formula::disjunction(std::move(keep));
}

}  // namespace detail

// One-step progression: a trace satisfies `f` at sample t iff its tail from
// t+1 satisfies progress(f, labels at t). Windows must be bounded (truncate
// first); constants fold eagerly, and each step shrinks the horizon by one,
// so consuming a whole in-horizon trace always lands on True or False.
inline Formula progress(const Formula& f, const std::set<std::string>& now) {
  switch (f.kind()) {
    case Kind::True:
    case Kind::False: return f;
    case Kind::Atom: return Formula::constant(now.count(f.name()) != 0);
    case Kind::Not: return detail::simplified_not(progress(f.kid(0), now));
    case Kind::And: {
      std::vector<Formula> kids;
      kids.reserve(f.kids().size());
      for (const auto& k : f.kids()) kids.push_back(progress(k, now));
      return detail::simplified_and(std::move(kids));
    }
    case Kind::Or: {
      std::vector<Formula> kids;
      kids.reserve(f.kids().size());
      for (const auto& k : f.kids()) kids.push_back(progress(k, now));
      return detail::simplified_or(std::move(kids));
    }
    case Kind::Next: return f.kid(0);
    case Kind::Eventually: {
      int a = f.window().lo_steps(), b = f.window().hi_steps();
      if (a > 0) return Formula::eventually(Interval(a - 1, b - 1), f.kid(0));
      Formula here = progress(f.kid(0), now);
      if (b == 0) return here;
      return detail::simplified_or({here, Formula::eventually(Interval(0, b - 1), f.kid(0))});
    }
    case Kind::Always: {
      int a = f.window().lo_steps(), b = f.window().hi_steps();
      if (a > 0) return Formula::always(Interval(a - 1, b - 1), f.kid(0));
      Formula here = progress(f.kid(0), now);
      if (b == 0) return here;
      return detail::simplified_and({here, Formula::always(Interval(0, b - 1), f.kid(0))});
    }
    case Kind::Until: {
      // settle now via rhs, or keep lhs alive and settle later
      int a = f.window().lo_steps(), b = f.window().hi_steps();
      Formula lhs_now = progress(f.kid(0), now);
      if (a > 0)
        return detail::simplified_and(
            {lhs_now, Formula::until(Interval(a - 1, b - 1), f.kid(0), f.kid(1))});
      Formula rhs_now = progress(f.kid(1), now);
      if (b == 0) return rhs_now;
      return detail::simplified_or(
          {rhs_now, detail::simplified_and(
                        {lhs_now, Formula::until(Interval(0, b - 1), f.kid(0), f.kid(1))})});
    }
    case Kind::Release: {
      // dual: lhs now releases the rest; otherwise rhs must hold at settle
      int a = f.window().lo_steps(), b = f.window().hi_steps();
      Formula lhs_now = progress(f.kid(0), now);
      if (a > 0)
        return detail::simplified_or(
            {lhs_now, Formula::release(Interval(a - 1, b - 1), f.kid(0), f.kid(1))});
      Formula rhs_now = progress(f.kid(1), now);
      if (b == 0) return rhs_now;
      return detail::simplified_and(
          {rhs_now, detail::simplified_or(
                        {lhs_now, Formula::release(Interval(0, b - 1), f.kid(0), f.kid(1))})});
    }
  }
  throw FormulaError("unreachable formula kind");
}

// evaluate() restated as a left-to-right scan; agrees with evaluate whenever
// t + horizon_of(f) fits inside the trace. Leftover obligations past the last
// sample count as unmet.
inline bool evaluate_by_progression(const Formula& f, const Trace& trace, int t = 0) {
  Formula g = f;
  for (int k = t; k < trace.length(); ++k) {
    g = progress(g, trace.labels_at(k));
    if (g.kind() == Kind::True) return true;
    if (g.kind() == Kind::False) return false;
  }
  return false;
}

// Why a violated formula fails: the subformula whose obligation breaks and
// the sample index where the failure becomes conclusive.
struct Violation {
  std::string subformula;
  int step = 0;
  std::string detail;
};

namespace detail {

inline Violation explain_true(const Formula& f, const Trace& trace, int t);

// Precondition: evaluate(f, trace, t) == false.
inline Violation explain_false(const Formula& f, const Trace& trace, int t) {
  switch (f.kind()) {
    case Kind::False:
      return {to_string(f), t, "'false' never holds"};
    case Kind::Atom:
      return {to_string(f), t, "'" + f.name() + "' does not hold at step " + std::to_string(t)};
    case Kind::Not:
      if (f.kid(0).kind() == Kind::Atom)
        return {to_string(f), t, "'" + f.kid(0).name() + "' holds at step " + std::to_string(t)};
      return explain_true(f.kid(0), trace, t);
    case Kind::And: {
      std::optional<Violation> best;
      for (const auto& k : f.kids()) {
        if (evaluate(k, trace, t)) continue;
        Violation v = explain_false(k, trace, t);
        if (!best || v.step < best->step) best = v;
      }
      return *best;
    }
    case Kind::Or: {
      std::optional<Violation> best;
      for (const auto& k : f.kids()) {
        Violation v = explain_false(k, trace, t);
        if (!best || v.step < best->step) best = v;
      }
      best->detail = "no alternative of '" + to_string(f) + "' holds; e.g. " + best->detail;
      return *best;
    }
    case Kind::Next:
      return explain_false(f.kid(0), trace, t + 1);
    case Kind::Eventually: {
      int a = f.window().lo_steps(), b = f.window().hi_steps();
      return {to_string(f), t + b,
              "'" + to_string(f.kid(0)) + "' holds nowhere in steps " + std::to_string(t + a) +
                  ".." + std::to_string(t + b)};
    }
    case Kind::Always: {
      int a = f.window().lo_steps(), b = f.window().hi_steps();
      for (int j = t + a; j <= t + b; ++j) {
        if (evaluate(f.kid(0), trace, j)) continue;
        Violation inner = explain_false(f.kid(0), trace, j);
        return {to_string(f), j, "violated at step " + std::to_string(j) + ": " + inner.detail};
      }
      break;
    }
    case Kind::Until: {
      int a = f.window().lo_steps(), b = f.window().hi_steps();
      // first step where the left side breaks kills every later witness
      for (int k = t; k < t + b; ++k) {
        if (evaluate(f.kid(0), trace, k)) continue;
        bool witness = false;
        for (int j = t + a; j <= k && j <= t + b; ++j)
          if (evaluate(f.kid(1), trace, j)) { witness = true; break; }
        if (!witness)
          return {to_string(f), k,
                  "'" + to_string(f.kid(0)) + "' breaks at step " + std::to_string(k) +
                      " before '" + to_string(f.kid(1)) + "' is reached"};
        break;  // a witness at or before the break already decides satisfaction
      }
      return {to_string(f), t + b,
              "'" + to_string(f.kid(1)) + "' holds nowhere in steps " + std::to_string(t + a) +
                  ".." + std::to_string(t + b)};
    }
    case Kind::Release: {
      int a = f.window().lo_steps(), b = f.window().hi_steps();
      for (int j = t + a; j <= t + b; ++j) {
        if (evaluate(f.kid(1), trace, j)) continue;
        bool released = false;
        for (int k = t; k < j; ++k)
          if (evaluate(f.kid(0), trace, k)) { released = true; break; }
        if (!released)
          return {to_string(f), j,
                  "'" + to_string(f.kid(1)) + "' fails at step " + std::to_string(j) +
                      " with no prior '" + to_string(f.kid(0)) + "'"};
      }
      break;
    }
    case Kind::True:
      break;
  }
  throw FormulaError("explain_false called on a satisfied formula");
}

// Used for negation: evaluate(f, trace, t) == true, explain why !f fails.
inline Violation explain_true(const Formula& f, const Trace& trace, int t) {
  switch (f.kind()) {
    case Kind::True:
      return {to_string(f), t, "'true' always holds"};
    case Kind::Atom:
      return {"!" + to_string(f), t, "'" + f.name() + "' holds at step " + std::to_string(t)};
    case Kind::Not:
      return explain_false(f.kid(0), trace, t);
    default: {
      // generic: report the earliest step in the satisfied formula's span
      return {"!(" + to_string(f) + ")", t,
              "'" + to_string(f) + "' holds at step " + std::to_string(t)};
    }
  }
}

}  // namespace detail

// Earliest falsifying obligation of a violated formula, or nullopt if satisfied.
inline std::optional<Violation> diagnose(const Formula& f, const Trace& trace, int t = 0) {
  if (evaluate(f, trace, t)) return std::nullopt;
  return detail::explain_false(f, trace, t);
}

}  // namespace mtlplan
