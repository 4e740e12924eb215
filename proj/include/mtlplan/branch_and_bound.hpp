// mtlplan/branch_and_bound.hpp -- MILP search over the simplex core
//
// Best-bound node selection (ties to the lowest node id) after an initial
// depth-first dive to a first incumbent; branching on the most fractional
// binary (ties to the lowest variable id), nearest-integer child first.
// Nodes store single-variable bound diffs against their parent; re-solves
// are warm dual-simplex runs from one global working basis.
#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <queue>
#include <utility>
#include <vector>

#include "mtlplan/simplex.hpp"

namespace mtlplan {

enum class MilpStatus { Optimal, FeasibleGap, Infeasible, NodeLimit };

inline const char* to_string(MilpStatus s) {
  switch (s) {
    case MilpStatus::Optimal: return "optimal";
    case MilpStatus::FeasibleGap: return "feasible_gap";
    case MilpStatus::Infeasible: return "infeasible";
    case MilpStatus::NodeLimit: return "node_limit";
  }
  return "?";
}

// Which fractional binary a node branches on. Staged models whose binaries
// are created in time order (one trajectory step after another) usually dive
// much better under LowestIndex; MostFractional is the classic default.
enum class BranchRule { MostFractional, LowestIndex };

struct BnbOptions {
  LpOptions lp;
  double gap_tol = 1e-6;    // relative: (incumbent - bound) / max(1, |incumbent|)
  double tol_int = 1e-6;    // integrality tolerance on binaries
  long node_limit = 0;      // 0 = unlimited
  double time_limit = 0.0;  // seconds; 0 = unlimited
  BranchRule branch_rule = BranchRule::MostFractional;
  // Optional rounding heuristic: maps a fractional relaxation point to a
  // complete candidate assignment (or nullopt). Candidates are re-checked
  // against the model before they may become incumbents, so the callback
  // can guess freely; search continues either way to prove the bound.
  std::function<std::optional<Eigen::VectorXd>(const Eigen::VectorXd&)> primal_hint;
  // Optional starting incumbent, validated like any hint candidate before
  // adoption; a bad warm start is ignored rather than reported.
  std::optional<Eigen::VectorXd> warm_start;
};

struct MilpResult {
  MilpStatus status = MilpStatus::Infeasible;
  Eigen::VectorXd x;  // incumbent (empty when none)
  double objective = std::numeric_limits<double>::infinity();
  double bound = -std::numeric_limits<double>::infinity();
  long nodes = 0;
  long lp_iterations = 0;
  double seconds = 0.0;
  // (global bound, incumbent) after each processed node; weak duality holds
  // entrywise
  std::vector<std::pair<double, double>> search_log;

  double gap() const {
    if (!std::isfinite(objective)) return std::numeric_limits<double>::infinity();
    return (objective - bound) / std::max(1.0, std::abs(objective));
  }
};

// Activity-based bound tightening to a fixpoint (capped passes). Returns
// false when some variable's domain empties. Binary domains round to
// integer endpoints.
inline bool tighten_bounds(const MilpModel& model, Eigen::VectorXd& lo, Eigen::VectorXd& hi,
                           double tol_int = 1e-6) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double eps = 1e-9;
  auto clip = [&](int j, double new_lo, double new_hi) -> bool {
    bool changed = false;
    if (new_lo > lo[j] + eps * (1.0 + std::abs(lo[j]))) {
      lo[j] = new_lo;
      changed = true;
    }
    if (new_hi < hi[j] - eps * (1.0 + std::abs(hi[j]))) {
      hi[j] = new_hi;
      changed = true;
    }
    if (changed && model.vars()[j].kind == VarKind::Binary) {
      if (lo[j] > tol_int) lo[j] = 1.0;
      else if (lo[j] > 0.0) lo[j] = 0.0;
      if (hi[j] < 1.0 - tol_int) hi[j] = 0.0;
      else if (hi[j] < 1.0) hi[j] = 1.0;
    }
    return changed;
  };

  // one-sided pass for sum(a x) <= b; GE rows come in negated
  auto le_pass = [&](const std::vector<LinTerm>& terms, double b, bool negate) -> int {
    double act = 0.0;  // minimum activity
    int n_inf = 0;
    int inf_var = -1;
    for (const auto& t : terms) {
      double a = negate ? -t.coef : t.coef;
      double v = a > 0 ? a * lo[t.var] : a * hi[t.var];
      if (std::isinf(v)) {
        ++n_inf;
        inf_var = t.var;
      } else {
        act += v;
      }
    }
    if (n_inf == 0 && act > b + 1e-7 * (1.0 + std::abs(b))) return -1;  // infeasible
    if (n_inf > 1) return 0;
    int changed = 0;
    for (const auto& t : terms) {
      double a = negate ? -t.coef : t.coef;
      if (a == 0.0) continue;
      if (n_inf == 1) {
        if (t.var != inf_var) continue;
        double v = (b - act) / a;
        changed |= a > 0 ? clip(t.var, -inf, v) : clip(t.var, v, inf);
        continue;
      }
      double self = a > 0 ? a * lo[t.var] : a * hi[t.var];
      double slack = b - (act - self);
      if (a > 0)
        changed |= clip(t.var, -inf, slack / a);
      else
        changed |= clip(t.var, slack / a, inf);
    }
    return changed;
  };

  for (int pass = 0; pass < 20; ++pass) {
    bool changed = false;
    for (const auto& r : model.rows()) {
      if (r.sense == RowSense::LE || r.sense == RowSense::EQ) {
        int s = le_pass(r.terms, r.rhs, false);
        if (s < 0) return false;
        changed |= s > 0;
      }
      if (r.sense == RowSense::GE || r.sense == RowSense::EQ) {
        int s = le_pass(r.terms, -r.rhs, true);
        if (s < 0) return false;
        changed |= s > 0;
      }
    }
    for (int j = 0; j < model.n_vars(); ++j)
      if (lo[j] > hi[j] + 1e-9) return false;
    if (!changed) break;
  }
  for (int j = 0; j < model.n_vars(); ++j)
    if (lo[j] > hi[j]) {
      if (lo[j] > hi[j] + 1e-9) return false;
      lo[j] = hi[j];  // collapse hairline crossings
    }
  return true;
}

inline MilpResult branch_and_bound(const MilpModel& model, BnbOptions opt = {}) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  MilpResult res;
  SimplexSolver solver(model, opt.lp);
  const Eigen::VectorXd root_lo = solver.model_lo();
  const Eigen::VectorXd root_hi = solver.model_hi();

  std::vector<int> binaries;
  for (int j = 0; j < model.n_vars(); ++j)
    if (model.vars()[j].kind == VarKind::Binary) binaries.push_back(j);

  struct Node {
    long parent = -1;
    int var = -1;        // bound diff against parent
    double vlo = 0.0, vhi = 0.0;
    double bound = -std::numeric_limits<double>::infinity();
  };
  std::vector<Node> nodes(1);  // root

  Eigen::VectorXd lo(model.n_vars()), hi(model.n_vars());
  auto materialize = [&](long id) {
    lo = root_lo;
    hi = root_hi;
    for (long c = id; c > 0; c = nodes[c].parent) {
      lo[nodes[c].var] = std::max(lo[nodes[c].var], nodes[c].vlo);
      hi[nodes[c].var] = std::min(hi[nodes[c].var], nodes[c].vhi);
    }
  };

  double incumbent = inf;
  Eigen::VectorXd inc_x;
  std::vector<long> dive;  // sibling stack until the first incumbent
  using HeapItem = std::pair<double, long>;
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> open;

  auto cutoff = [&] { return incumbent - opt.gap_tol * std::max(1.0, std::abs(incumbent)); };

  auto frontier_bound = [&] {
    double b = inf;
    for (long id : dive) b = std::min(b, nodes[id].bound);
    if (!open.empty()) b = std::min(b, open.top().first);
    return std::min(b, incumbent);
  };

  auto log_state = [&](double processed_bound) {
    double b = std::min(frontier_bound(), processed_bound);
    res.bound = std::max(res.bound, std::min(b, incumbent));
    if (res.search_log.empty() || res.search_log.back() != std::make_pair(res.bound, incumbent))
      res.search_log.push_back({res.bound, incumbent});
  };

  auto most_fractional = [&](const Eigen::VectorXd& x) {
    int var = -1;
    double best = opt.tol_int;
    for (int j : binaries) {
      double f = std::abs(x[j] - std::round(x[j]));
      if (f > best) {
        best = f;
        var = j;
      }
    }
    return var;
  };

  auto pick_branch = [&](const Eigen::VectorXd& x) {
    if (opt.branch_rule == BranchRule::LowestIndex) {
      for (int j : binaries)
        if (std::abs(x[j] - std::round(x[j])) > opt.tol_int) return j;
      return -1;
    }
    return most_fractional(x);
  };

  auto objective_of = [&](const Eigen::VectorXd& x) {
    double v = 0.0;
    for (const auto& term : model.objective()) v += term.coef * x[term.var];
    return v;
  };

  // Rounding heuristic: a candidate only becomes the incumbent after the
  // same independent feasibility re-check an integral LP point gets.
  auto try_hint = [&](const Eigen::VectorXd& relax_x) {
    if (!opt.primal_hint) return;
    std::optional<Eigen::VectorXd> cand = opt.primal_hint(relax_x);
    if (!cand || cand->size() != relax_x.size()) return;
    if (most_fractional(*cand) >= 0) return;
    double obj = objective_of(*cand);
    if (obj >= incumbent || !model.is_feasible(*cand, opt.tol_int)) return;
    incumbent = obj;
    inc_x = *cand;
  };

  if (opt.warm_start && opt.warm_start->size() == model.n_vars() &&
      most_fractional(*opt.warm_start) < 0 && model.is_feasible(*opt.warm_start, opt.tol_int)) {
    incumbent = objective_of(*opt.warm_start);
    inc_x = *opt.warm_start;
  }

  // Processes one node: propagate, solve, then prune / record / branch.
  auto process = [&](long id) {
    ++res.nodes;
    materialize(id);
    if (!tighten_bounds(model, lo, hi, opt.tol_int)) {
      log_state(inf);
      return;
    }
    LpResult r = id == 0 ? solver.solve(lo, hi) : solver.resolve(lo, hi);
    res.lp_iterations += r.iterations;
    if (r.status == LpStatus::Infeasible) {
      log_state(inf);
      return;
    }
    if (r.status == LpStatus::Unbounded)
      throw MilpError("relaxation is unbounded along " +
                      std::string("an improving ray; models need finite structural bounds"));
    nodes[id].bound = r.objective;
    if (r.objective >= cutoff()) {
      log_state(r.objective);
      return;
    }
    int fv = pick_branch(r.x);
    if (fv < 0) {
      Eigen::VectorXd cand = r.x;
      if (!model.is_feasible(cand, opt.tol_int)) {
        // one cold retry before declaring numerical trouble
        LpResult r2 = solver.solve(lo, hi);
        res.lp_iterations += r2.iterations;
        if (r2.status != LpStatus::Optimal || most_fractional(r2.x) >= 0 ||
            !model.is_feasible(r2.x, opt.tol_int))
          throw MilpError("numerical failure: integral relaxation point fails the independent "
                          "feasibility re-check");
        cand = r2.x;
        r.objective = r2.objective;
      }
      if (r.objective < incumbent) {
        incumbent = r.objective;
        inc_x = cand;
      }
      log_state(r.objective);
      return;
    }
    try_hint(r.x);
    if (r.objective >= cutoff()) {  // hint incumbent may already close this node
      log_state(r.objective);
      return;
    }
    // branch: nearest-integer child first (0.5 rounds up)
    double first = std::round(r.x[fv]);
    long a = static_cast<long>(nodes.size());
    nodes.push_back({id, fv, first, first, r.objective});
    long b = static_cast<long>(nodes.size());
    nodes.push_back({id, fv, 1.0 - first, 1.0 - first, r.objective});
    if (!std::isfinite(incumbent)) {
      dive.push_back(b);
      dive.push_back(a);  // explored next
    } else {
      open.push({r.objective, a});
      open.push({r.objective, b});
    }
    log_state(r.objective);
  };

  process(0);
  MilpStatus limit_status = MilpStatus::Optimal;
  bool limited = false;
  while (true) {
    if (std::isfinite(incumbent)) {
      // empty the dive stack into best-bound order once an incumbent exists
      for (long id : dive) open.push({nodes[id].bound, id});
      dive.clear();
    }
    if (dive.empty() && open.empty()) break;
    if (opt.node_limit > 0 && res.nodes >= opt.node_limit) {
      limited = true;
      limit_status = MilpStatus::NodeLimit;
      break;
    }
    if (opt.time_limit > 0 && elapsed() > opt.time_limit) {
      limited = true;
      limit_status = std::isfinite(incumbent) ? MilpStatus::FeasibleGap : MilpStatus::NodeLimit;
      break;
    }
    long id;
    if (!dive.empty()) {
      id = dive.back();
      dive.pop_back();
    } else {
      id = open.top().second;
      open.pop();
      if (nodes[id].bound >= cutoff()) continue;  // stale: pruned by newer incumbent
    }
    process(id);
    if (std::isfinite(incumbent)) {
      double b = frontier_bound();
      if ((incumbent - b) / std::max(1.0, std::abs(incumbent)) <= opt.gap_tol) break;
    }
  }

  res.seconds = elapsed();
  bool exhausted = dive.empty() && open.empty();
  if (std::isfinite(incumbent)) {
    res.x = inc_x;
    res.objective = incumbent;
    res.bound = exhausted ? incumbent : std::max(res.bound, frontier_bound());
    res.status = limited ? limit_status : MilpStatus::Optimal;
  } else {
    res.bound = exhausted ? inf : frontier_bound();
    res.status = limited ? limit_status : MilpStatus::Infeasible;
  }
  if (res.search_log.empty()) res.search_log.push_back({res.bound, incumbent});
  return res;
}

}  // namespace mtlplan
