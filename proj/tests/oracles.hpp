// independent reference implementations the library is tested against;
// deliberately written with different algorithms than the library code
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mtlplan/milp_model.hpp"

namespace oracles {

// Point-in-polygon by crossing number (ray cast along +x), no halfspaces.
// Returns nullopt for points too close to the boundary to call.
inline std::optional<bool> crossing_number_contains(const std::vector<Eigen::Vector2d>& poly,
                                                    const Eigen::Vector2d& p,
                                                    double boundary_eps = 1e-9) {
  std::size_t n = poly.size();
  // boundary proximity check against every edge segment
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector2d a = poly[i], b = poly[(i + 1) % n];
    Eigen::Vector2d d = b - a;
    double len2 = d.squaredNorm();
    double s = len2 > 0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    if ((a + s * d - p).norm() < boundary_eps) return std::nullopt;
  }
  int crossings = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector2d a = poly[i], b = poly[(i + 1) % n];
    if ((a.y() > p.y()) == (b.y() > p.y())) continue;
    double x_at = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
    if (x_at > p.x()) ++crossings;
  }
  return (crossings % 2) == 1;
}

// Plain 20-term Taylor series for exp(M), no scaling, no squaring.
inline Eigen::MatrixXd series_expm_20(const Eigen::MatrixXd& M) {
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(M.rows(), M.cols());
  Eigen::MatrixXd term = result;
  for (int k = 1; k <= 20; ++k) {
    term = (term * M) / static_cast<double>(k);
    result += term;
  }
  return result;
}

// Linear-program optimum by brute-force vertex enumeration: every basic
// point from n active constraints (equality rows always active) is checked
// for feasibility. Needs finite bounds on every variable so the feasible
// set is a polytope; nullopt means infeasible. Intended for small models
// (vars <= 6, rows <= 6).
inline std::optional<double> vertex_lp_optimum(const mtlplan::MilpModel& model) {
  const int n = model.n_vars();
  struct HalfRow {
    Eigen::VectorXd a;
    double b;
  };
  std::vector<HalfRow> eqs, ineqs;
  auto dense_row = [&](const mtlplan::Row& r) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    for (const auto& t : r.terms) a[t.var] += t.coef;
    return a;
  };
  for (const auto& r : model.rows()) {
    Eigen::VectorXd a = dense_row(r);
    switch (r.sense) {
      case mtlplan::RowSense::LE: ineqs.push_back({a, r.rhs}); break;
      case mtlplan::RowSense::GE: ineqs.push_back({-a, -r.rhs}); break;
      case mtlplan::RowSense::EQ: eqs.push_back({a, r.rhs}); break;
    }
  }
  for (int j = 0; j < n; ++j) {
    const auto& v = model.vars()[j];
    if (std::isinf(v.lo) || std::isinf(v.hi))
      throw std::runtime_error("vertex oracle needs finite bounds");
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[j] = 1.0;
    ineqs.push_back({e, v.hi});
    ineqs.push_back({-e, -v.lo});
  }
  // every vertex makes >= n constraints tight with an invertible n-subset,
  // so trying all n-subsets of the combined system finds them all
  std::vector<HalfRow> pool = eqs;
  pool.insert(pool.end(), ineqs.begin(), ineqs.end());

  std::optional<double> best;
  std::vector<int> pick(n);
  auto try_active = [&]() {
    Eigen::MatrixXd A(n, n);
    Eigen::VectorXd b(n);
    for (int r = 0; r < n; ++r) {
      A.row(r) = pool[pick[r]].a.transpose();
      b[r] = pool[pick[r]].b;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) return;
    Eigen::VectorXd x = lu.solve(b);
    for (const auto& e : eqs)
      if (std::abs(e.a.dot(x) - e.b) > 1e-7 * (1.0 + std::abs(e.b))) return;
    for (const auto& h : ineqs)
      if (h.a.dot(x) > h.b + 1e-7 * (1.0 + std::abs(h.b))) return;
    double obj = model.objective_value(x);
    if (!best || obj < *best) best = obj;
  };
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      try_active();
      return;
    }
    for (int k = start; k < static_cast<int>(pool.size()); ++k) {
      pick[depth] = k;
      rec(k + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

// MILP optimum by exhaustive enumeration of every binary assignment, with
// the continuous remainder handled by the vertex oracle. Usable up to a
// dozen binaries and a handful of continuous variables.
inline std::optional<double> enumerate_milp_optimum(const mtlplan::MilpModel& model) {
  std::vector<int> bins, cont;
  for (int j = 0; j < model.n_vars(); ++j) {
    if (model.vars()[j].kind == mtlplan::VarKind::Binary)
      bins.push_back(j);
    else
      cont.push_back(j);
  }
  if (bins.size() > 14) throw std::runtime_error("enumeration oracle: too many binaries");

  std::vector<double> obj_coef(model.n_vars(), 0.0);
  for (const auto& t : model.objective()) obj_coef[t.var] = t.coef;

  std::optional<double> best;
  for (unsigned long mask = 0; mask < (1ul << bins.size()); ++mask) {
    std::vector<double> bval(bins.size());
    bool in_bounds = true;
    double const_obj = 0.0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
      bval[i] = (mask >> i) & 1ul ? 1.0 : 0.0;
      const auto& v = model.vars()[bins[i]];
      if (bval[i] < v.lo - 1e-9 || bval[i] > v.hi + 1e-9) in_bounds = false;
      const_obj += obj_coef[bins[i]] * bval[i];
    }
    if (!in_bounds) continue;

    if (cont.empty()) {
      bool ok = true;
      for (const auto& r : model.rows()) {
        double act = 0.0;
        for (const auto& t : r.terms) {
          // every variable is binary here
          for (std::size_t i = 0; i < bins.size(); ++i)
            if (bins[i] == t.var) act += t.coef * bval[i];
        }
        if (r.sense == mtlplan::RowSense::LE && act > r.rhs + 1e-7) ok = false;
        if (r.sense == mtlplan::RowSense::GE && act < r.rhs - 1e-7) ok = false;
        if (r.sense == mtlplan::RowSense::EQ && std::abs(act - r.rhs) > 1e-7) ok = false;
        if (!ok) break;
      }
      if (ok && (!best || const_obj < *best)) best = const_obj;
      continue;
    }

    // substitute the assignment and solve the continuous remainder
    mtlplan::MilpModel sub;
    sub.name = "SUB";
    std::vector<int> remap(model.n_vars(), -1);
    for (int j : cont) {
      const auto& v = model.vars()[j];
      remap[j] = sub.add_variable(v.name, mtlplan::VarKind::Continuous, v.lo, v.hi);
    }
    bool consistent = true;
    int row_id = 0;
    for (const auto& r : model.rows()) {
      double shift = 0.0;
      std::vector<mtlplan::LinTerm> terms;
      for (const auto& t : r.terms) {
        if (remap[t.var] >= 0) {
          terms.push_back({remap[t.var], t.coef});
        } else {
          for (std::size_t i = 0; i < bins.size(); ++i)
            if (bins[i] == t.var) shift += t.coef * bval[i];
        }
      }
      double rhs = r.rhs - shift;
      if (terms.empty()) {
        bool ok = true;
        if (r.sense == mtlplan::RowSense::LE && 0.0 > rhs + 1e-7) ok = false;
        if (r.sense == mtlplan::RowSense::GE && 0.0 < rhs - 1e-7) ok = false;
        if (r.sense == mtlplan::RowSense::EQ && std::abs(rhs) > 1e-7) ok = false;
        if (!ok) {
          consistent = false;
          break;
        }
        continue;
      }
      sub.add_row("r" + std::to_string(row_id++), std::move(terms), r.sense, rhs);
    }
    if (!consistent) continue;
    std::vector<mtlplan::LinTerm> sub_obj;
    for (int j : cont)
      if (obj_coef[j] != 0.0) sub_obj.push_back({remap[j], obj_coef[j]});
    sub.set_objective(std::move(sub_obj));
    auto sub_best = vertex_lp_optimum(sub);
    if (sub_best && (!best || const_obj + *sub_best < *best)) best = const_obj + *sub_best;
  }
  return best;
}

}  // namespace oracles
