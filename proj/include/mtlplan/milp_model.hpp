// mtlplan/milp_model.hpp -- mixed-integer linear model container
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtlplan/detail/numfmt.hpp"

namespace mtlplan {

class MilpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class VarKind { Continuous, Binary };
enum class RowSense { LE, EQ, GE };

struct Variable {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lo = 0.0;
  double hi = 0.0;
};

struct LinTerm {
  int var = -1;
  double coef = 0.0;
};

struct Row {
  std::string name;
  std::vector<LinTerm> terms;  // sorted by var id, no duplicates, no zeros
  RowSense sense = RowSense::LE;
  double rhs = 0.0;
};

inline const char* to_string(RowSense s) {
  switch (s) {
    case RowSense::LE: return "<=";
    case RowSense::EQ: return "=";
    case RowSense::GE: return ">=";
  }
  return "?";
}

// Minimization model over continuous and binary variables.
class MilpModel {
 public:
  std::string name = "MODEL";

  int add_variable(const std::string& vname, VarKind kind, double lo, double hi) {
    check_name(vname);
    if (var_index_.count(vname)) throw MilpError("duplicate variable name '" + vname + "'");
    if (std::isnan(lo) || std::isnan(hi) || lo > hi)
      throw MilpError("variable '" + vname + "' has invalid bounds [" +
                      detail::format_double(lo) + ", " + detail::format_double(hi) + "]");
    if (kind == VarKind::Binary && (lo < 0.0 || hi > 1.0))
      throw MilpError("binary variable '" + vname + "' must have bounds within [0, 1]");
    vars_.push_back({vname, kind, lo, hi});
    var_index_[vname] = static_cast<int>(vars_.size()) - 1;
    return static_cast<int>(vars_.size()) - 1;
  }

  int add_row(const std::string& rname, std::vector<LinTerm> terms, RowSense sense, double rhs) {
    check_name(rname);
    if (row_index_.count(rname)) throw MilpError("duplicate row name '" + rname + "'");
    rows_.push_back({rname, normalize_terms(std::move(terms)), sense, rhs});
    row_index_[rname] = static_cast<int>(rows_.size()) - 1;
    return static_cast<int>(rows_.size()) - 1;
  }

  void add_objective_term(int var, double coef) {
    check_var(var);
    objective_.push_back({var, coef});
    objective_dirty_ = true;
  }

  void set_objective(std::vector<LinTerm> terms) {
    objective_ = normalize_terms(std::move(terms));
    objective_dirty_ = false;
  }

  const std::vector<Variable>& vars() const { return vars_; }
  const std::vector<Row>& rows() const { return rows_; }
  const std::vector<LinTerm>& objective() const {
    if (objective_dirty_) {
      objective_ = normalize_terms(std::move(objective_));
      objective_dirty_ = false;
    }
    return objective_;
  }

  Variable& var(int id) { check_var(id); return vars_[id]; }
  const Variable& var(int id) const { check_var(id); return vars_[id]; }

  std::optional<int> find_variable(const std::string& vname) const {
    auto it = var_index_.find(vname);
    if (it == var_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<int> find_row(const std::string& rname) const {
    auto it = row_index_.find(rname);
    if (it == row_index_.end()) return std::nullopt;
    return it->second;
  }

  int n_vars() const { return static_cast<int>(vars_.size()); }
  int n_rows() const { return static_cast<int>(rows_.size()); }
  int n_binaries() const {
    int n = 0;
    for (const auto& v : vars_)
      if (v.kind == VarKind::Binary) ++n;
    return n;
  }

  double objective_value(const Eigen::VectorXd& x) const {
    double obj = 0.0;
    for (const auto& t : objective()) obj += t.coef * x[t.var];
    return obj;
  }

  double row_activity(const Row& r, const Eigen::VectorXd& x) const {
    double a = 0.0;
    for (const auto& t : r.terms) a += t.coef * x[t.var];
    return a;
  }

  // Human-readable descriptions of every violated bound, integrality
  // requirement, and row at the given point; empty means feasible.
  std::vector<std::string> feasibility_report(const Eigen::VectorXd& x, double tol) const {
    std::vector<std::string> out;
    if (x.size() != n_vars()) {
      out.push_back("point has " + std::to_string(x.size()) + " values for " +
                    std::to_string(n_vars()) + " variables");
      return out;
    }
    for (int j = 0; j < n_vars(); ++j) {
      const auto& v = vars_[j];
      if (x[j] < v.lo - tol || x[j] > v.hi + tol)
        out.push_back("variable " + v.name + " = " + detail::format_double(x[j]) +
                      " outside [" + detail::format_double(v.lo) + ", " +
                      detail::format_double(v.hi) + "]");
      if (v.kind == VarKind::Binary && std::abs(x[j] - std::round(x[j])) > tol)
        out.push_back("binary variable " + v.name + " = " + detail::format_double(x[j]) +
                      " is not integral");
    }
    for (const auto& r : rows_) {
      double a = row_activity(r, x);
      bool bad = (r.sense == RowSense::LE && a > r.rhs + tol) ||
                 (r.sense == RowSense::GE && a < r.rhs - tol) ||
                 (r.sense == RowSense::EQ && std::abs(a - r.rhs) > tol);
      if (bad)
        out.push_back("row " + r.name + ": " + detail::format_double(a) + " " +
                      to_string(r.sense) + " " + detail::format_double(r.rhs) + " violated");
    }
    return out;
  }

  bool is_feasible(const Eigen::VectorXd& x, double tol) const {
    if (x.size() != n_vars()) return false;
    for (int j = 0; j < n_vars(); ++j) {
      const auto& v = vars_[j];
      if (x[j] < v.lo - tol || x[j] > v.hi + tol) return false;
      if (v.kind == VarKind::Binary && std::abs(x[j] - std::round(x[j])) > tol) return false;
    }
    for (const auto& r : rows_) {
      double a = row_activity(r, x);
      if (r.sense == RowSense::LE && a > r.rhs + tol) return false;
      if (r.sense == RowSense::GE && a < r.rhs - tol) return false;
      if (r.sense == RowSense::EQ && std::abs(a - r.rhs) > tol) return false;
    }
    return true;
  }

 private:
  void check_var(int id) const {
    if (id < 0 || id >= n_vars())
      throw MilpError("variable id " + std::to_string(id) + " out of range");
  }

  static void check_name(const std::string& n) {
    if (n.empty() || n.size() > 255) throw MilpError("name must be 1..255 characters");
    for (char c : n)
      if (std::isspace(static_cast<unsigned char>(c)) || c == '\'' || c == '"')
        throw MilpError("name '" + n + "' contains whitespace or quotes");
  }

  std::vector<LinTerm> normalize_terms(std::vector<LinTerm> terms) const {
    for (const auto& t : terms) check_var(t.var);
    std::sort(terms.begin(), terms.end(),
              [](const LinTerm& a, const LinTerm& b) { return a.var < b.var; });
    std::vector<LinTerm> out;
    out.reserve(terms.size());
    for (const auto& t : terms) {
      if (!out.empty() && out.back().var == t.var)
        out.back().coef += t.coef;
      else
        out.push_back(t);
    }
    std::erase_if(out, [](const LinTerm& t) { return t.coef == 0.0; });
    return out;
  }

  std::vector<Variable> vars_;
  std::vector<Row> rows_;
  mutable std::vector<LinTerm> objective_;
  mutable bool objective_dirty_ = false;
  std::unordered_map<std::string, int> var_index_;
  std::unordered_map<std::string, int> row_index_;
};

}  // namespace mtlplan
