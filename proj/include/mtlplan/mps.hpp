// mtlplan/mps.hpp -- free-format MPS export/import plus solution files
#pragma once

#include <cstdlib>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mtlplan/detail/numfmt.hpp"
#include "mtlplan/milp_model.hpp"

namespace mtlplan {

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string f;
  while (ss >> f) out.push_back(f);
  return out;
}

inline double parse_mps_number(const std::string& f, int lineno) {
  const char* s = f.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (end == s || *end != '\0')
    throw MilpError("MPS line " + std::to_string(lineno) + ": bad number '" + f + "'");
  return v;
}

}  // namespace detail

// Canonical free-format MPS writer.  The layout is deterministic: exporting,
// importing, and exporting again yields byte-identical text.
inline std::string export_mps(const MilpModel& model) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (model.find_row("COST"))
    throw MilpError("cannot export: row name 'COST' is reserved for the objective");
  std::ostringstream os;
  os << "NAME " << (model.name.empty() ? "MODEL" : model.name) << "\n";

  os << "ROWS\n";
  os << " N COST\n";
  for (const auto& r : model.rows()) {
    char s = r.sense == RowSense::LE ? 'L' : (r.sense == RowSense::GE ? 'G' : 'E');
    os << " " << s << " " << r.name << "\n";
  }

  // column-major view of the row terms, in (variable, row) order
  std::vector<std::vector<std::pair<int, double>>> cols(model.n_vars());
  for (int i = 0; i < model.n_rows(); ++i)
    for (const auto& t : model.rows()[i].terms) cols[t.var].push_back({i, t.coef});
  std::vector<double> obj(model.n_vars(), 0.0);
  for (const auto& t : model.objective()) obj[t.var] = t.coef;

  os << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (int j = 0; j < model.n_vars(); ++j) {
    const auto& v = model.vars()[j];
    bool want_int = v.kind == VarKind::Binary;
    if (want_int != in_int) {
      os << " M" << ++marker << " 'MARKER' " << (want_int ? "'INTORG'" : "'INTEND'") << "\n";
      in_int = want_int;
    }
    // a zero COST entry keeps otherwise-empty columns visible to readers
    if (obj[j] != 0.0 || cols[j].empty())
      os << " " << v.name << " COST " << detail::format_double(obj[j]) << "\n";
    for (const auto& [row, coef] : cols[j])
      os << " " << v.name << " " << model.rows()[row].name << " "
         << detail::format_double(coef) << "\n";
  }
  if (in_int) os << " M" << ++marker << " 'MARKER' 'INTEND'\n";

  os << "RHS\n";
  for (const auto& r : model.rows())
    if (r.rhs != 0.0) os << " RHS " << r.name << " " << detail::format_double(r.rhs) << "\n";

  os << "BOUNDS\n";
  for (const auto& v : model.vars()) {
    if (v.lo == -inf && v.hi == inf) {
      os << " FR BND " << v.name << "\n";
      continue;
    }
    if (v.lo == -inf)
      os << " MI BND " << v.name << "\n";
    else
      os << " LO BND " << v.name << " " << detail::format_double(v.lo) << "\n";
    if (v.hi != inf) os << " UP BND " << v.name << " " << detail::format_double(v.hi) << "\n";
  }

  os << "ENDATA\n";
  return os.str();
}

// Reads free-format MPS text. Accepts the canonical layout written by
// export_mps plus the common BV/FX/MI/PL bound types and multi-pair
// COLUMNS/RHS lines, so externally produced files load too.
inline MilpModel import_mps(const std::string& text) {
  constexpr double inf = std::numeric_limits<double>::infinity();

  enum class Section { None, Rows, Columns, Rhs, Ranges, Bounds, Done };
  struct VarDraft {
    std::string name;
    bool integral = false;
    double lo = 0.0, hi = inf;
    bool lo_set = false, hi_set = false;
    double obj = 0.0;
  };
  struct RowDraft {
    std::string name;
    RowSense sense = RowSense::LE;
    std::vector<std::pair<int, double>> terms;  // (var draft id, coef)
    double rhs = 0.0;
  };

  std::string model_name = "MODEL";
  std::string obj_row_name;
  std::vector<VarDraft> vars;
  std::vector<RowDraft> rows;
  std::map<std::string, int> var_of, row_of;

  auto var_id = [&](const std::string& n, bool integral, int lineno) {
    auto it = var_of.find(n);
    if (it != var_of.end()) return it->second;
    (void)lineno;
    VarDraft d;
    d.name = n;
    d.integral = integral;
    if (integral) d.hi = 1.0;  // MPS default integer bound
    vars.push_back(d);
    var_of[n] = static_cast<int>(vars.size()) - 1;
    return static_cast<int>(vars.size()) - 1;
  };

  Section sec = Section::None;
  bool in_int = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = line;
    size_t first = trimmed.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (trimmed[first] == '*') continue;  // comment
    bool header = first == 0;
    auto f = detail::split_fields(line);
    if (f.empty()) continue;

    if (header) {
      const std::string& h = f[0];
      if (h == "NAME") {
        if (f.size() >= 2) model_name = f[1];
      } else if (h == "ROWS") {
        sec = Section::Rows;
      } else if (h == "COLUMNS") {
        sec = Section::Columns;
      } else if (h == "RHS") {
        sec = Section::Rhs;
      } else if (h == "RANGES") {
        sec = Section::Ranges;
      } else if (h == "BOUNDS") {
        sec = Section::Bounds;
      } else if (h == "ENDATA") {
        sec = Section::Done;
        break;
      } else {
        throw MilpError("MPS line " + std::to_string(lineno) + ": unknown section '" + h + "'");
      }
      continue;
    }

    switch (sec) {
      case Section::Rows: {
        if (f.size() != 2)
          throw MilpError("MPS line " + std::to_string(lineno) + ": expected '<type> <row>'");
        const std::string& t = f[0];
        if (t == "N") {
          if (obj_row_name.empty())
            obj_row_name = f[1];
          else
            throw MilpError("MPS line " + std::to_string(lineno) + ": multiple objective rows");
        } else if (t == "L" || t == "G" || t == "E") {
          if (row_of.count(f[1]))
            throw MilpError("MPS line " + std::to_string(lineno) + ": duplicate row '" + f[1] + "'");
          RowDraft r;
          r.name = f[1];
          r.sense = t == "L" ? RowSense::LE : (t == "G" ? RowSense::GE : RowSense::EQ);
          rows.push_back(r);
          row_of[f[1]] = static_cast<int>(rows.size()) - 1;
        } else {
          throw MilpError("MPS line " + std::to_string(lineno) + ": unknown row type '" + t + "'");
        }
        break;
      }
      case Section::Columns: {
        if (f.size() >= 3 && f[1] == "'MARKER'") {
          if (f[2] == "'INTORG'")
            in_int = true;
          else if (f[2] == "'INTEND'")
            in_int = false;
          else
            throw MilpError("MPS line " + std::to_string(lineno) + ": bad marker '" + f[2] + "'");
          break;
        }
        if (f.size() < 3 || f.size() % 2 == 0)
          throw MilpError("MPS line " + std::to_string(lineno) +
                          ": expected '<var> (<row> <value>)+'");
        int v = var_id(f[0], in_int, lineno);
        for (size_t i = 1; i + 1 < f.size(); i += 2) {
          double coef = detail::parse_mps_number(f[i + 1], lineno);
          if (f[i] == obj_row_name) {
            if (coef != 0.0) vars[v].obj += coef;
          } else {
            auto it = row_of.find(f[i]);
            if (it == row_of.end())
              throw MilpError("MPS line " + std::to_string(lineno) + ": unknown row '" + f[i] + "'");
            rows[it->second].terms.push_back({v, coef});
          }
        }
        break;
      }
      case Section::Rhs: {
        if (f.size() < 3 || f.size() % 2 == 0)
          throw MilpError("MPS line " + std::to_string(lineno) +
                          ": expected '<set> (<row> <value>)+'");
        for (size_t i = 1; i + 1 < f.size(); i += 2) {
          if (f[i] == obj_row_name) continue;  // objective offset ignored
          auto it = row_of.find(f[i]);
          if (it == row_of.end())
            throw MilpError("MPS line " + std::to_string(lineno) + ": unknown row '" + f[i] + "'");
          rows[it->second].rhs = detail::parse_mps_number(f[i + 1], lineno);
        }
        break;
      }
      case Section::Ranges:
        throw MilpError("MPS line " + std::to_string(lineno) + ": RANGES entries not supported");
      case Section::Bounds: {
        if (f.size() < 3)
          throw MilpError("MPS line " + std::to_string(lineno) +
                          ": expected '<type> <set> <var> [value]'");
        const std::string& t = f[0];
        auto it = var_of.find(f[2]);
        if (it == var_of.end())
          throw MilpError("MPS line " + std::to_string(lineno) + ": unknown variable '" + f[2] + "'");
        VarDraft& v = vars[it->second];
        auto value = [&]() {
          if (f.size() < 4)
            throw MilpError("MPS line " + std::to_string(lineno) + ": bound needs a value");
          return detail::parse_mps_number(f[3], lineno);
        };
        if (t == "LO") { v.lo = value(); v.lo_set = true; }
        else if (t == "UP") { v.hi = value(); v.hi_set = true; }
        else if (t == "FX") { v.lo = v.hi = value(); v.lo_set = v.hi_set = true; }
        else if (t == "FR") { v.lo = -inf; v.hi = inf; v.lo_set = v.hi_set = true; }
        else if (t == "MI") { v.lo = -inf; v.lo_set = true; }
        else if (t == "PL") { v.hi = inf; v.hi_set = true; }
        else if (t == "BV") { v.integral = true; v.lo = 0.0; v.hi = 1.0; v.lo_set = v.hi_set = true; }
        else
          throw MilpError("MPS line " + std::to_string(lineno) + ": unknown bound type '" + t + "'");
        break;
      }
      case Section::None:
        throw MilpError("MPS line " + std::to_string(lineno) + ": data before any section");
      case Section::Done:
        break;
    }
  }
  if (sec != Section::Done) throw MilpError("MPS text has no ENDATA");
  if (obj_row_name.empty()) throw MilpError("MPS text declares no objective (N) row");

  MilpModel model;
  model.name = model_name;
  for (const auto& v : vars)
    model.add_variable(v.name, v.integral ? VarKind::Binary : VarKind::Continuous, v.lo, v.hi);
  for (const auto& r : rows) {
    std::vector<LinTerm> terms;
    terms.reserve(r.terms.size());
    for (const auto& [var, coef] : r.terms) terms.push_back({var, coef});
    model.add_row(r.name, std::move(terms), r.sense, r.rhs);
  }
  std::vector<LinTerm> obj;
  for (int j = 0; j < static_cast<int>(vars.size()); ++j)
    if (vars[j].obj != 0.0) obj.push_back({j, vars[j].obj});
  model.set_objective(std::move(obj));
  return model;
}

// One "name value" pair per line; '#' starts a comment.
inline std::string export_solution(const MilpModel& model, const Eigen::VectorXd& x) {
  std::ostringstream os;
  for (int j = 0; j < model.n_vars(); ++j)
    os << model.vars()[j].name << " " << detail::format_double(x[j]) << "\n";
  return os.str();
}

// Parses a solution file and checks it against the model; the error for an
// infeasible point names the violated row or bound.
inline Eigen::VectorXd import_solution(const MilpModel& model, const std::string& text,
                                       double tol = 1e-6) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(model.n_vars());
  std::vector<char> seen(model.n_vars(), 0);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto f = detail::split_fields(line);
    if (f.empty()) continue;
    if (f.size() != 2)
      throw MilpError("solution line " + std::to_string(lineno) + ": expected '<name> <value>'");
    auto id = model.find_variable(f[0]);
    if (!id) throw MilpError("solution line " + std::to_string(lineno) +
                             ": unknown variable '" + f[0] + "'");
    x[*id] = detail::parse_mps_number(f[1], lineno);
    seen[*id] = 1;
  }
  for (int j = 0; j < model.n_vars(); ++j)
    if (!seen[j])
      throw MilpError("solution file missing a value for variable '" +
                      model.vars()[j].name + "'");
  auto report = model.feasibility_report(x, tol);
  if (!report.empty()) throw MilpError("solution is infeasible: " + report.front());
  return x;
}

}  // namespace mtlplan
