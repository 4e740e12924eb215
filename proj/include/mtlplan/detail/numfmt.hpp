// mtlplan/detail/numfmt.hpp -- deterministic numeric formatting helpers
#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace mtlplan::detail {

// Shortest %g string that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  std::string s(buf);
  if (s == "-0") s = "0";
  return s;
}

// Fixed-point with given decimals, trailing zeros kept (CSV/SVG output).
inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  std::string s(buf);
  if (s == "-0" || s.substr(0, 3) == "-0.") {
    bool all_zero = true;
    for (char c : s)
      if (c != '-' && c != '0' && c != '.') { all_zero = false; break; }
    if (all_zero) s.erase(0, 1);
  }
  return s;
}

}  // namespace mtlplan::detail
