#pragma once

#include <cstdio>
#include <set>
#include <sstream>
#include <string>

#include "converged/ilp_model.hpp"

namespace converged::ilp {

namespace detail {

inline std::string lp_name(std::string_view raw) {
  std::string s;
  for (char ch : raw) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '_';
    s.push_back(ok ? ch : '_');
  }
  if (s.empty() || (s[0] >= '0' && s[0] <= '9')) s.insert(s.begin(), '_');
  if (s.size() > 255) s.resize(255);
  return s;
}

inline std::string lp_number(const Rational& r) {
  if (r.den() == 1) return std::to_string(r.num());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", r.to_double());
  return buf;
}

inline void lp_terms(std::ostringstream& os, const std::vector<std::pair<std::string, std::string>>& terms) {
  bool first = true;
  for (const auto& [coef, name] : terms) {
    const bool neg = coef[0] == '-';
    const std::string mag = neg ? coef.substr(1) : coef;
    if (first) {
      os << (neg ? " -" : " ");
    } else {
      os << (neg ? " - " : " + ");
    }
    if (mag != "1") os << mag << ' ';
    os << name;
    first = false;
  }
}

}  // namespace detail

// CPLEX-style LP text. Row names are "c_" plus the sanitized tag, made unique
// with a numeric suffix when two tags sanitize to the same name.
inline std::string export_lp(const IlpModel& m) {
  using detail::lp_name;
  std::vector<std::string> names;
  for (const Variable& v : m.variables()) names.push_back(lp_name(v.name));

  std::ostringstream os;
  os << "\\ converged-sched model\n";
  os << "Minimize\n obj:";
  if (m.objective().empty()) {
    os << " 0\n";
  } else {
    std::vector<std::pair<std::string, std::string>> terms;
    for (const ObjectiveTerm& t : m.objective()) terms.push_back({detail::lp_number(t.coef), names[t.var]});
    detail::lp_terms(os, terms);
    os << '\n';
  }
  os << "Subject To\n";
  std::set<std::string> used;
  for (const Constraint& c : m.constraints()) {
    std::string row = lp_name("c_" + c.tag);
    if (!used.insert(row).second) {
      for (int k = 2;; ++k) {
        std::string alt = row.substr(0, 240) + "_" + std::to_string(k);
        if (used.insert(alt).second) {
          row = alt;
          break;
        }
      }
    }
    os << ' ' << row << ':';
    if (c.terms.empty()) {
      os << " 0 " << names.at(0) << ' ';
    } else {
      std::vector<std::pair<std::string, std::string>> terms;
      for (const Term& t : c.terms) terms.push_back({std::to_string(t.coef), names[t.var]});
      detail::lp_terms(os, terms);
      os << ' ';
    }
    os << to_string(c.sense) << ' ' << c.rhs << '\n';
  }
  os << "Bounds\n";
  for (VarId v = 0; v < m.num_vars(); ++v) {
    const Variable& var = m.var(v);
    if (var.kind == VarKind::Binary) continue;
    os << ' ' << var.lb << " <= " << names[v] << " <= " << var.ub << '\n';
  }
  bool any_int = false, any_bin = false;
  for (const Variable& v : m.variables()) {
    any_int = any_int || v.kind == VarKind::Integer;
    any_bin = any_bin || v.kind == VarKind::Binary;
  }
  if (any_int) {
    os << "Generals\n";
    for (VarId v = 0; v < m.num_vars(); ++v) {
      if (m.var(v).kind == VarKind::Integer) os << ' ' << names[v] << '\n';
    }
  }
  if (any_bin) {
    os << "Binaries\n";
    for (VarId v = 0; v < m.num_vars(); ++v) {
      if (m.var(v).kind == VarKind::Binary) os << ' ' << names[v] << '\n';
    }
  }
  os << "End\n";
  return os.str();
}

}  // namespace converged::ilp
