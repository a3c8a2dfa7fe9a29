#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "converged/rational.hpp"

namespace converged::ilp {

using VarId = std::size_t;

enum class VarKind { Binary, Integer };

// Branching hint. Period-candidate selectors and disjunction selectors are
// tried at 1 first; every other variable at its lower bound first.
enum class VarRole { Plain, PeriodChoice, Selector };

struct Variable {
  std::string name;
  VarKind kind = VarKind::Integer;
  std::int64_t lb = 0;
  std::int64_t ub = 0;
  VarRole role = VarRole::Plain;
};

struct Term {
  VarId var = 0;
  std::int64_t coef = 0;
};

enum class Sense { Le, Ge, Eq };

inline std::string_view to_string(Sense s) {
  switch (s) {
    case Sense::Le: return "<=";
    case Sense::Ge: return ">=";
    case Sense::Eq: return "=";
  }
  return "?";
}

// sum(terms) <sense> rhs, integer data throughout.
struct Constraint {
  std::string tag;
  std::vector<Term> terms;
  Sense sense = Sense::Le;
  std::int64_t rhs = 0;

  std::string_view family() const {
    const auto colon = tag.find(':');
    return std::string_view(tag).substr(0, colon);
  }
};

struct ObjectiveTerm {
  VarId var = 0;
  Rational coef;
};

// Affine integer expression used while assembling constraints.
struct Expr {
  std::vector<Term> terms;
  std::int64_t constant = 0;

  Expr() = default;
  Expr(std::int64_t c) : constant(c) {}  // NOLINT
  static Expr var(VarId v, std::int64_t coef = 1) {
    Expr e;
    e.terms.push_back({v, coef});
    return e;
  }

  Expr& add(VarId v, std::int64_t coef) {
    if (coef != 0) terms.push_back({v, coef});
    return *this;
  }
  Expr& operator+=(const Expr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return *this;
  }
  Expr& operator-=(const Expr& o) {
    for (const Term& t : o.terms) terms.push_back({t.var, -t.coef});
    constant -= o.constant;
    return *this;
  }
  Expr& operator*=(std::int64_t k) {
    for (Term& t : terms) t.coef *= k;
    constant *= k;
    return *this;
  }
  friend Expr operator+(Expr a, const Expr& b) { return a += b; }
  friend Expr operator-(Expr a, const Expr& b) { return a -= b; }
  friend Expr operator*(std::int64_t k, Expr a) { return a *= k; }
};

class ModelError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IlpModel {
 public:
  VarId add_binary(std::string name, VarRole role = VarRole::Plain) {
    return add_variable({std::move(name), VarKind::Binary, 0, 1, role});
  }
  VarId add_integer(std::string name, std::int64_t lb, std::int64_t ub) {
    return add_variable({std::move(name), VarKind::Integer, lb, ub, VarRole::Plain});
  }

  VarId add_variable(Variable v) {
    if (v.lb > v.ub) throw ModelError("empty domain for variable '" + v.name + "'");
    if (!names_.emplace(v.name, vars_.size()).second) {
      throw ModelError("duplicate variable name '" + v.name + "'");
    }
    vars_.push_back(std::move(v));
    return vars_.size() - 1;
  }

  // Adds lhs <sense> rhs. Like terms are merged and constants moved right.
  void add_constraint(std::string tag, const Expr& lhs, Sense sense, const Expr& rhs) {
    Expr diff = lhs - rhs;
    std::map<VarId, std::int64_t> merged;
    for (const Term& t : diff.terms) {
      if (t.var >= vars_.size()) throw ModelError("constraint '" + tag + "' uses undeclared variable");
      merged[t.var] += t.coef;
    }
    Constraint c;
    c.tag = std::move(tag);
    c.sense = sense;
    c.rhs = -diff.constant;
    for (const auto& [v, k] : merged) {
      if (k != 0) c.terms.push_back({v, k});
    }
    cons_.push_back(std::move(c));
  }

  void add_objective(VarId v, const Rational& coef) {
    if (v >= vars_.size()) throw ModelError("objective uses undeclared variable");
    if (coef.is_zero()) return;
    for (ObjectiveTerm& t : obj_) {
      if (t.var == v) {
        t.coef += coef;
        return;
      }
    }
    obj_.push_back({v, coef});
  }

  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return cons_; }
  const std::vector<ObjectiveTerm>& objective() const { return obj_; }
  const Variable& var(VarId v) const { return vars_.at(v); }
  std::size_t num_vars() const { return vars_.size(); }

  std::optional<VarId> find(std::string_view name) const {
    auto it = names_.find(std::string(name));
    if (it == names_.end()) return std::nullopt;
    return it->second;
  }
  VarId at(std::string_view name) const {
    if (auto v = find(name)) return *v;
    throw ModelError("no variable named '" + std::string(name) + "'");
  }

  bool has_family(std::string_view family) const {
    return std::any_of(cons_.begin(), cons_.end(), [&](const Constraint& c) { return c.family() == family; });
  }
  std::size_t count_family(std::string_view family) const {
    return static_cast<std::size_t>(
        std::count_if(cons_.begin(), cons_.end(), [&](const Constraint& c) { return c.family() == family; }));
  }

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> cons_;
  std::vector<ObjectiveTerm> obj_;
  std::map<std::string, VarId> names_;
};

using Assignment = std::vector<std::int64_t>;

inline __int128 activity(const Constraint& c, const Assignment& a) {
  __int128 s = 0;
  for (const Term& t : c.terms) s += static_cast<__int128>(t.coef) * a.at(t.var);
  return s;
}

inline bool satisfied(const Constraint& c, const Assignment& a) {
  const __int128 act = activity(c, a);
  switch (c.sense) {
    case Sense::Le: return act <= c.rhs;
    case Sense::Ge: return act >= c.rhs;
    case Sense::Eq: return act == c.rhs;
  }
  return false;
}

inline Rational objective_value(const IlpModel& m, const Assignment& a) {
  Rational v;
  for (const ObjectiveTerm& t : m.objective()) v += t.coef * Rational(a.at(t.var));
  return v;
}

}  // namespace converged::ilp
