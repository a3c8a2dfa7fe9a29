#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "converged/ilp_model.hpp"

namespace converged::ilp {

enum class SolveStatus { Optimal, Infeasible, TimedOut };

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::TimedOut: return "timeout";
  }
  return "?";
}

struct SolveLimits {
  std::int64_t max_nodes = 50'000'000;
  std::int64_t time_limit_ms = 60'000;
};

struct Solution {
  SolveStatus status = SolveStatus::Infeasible;
  std::optional<Assignment> assignment;  // always set when Optimal
  Rational objective;
  std::int64_t nodes = 0;
  double wall_ms = 0;
  std::string infeasible_family;  // first family proven empty
  std::string infeasible_tag;
};

namespace detail {

struct Row {
  std::vector<Term> terms;
  __int128 rhs = 0;  // sum(terms) <= rhs
  std::size_t origin = 0;
};

class BranchAndBound {
 public:
  BranchAndBound(const IlpModel& m, const SolveLimits& lim) : m_(m), lim_(lim) {
    const std::size_t n = m.num_vars();
    lb_.resize(n);
    ub_.resize(n);
    for (VarId v = 0; v < n; ++v) {
      lb_[v] = m.var(v).lb;
      ub_[v] = m.var(v).ub;
    }
    watch_.resize(n);
    for (std::size_t ci = 0; ci < m.constraints().size(); ++ci) {
      const Constraint& c = m.constraints()[ci];
      if (c.sense != Sense::Ge) add_row(c.terms, c.rhs, ci, false);
      if (c.sense != Sense::Le) add_row(c.terms, c.rhs, ci, true);
    }
    // Objective scaled to integers over the common denominator.
    std::int64_t den = 1;
    for (const ObjectiveTerm& t : m.objective()) den = std::lcm(den, t.coef.den());
    obj_den_ = den;
    obj_.assign(n, 0);
    for (const ObjectiveTerm& t : m.objective()) {
      obj_[t.var] = static_cast<std::int64_t>(static_cast<__int128>(t.coef.num()) * (den / t.coef.den()));
    }
    // Objective cutoff row, rhs tightened as incumbents appear.
    cutoff_row_ = rows_.size();
    Row cut;
    for (VarId v = 0; v < n; ++v) {
      if (obj_[v] != 0) cut.terms.push_back({v, obj_[v]});
    }
    cut.rhs = static_cast<__int128>(1) << 100;
    cut.origin = static_cast<std::size_t>(-1);
    for (const Term& t : cut.terms) watch_[t.var].push_back(cutoff_row_);
    rows_.push_back(std::move(cut));
    in_queue_.assign(rows_.size(), false);

    // Disjoint "exactly one of these binaries" rows tighten the objective
    // bound: only one member of each group can contribute.
    in_group_.assign(n, false);
    for (const Constraint& c : m.constraints()) {
      if (c.sense != Sense::Eq || c.rhs != 1 || c.terms.size() < 2) continue;
      bool ok = true, weighted = false;
      for (const Term& t : c.terms) {
        ok = ok && t.coef == 1 && m.var(t.var).kind == VarKind::Binary && !in_group_[t.var];
        weighted = weighted || obj_[t.var] != 0;
      }
      if (!ok || !weighted) continue;
      std::vector<VarId> g;
      for (const Term& t : c.terms) {
        in_group_[t.var] = true;
        g.push_back(t.var);
      }
      groups_.push_back(std::move(g));
    }

    for (VarId v = 0; v < n; ++v) {
      if (m.var(v).kind == VarKind::Binary) order_.push_back(v);
    }
    for (VarId v = 0; v < n; ++v) {
      if (m.var(v).kind == VarKind::Integer) order_.push_back(v);
    }
  }

  Solution run() {
    const auto t0 = std::chrono::steady_clock::now();
    start_ = t0;
    Solution sol;
    for (std::size_t r = 0; r < rows_.size(); ++r) enqueue(r);
    if (!propagate()) {
      sol.status = SolveStatus::Infeasible;
      set_conflict(sol);
      finish(sol, t0);
      return sol;
    }
    search(sol);
    if (best_) {
      sol.assignment = best_;
      sol.objective = objective_value(m_, *best_);
      sol.status = stopped_ ? SolveStatus::TimedOut : SolveStatus::Optimal;
    } else {
      sol.status = stopped_ ? SolveStatus::TimedOut : SolveStatus::Infeasible;
      if (!stopped_) set_conflict(sol);
    }
    finish(sol, t0);
    return sol;
  }

 private:
  struct Change {
    VarId var;
    std::int64_t lb, ub;
  };
  struct Frame {
    std::size_t trail_mark;
    VarId var;
    // Alternative bound still to try: var in [alt_lb, alt_ub].
    std::int64_t alt_lb, alt_ub;
    bool has_alt;
  };

  void add_row(const std::vector<Term>& terms, std::int64_t rhs, std::size_t origin, bool negate) {
    Row r;
    r.origin = origin;
    r.rhs = negate ? -static_cast<__int128>(rhs) : rhs;
    for (const Term& t : terms) r.terms.push_back({t.var, negate ? -t.coef : t.coef});
    const std::size_t idx = rows_.size();
    for (const Term& t : r.terms) watch_[t.var].push_back(idx);
    rows_.push_back(std::move(r));
  }

  void finish(Solution& sol, std::chrono::steady_clock::time_point t0) const {
    sol.nodes = nodes_;
    sol.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }

  void set_conflict(Solution& sol) const {
    if (first_conflict_ && *first_conflict_ < m_.constraints().size()) {
      const Constraint& c = m_.constraints()[*first_conflict_];
      sol.infeasible_family = std::string(c.family());
      sol.infeasible_tag = c.tag;
    }
  }

  void enqueue(std::size_t r) {
    if (!in_queue_[r]) {
      in_queue_[r] = true;
      queue_.push_back(r);
    }
  }

  bool set_bounds(VarId v, std::int64_t lo, std::int64_t hi) {
    if (lo <= lb_[v] && hi >= ub_[v]) return true;
    trail_.push_back({v, lb_[v], ub_[v]});
    lb_[v] = std::max(lb_[v], lo);
    ub_[v] = std::min(ub_[v], hi);
    if (lb_[v] > ub_[v]) return false;
    for (std::size_t r : watch_[v]) enqueue(r);
    return true;
  }

  static std::int64_t clamp64(__int128 v) {
    if (v > INT64_MAX) return INT64_MAX;
    if (v < INT64_MIN) return INT64_MIN;
    return static_cast<std::int64_t>(v);
  }
  static __int128 floor_div128(__int128 a, __int128 b) {
    __int128 q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
  }

  __int128 min_activity(const Row& r) const {
    __int128 s = 0;
    for (const Term& t : r.terms) s += static_cast<__int128>(t.coef) * (t.coef > 0 ? lb_[t.var] : ub_[t.var]);
    return s;
  }
  __int128 max_activity(const Row& r) const {
    __int128 s = 0;
    for (const Term& t : r.terms) s += static_cast<__int128>(t.coef) * (t.coef > 0 ? ub_[t.var] : lb_[t.var]);
    return s;
  }

  bool propagate() {
    bool ok = true;
    while (!queue_.empty()) {
      const std::size_t ri = queue_.back();
      queue_.pop_back();
      in_queue_[ri] = false;
      if (!ok) continue;
      const Row& r = rows_[ri];
      const __int128 minact = min_activity(r);
      if (minact > r.rhs) {
        note_conflict(ri);
        ok = false;
        continue;
      }
      for (const Term& t : r.terms) {
        const __int128 own = static_cast<__int128>(t.coef) * (t.coef > 0 ? lb_[t.var] : ub_[t.var]);
        const __int128 slack = r.rhs - (minact - own);
        bool fine;
        if (t.coef > 0) {
          fine = set_bounds(t.var, INT64_MIN, clamp64(floor_div128(slack, t.coef)));
        } else {
          fine = set_bounds(t.var, clamp64(-floor_div128(slack, -t.coef)), INT64_MAX);
        }
        if (!fine) {
          note_conflict(ri);
          ok = false;
          break;
        }
        // Tightening toward the row never moves its min activity, so the
        // remaining terms can use the same value.
      }
    }
    return ok;
  }

  void note_conflict(std::size_t ri) {
    if (!first_conflict_ && rows_[ri].origin < m_.constraints().size()) first_conflict_ = rows_[ri].origin;
  }

  void undo_to(std::size_t mark) {
    while (trail_.size() > mark) {
      const Change& c = trail_.back();
      lb_[c.var] = c.lb;
      ub_[c.var] = c.ub;
      trail_.pop_back();
    }
    for (std::size_t r : queue_) in_queue_[r] = false;
    queue_.clear();
  }

  __int128 objective_lower_bound() const {
    __int128 s = 0;
    for (VarId v = 0; v < obj_.size(); ++v) {
      if (obj_[v] != 0 && !in_group_[v]) s += static_cast<__int128>(obj_[v]) * (obj_[v] > 0 ? lb_[v] : ub_[v]);
    }
    for (const std::vector<VarId>& g : groups_) {
      std::optional<std::int64_t> best;
      for (VarId v : g) {
        if (lb_[v] == 1) {
          best = obj_[v];
          break;
        }
        if (ub_[v] == 1 && (!best || obj_[v] < *best)) best = obj_[v];
      }
      if (!best) return static_cast<__int128>(1) << 120;
      s += *best;
    }
    return s;
  }

  // A variable is irrelevant when every row it appears in holds for all
  // values still in the domains.
  bool irrelevant(VarId v) const {
    for (std::size_t ri : watch_[v]) {
      if (ri == cutoff_row_) continue;
      if (max_activity(rows_[ri]) > rows_[ri].rhs) return false;
    }
    return true;
  }

  std::int64_t preferred_value(VarId v) const {
    if (obj_[v] > 0) return lb_[v];
    if (obj_[v] < 0) return ub_[v];
    const Variable& var = m_.var(v);
    if (var.kind == VarKind::Binary && var.role != VarRole::Plain) return ub_[v];
    return lb_[v];
  }

  std::optional<VarId> next_var() {
    while (cursor_ < order_.size() && lb_[order_[cursor_]] == ub_[order_[cursor_]]) ++cursor_;
    if (cursor_ == order_.size()) return std::nullopt;
    return order_[cursor_];
  }

  bool out_of_budget() {
    if (nodes_ >= lim_.max_nodes) return true;
    if ((nodes_ & 1023) == 0) {
      const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_);
      if (ms.count() >= lim_.time_limit_ms) return true;
    }
    return false;
  }

  // First restriction to try for v and the complementary alternative.
  void split(VarId v, std::int64_t& lo1, std::int64_t& hi1, std::int64_t& lo2, std::int64_t& hi2) const {
    const std::int64_t lo = lb_[v], hi = ub_[v];
    const Variable& var = m_.var(v);
    if (var.kind == VarKind::Binary) {
      const std::int64_t first = var.role == VarRole::Plain ? 0 : 1;
      lo1 = hi1 = first;
      lo2 = hi2 = 1 - first;
      return;
    }
    if (hi - lo < 8) {
      lo1 = hi1 = lo;
      lo2 = lo + 1;
      hi2 = hi;
      return;
    }
    const std::int64_t mid = lo + (hi - lo) / 2;
    lo1 = lo;
    hi1 = mid;
    lo2 = mid + 1;
    hi2 = hi;
  }

  void record_incumbent() {
    Assignment a(lb_.begin(), lb_.end());
    const __int128 val = objective_lower_bound();
    if (!best_ || val < best_val_) {
      best_ = std::move(a);
      best_val_ = val;
      rows_[cutoff_row_].rhs = val - 1;
    }
  }

  // Iterative depth-first search. Each frame holds the untried half of a
  // binary split.
  void search(Solution&) {
    std::vector<Frame> stack;
    cursor_ = 0;
    bool descend = true;  // current node is propagated and consistent
    while (true) {
      if (descend) {
        ++nodes_;
        if (out_of_budget()) {
          stopped_ = true;
          return;
        }
        if (best_ && objective_lower_bound() >= best_val_) {
          descend = false;
        } else if (auto v = next_var()) {
          if (irrelevant(*v)) {
            // Fixed without a choice point.
            const std::int64_t val = preferred_value(*v);
            stack.push_back({trail_.size(), *v, 0, 0, false});
            if (!set_bounds(*v, val, val) || !propagate()) descend = false;
            continue;
          }
          std::int64_t lo1, hi1, lo2, hi2;
          split(*v, lo1, hi1, lo2, hi2);
          stack.push_back({trail_.size(), *v, lo2, hi2, true});
          if (!set_bounds(*v, lo1, hi1) || !propagate()) descend = false;
          continue;
        } else {
          record_incumbent();
          descend = false;
        }
      }
      // Backtrack to the deepest frame with an untried alternative.
      while (!stack.empty() && !stack.back().has_alt) {
        undo_to(stack.back().trail_mark);
        stack.pop_back();
      }
      if (stack.empty()) return;
      Frame& f = stack.back();
      undo_to(f.trail_mark);
      f.has_alt = false;
      cursor_ = 0;
      // Re-apply the objective cutoff, which may have tightened since this
      // frame was created.
      enqueue(cutoff_row_);
      descend = set_bounds(f.var, f.alt_lb, f.alt_ub) && propagate();
    }
  }

  const IlpModel& m_;
  SolveLimits lim_;
  std::vector<std::int64_t> lb_, ub_;
  std::vector<Row> rows_;
  std::vector<std::vector<std::size_t>> watch_;
  std::vector<bool> in_queue_;
  std::vector<std::size_t> queue_;
  std::vector<Change> trail_;
  std::vector<std::int64_t> obj_;
  std::int64_t obj_den_ = 1;
  std::size_t cutoff_row_ = 0;
  std::vector<VarId> order_;
  std::vector<std::vector<VarId>> groups_;
  std::vector<bool> in_group_;
  std::size_t cursor_ = 0;
  std::optional<Assignment> best_;
  __int128 best_val_ = 0;
  std::int64_t nodes_ = 0;
  bool stopped_ = false;
  std::optional<std::size_t> first_conflict_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

// Exact depth-first branch and bound. Deterministic for a given model and
// node limit; the wall-clock limit is the only source of variation.
inline Solution solve(const IlpModel& model, const SolveLimits& limits = {}) {
  detail::BranchAndBound bb(model, limits);
  return bb.run();
}

struct Violation {
  std::size_t constraint = 0;  // index into constraints(), or npos for a bound
  std::string tag;
  std::string family;
  std::string residual;  // how far the row misses its rhs
};

// Every violated constraint or variable bound under `a`.
inline std::vector<Violation> verify(const IlpModel& model, const Assignment& a) {
  if (a.size() != model.num_vars()) {
    throw ModelError("assignment covers " + std::to_string(a.size()) + " of " +
                     std::to_string(model.num_vars()) + " variables");
  }
  auto str128 = [](__int128 v) {
    if (v == 0) return std::string("0");
    const bool neg = v < 0;
    std::string s;
    for (unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : v; u > 0; u /= 10) {
      s.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    }
    if (neg) s.push_back('-');
    return std::string(s.rbegin(), s.rend());
  };
  std::vector<Violation> out;
  for (VarId v = 0; v < model.num_vars(); ++v) {
    const Variable& var = model.var(v);
    if (a[v] < var.lb || a[v] > var.ub) {
      const std::int64_t off = a[v] < var.lb ? var.lb - a[v] : a[v] - var.ub;
      out.push_back({static_cast<std::size_t>(-1), "bounds:" + var.name, "bounds", std::to_string(off)});
    }
  }
  for (std::size_t ci = 0; ci < model.constraints().size(); ++ci) {
    const Constraint& c = model.constraints()[ci];
    if (satisfied(c, a)) continue;
    const __int128 act = activity(c, a);
    const __int128 diff = act > c.rhs ? act - c.rhs : c.rhs - act;
    out.push_back({ci, c.tag, std::string(c.family()), str128(diff)});
  }
  return out;
}

}  // namespace converged::ilp
