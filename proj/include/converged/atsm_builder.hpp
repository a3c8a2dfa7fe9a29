#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "converged/ilp_model.hpp"
#include "converged/scenario.hpp"
#include "converged/schedule.hpp"

namespace converged {

// A scenario that no schedule can satisfy, detected while building.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(std::string family, std::string flow, const std::string& what)
      : std::runtime_error(what), family_(std::move(family)), flow_(std::move(flow)) {}
  const std::string& family() const { return family_; }
  const std::string& flow() const { return flow_; }

 private:
  std::string family_;
  std::string flow_;
};

// [minP, 2 minP, 4 minP, ...] up to the largest value not above `period`.
inline std::vector<TimeNs> build_period_candidates(TimeNs period, TimeNs min_p) {
  if (min_p <= 0) throw ValidationError("min_p must be positive");
  if (min_p > period) {
    throw InfeasibleError("window", "", "min_p " + std::to_string(min_p) + " ns exceeds flow period " +
                                            std::to_string(period) + " ns");
  }
  std::vector<TimeNs> out;
  for (TimeNs p = min_p; p <= period; p *= 2) {
    out.push_back(p);
    if (p > period / 2) break;
  }
  return out;
}

struct FlowVars {
  std::vector<TimeNs> candidates;  // ascending
  std::vector<ilp::VarId> b;       // b[j] selects candidates[j]; empty under STSM
  ilp::VarId c = 0;
  ilp::VarId d = 0;
  std::vector<ilp::VarId> x;
  std::vector<ilp::VarId> z;
  std::vector<LinkId> scheduled;
  std::vector<ilp::VarId> offset;  // parallel to `scheduled`

  std::optional<ilp::VarId> offset_on(LinkId l) const {
    for (std::size_t i = 0; i < scheduled.size(); ++i) {
      if (scheduled[i] == l) return offset[i];
    }
    return std::nullopt;
  }
};

struct BuiltModel {
  ModelKind kind = ModelKind::Atsm;
  Rational gamma{1, 2};
  ilp::IlpModel model;
  std::vector<FlowVars> flows;
  std::vector<ilp::VarId> y;
  Rational objective_constant;  // STSM: the fixed period term
};

namespace detail {

using ilp::Expr;
using ilp::Sense;
using ilp::VarId;

struct Range {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};
using BoundFn = std::function<Range(VarId)>;

inline Range expr_range(const Expr& e, const BoundFn& bound) {
  __int128 lo = e.constant, hi = e.constant;
  for (const ilp::Term& t : e.terms) {
    const Range r = bound(t.var);
    if (t.coef >= 0) {
      lo += static_cast<__int128>(t.coef) * r.lo;
      hi += static_cast<__int128>(t.coef) * r.hi;
    } else {
      lo += static_cast<__int128>(t.coef) * r.hi;
      hi += static_cast<__int128>(t.coef) * r.lo;
    }
  }
  constexpr __int128 lim = INT64_MAX / 4;
  if (lo < -lim || hi > lim) throw OverflowError("constraint activity out of range");
  return {static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)};
}

// Emits "branch_a >= 0 OR branch_b >= 0", both active only when every guard
// binary is 1. `cond` gives variable ranges that hold whenever the guards are
// active; `uncond` the declared ranges, used to size M.
inline void add_guarded_disjunction(BuiltModel& bm, const std::string& tag, const Expr& branch_a,
                                    const Expr& branch_b, const std::vector<VarId>& guards,
                                    const BoundFn& cond, const BoundFn& uncond) {
  ilp::IlpModel& m = bm.model;
  const Range ca = expr_range(branch_a, cond);
  const Range cb = expr_range(branch_b, cond);
  if (ca.lo >= 0 || cb.lo >= 0) return;
  const bool a_possible = ca.hi >= 0;
  const bool b_possible = cb.hi >= 0;

  // Guard slack M * (|guards| - sum guards).
  auto guard_slack = [&](std::int64_t big_m) {
    Expr g(static_cast<std::int64_t>(guards.size()) * big_m);
    for (VarId v : guards) g.add(v, -big_m);
    return g;
  };

  if (!a_possible && !b_possible) {
    Expr sum;
    for (VarId v : guards) sum.add(v, 1);
    m.add_constraint(tag + ":excl", sum, Sense::Le, Expr(static_cast<std::int64_t>(guards.size()) - 1));
    return;
  }
  if (!b_possible || !a_possible) {
    const Expr& only = a_possible ? branch_a : branch_b;
    const std::int64_t big_m = std::max<std::int64_t>(0, -expr_range(only, uncond).lo);
    m.add_constraint(tag + (a_possible ? ":a" : ":b"), only + guard_slack(big_m), Sense::Ge, Expr(0));
    return;
  }
  const std::int64_t ma = std::max<std::int64_t>(0, -expr_range(branch_a, uncond).lo);
  const std::int64_t mb = std::max<std::int64_t>(0, -expr_range(branch_b, uncond).lo);
  const VarId s = m.add_binary("s_" + std::to_string(m.num_vars()), ilp::VarRole::Selector);
  // s = 1 enforces branch a, s = 0 enforces branch b.
  m.add_constraint(tag + ":a", branch_a + guard_slack(ma) + Expr(ma) + Expr::var(s, -ma), Sense::Ge, Expr(0));
  m.add_constraint(tag + ":b", branch_b + guard_slack(mb) + Expr::var(s, mb), Sense::Ge, Expr(0));
}

inline BoundFn declared_bounds(const ilp::IlpModel& m) {
  return [&m](VarId v) {
    const ilp::Variable& var = m.var(v);
    return Range{var.lb, var.ub};
  };
}

inline Expr period_expr(const FlowVars& fv) {
  Expr e;
  for (std::size_t j = 0; j < fv.b.size(); ++j) e.add(fv.b[j], fv.candidates[j]);
  return e;
}

inline std::string flow_tag(const Scenario& sc, std::size_t fi) { return sc.flows[fi].id; }

}  // namespace detail

// c, d on the uplink: the grant starts at a TTI boundary, lasts whole TTIs
// and ends within the flow period.
inline void add_transmission_opportunity_constraints(const Scenario& sc, BuiltModel& bm, std::size_t fi) {
  using namespace detail;
  const FlowSpec& f = sc.flows[fi];
  const TimeNs tti = sc.radio.tti;
  const std::int64_t slots = f.period / tti;
  if (slots < 1) {
    throw InfeasibleError("opportunity", f.id, "flow '" + f.id + "': period shorter than one TTI");
  }
  FlowVars& fv = bm.flows[fi];
  fv.c = bm.model.add_integer("c_" + std::to_string(fi), 0, slots - 1);
  fv.d = bm.model.add_integer("d_" + std::to_string(fi), 1, slots);
  bm.model.add_constraint("opportunity:" + f.id + ":" + sc.link_name(sc.uplink()),
                          Expr::var(fv.c, tti) + Expr::var(fv.d, tti), Sense::Le, Expr(f.period));
}

// Sum_i x_ik <= |F| y_k.
inline void add_rb_constraints(const Scenario& sc, BuiltModel& bm) {
  using namespace detail;
  const auto nf = static_cast<std::int64_t>(sc.flows.size());
  for (std::size_t k = 0; k < bm.y.size(); ++k) {
    Expr lhs;
    for (const FlowVars& fv : bm.flows) lhs.add(fv.x[k], 1);
    bm.model.add_constraint("rb:" + std::to_string(k), lhs, Sense::Le, Expr::var(bm.y[k], nf));
  }
}

// Capacity of the grant, with z_k = x_k * d linearized.
inline void add_resource_constraints(const Scenario& sc, BuiltModel& bm, std::size_t fi) {
  using namespace detail;
  const FlowSpec& f = sc.flows[fi];
  FlowVars& fv = bm.flows[fi];
  const std::int64_t dmax = bm.model.var(fv.d).ub;
  const auto& rate = sc.radio.rb_bytes.at(fi);
  __int128 best = 0;
  for (std::int64_t r : rate) best += static_cast<__int128>(r) * dmax;
  if (best < f.length_bytes) {
    throw InfeasibleError("resource", f.id,
                          "flow '" + f.id + "': all resource blocks over a full period carry fewer than " +
                              std::to_string(f.length_bytes) + " bytes");
  }
  const std::string link = sc.link_name(sc.uplink());
  Expr cap, cap_prev;
  for (std::size_t k = 0; k < fv.x.size(); ++k) {
    const std::string tag = "product:" + f.id + ":" + link + ":" + std::to_string(k);
    const VarId x = fv.x[k], z = fv.z[k];
    bm.model.add_constraint(tag + ":d", Expr::var(z), Sense::Le, Expr::var(fv.d));
    bm.model.add_constraint(tag + ":x", Expr::var(z), Sense::Le, Expr::var(x, dmax));
    bm.model.add_constraint(tag + ":lo", Expr::var(z), Sense::Ge, Expr::var(fv.d) - Expr(dmax) + Expr::var(x, dmax));
    cap.add(z, rate[k]);
    cap_prev.add(z, rate[k]).add(x, -rate[k]);
  }
  bm.model.add_constraint("resource:" + f.id + ":" + link + ":enough", cap, Sense::Ge, Expr(f.length_bytes));
  bm.model.add_constraint("resource:" + f.id + ":" + link + ":tight", cap_prev, Sense::Le,
                          Expr(f.length_bytes - 1));
}

// No two grants on the same RB overlap in any TTI of the 5GS hyper-period.
inline void add_ofdma_constraints(const Scenario& sc, BuiltModel& bm) {
  using namespace detail;
  if (sc.flows.size() < 2) return;
  std::vector<TimeNs> periods;
  for (const FlowSpec& f : sc.flows) periods.push_back(f.period);
  const TimeNs h5 = hyper_period(periods);
  const TimeNs tti = sc.radio.tti;
  const std::string link = sc.link_name(sc.uplink());
  const BoundFn uncond = declared_bounds(bm.model);
  for (std::size_t i = 0; i < sc.flows.size(); ++i) {
    for (std::size_t j = i + 1; j < sc.flows.size(); ++j) {
      const TimeNs pi = sc.flows[i].period, pj = sc.flows[j].period;
      const FlowVars &vi = bm.flows[i], &vj = bm.flows[j];
      for (std::size_t k = 0; k < bm.y.size(); ++k) {
        for (std::int64_t a = 0; a < h5 / pi; ++a) {
          for (std::int64_t b = 0; b < h5 / pj; ++b) {
            // Each grant stays inside its own period slot.
            if (a * pi >= (b + 1) * pj || b * pj >= (a + 1) * pi) continue;
            // a*Pi + c_i*TTI >= b*Pj + (c_j + d_j)*TTI, or the mirror.
            Expr ba = Expr(a * pi - b * pj) + Expr::var(vi.c, tti) - Expr::var(vj.c, tti) - Expr::var(vj.d, tti);
            Expr bb = Expr(b * pj - a * pi) + Expr::var(vj.c, tti) - Expr::var(vi.c, tti) - Expr::var(vi.d, tti);
            const std::string tag = "ofdma:" + sc.flows[i].id + ":" + sc.flows[j].id + ":" + link + ":" +
                                    std::to_string(k) + ":" + std::to_string(a) + ":" + std::to_string(b);
            add_guarded_disjunction(bm, tag, ba, bb, {vi.x[k], vj.x[k]}, uncond, uncond);
          }
        }
      }
    }
  }
}

// offset >= 0 and offset + span <= T_i on every scheduled link; T_i is the
// single selected candidate (ATSM) or the flow period (STSM).
inline void add_window_and_frame_constraints(const Scenario& sc, BuiltModel& bm, std::size_t fi) {
  using namespace detail;
  const FlowSpec& f = sc.flows[fi];
  FlowVars& fv = bm.flows[fi];
  if (bm.kind == ModelKind::Atsm) {
    Expr one;
    for (VarId b : fv.b) one.add(b, 1);
    bm.model.add_constraint("period_select:" + f.id, one, Sense::Eq, Expr(1));
  }
  const Expr period = bm.kind == ModelKind::Atsm ? period_expr(fv) : Expr(f.period);
  for (std::size_t s = 0; s < fv.scheduled.size(); ++s) {
    const LinkId l = fv.scheduled[s];
    bm.model.add_constraint("window:" + f.id + ":" + sc.link_name(l),
                            Expr::var(fv.offset[s]) + Expr(sc.span_on(l, f)), Sense::Le, period);
  }
}

// Store-and-forward along the scheduled part of the route.
inline void add_transmission_order_constraints(const Scenario& sc, BuiltModel& bm, std::size_t fi) {
  using namespace detail;
  const FlowSpec& f = sc.flows[fi];
  const FlowVars& fv = bm.flows[fi];
  for (std::size_t s = 1; s < fv.scheduled.size(); ++s) {
    const LinkId la = fv.scheduled[s - 1];
    const TimeNs hop = sc.span_on(la, f) + sc.links[la].prop_delay;
    bm.model.add_constraint("order:" + f.id + ":" + sc.link_name(fv.scheduled[s]), Expr::var(fv.offset[s]),
                            Sense::Ge, Expr::var(fv.offset[s - 1]) + Expr(hop));
  }
}

namespace detail {

// Candidate period pairs (u, w) for flows i and j with their guard binaries.
// Under STSM there is a single pair, the flow periods, with no guard.
struct PeriodPair {
  std::size_t u, w;
  TimeNs pu, pw;
  std::vector<VarId> guards;
};

inline std::vector<PeriodPair> period_pairs(const Scenario& sc, const BuiltModel& bm, std::size_t i,
                                            std::size_t j) {
  std::vector<PeriodPair> out;
  if (bm.kind == ModelKind::Stsm) {
    out.push_back({0, 0, sc.flows[i].period, sc.flows[j].period, {}});
    return out;
  }
  const FlowVars &vi = bm.flows[i], &vj = bm.flows[j];
  for (std::size_t u = 0; u < vi.candidates.size(); ++u) {
    for (std::size_t w = 0; w < vj.candidates.size(); ++w) {
      out.push_back({u, w, vi.candidates[u], vj.candidates[w], {vi.b[u], vj.b[w]}});
    }
  }
  return out;
}

// Offsets of flow i confined to [0, p - span] once candidate p is selected.
inline BoundFn conditional_bounds(const Scenario& sc, const BuiltModel& bm, std::size_t i, TimeNs pi,
                                  std::size_t j, TimeNs pj) {
  const BoundFn base = declared_bounds(bm.model);
  return [&sc, &bm, base, i, pi, j, pj](VarId v) {
    Range r = base(v);
    for (auto [fi, p] : {std::pair{i, pi}, std::pair{j, pj}}) {
      const FlowVars& fv = bm.flows[fi];
      for (std::size_t s = 0; s < fv.scheduled.size(); ++s) {
        if (fv.offset[s] == v) r.hi = std::min(r.hi, p - sc.span_on(fv.scheduled[s], sc.flows[fi]));
      }
    }
    return r;
  };
}

inline std::string pair_tag(const PeriodPair& pp, std::int64_t a, std::int64_t b) {
  return std::to_string(pp.u) + "." + std::to_string(pp.w) + ":" + std::to_string(a) + ":" + std::to_string(b);
}

}  // namespace detail

// Windows of different flows on a shared wired link never overlap.
inline void add_tdma_constraints(const Scenario& sc, BuiltModel& bm) {
  using namespace detail;
  const BoundFn uncond = declared_bounds(bm.model);
  for (std::size_t i = 0; i < sc.flows.size(); ++i) {
    for (std::size_t j = i + 1; j < sc.flows.size(); ++j) {
      const FlowVars &vi = bm.flows[i], &vj = bm.flows[j];
      for (std::size_t si = 0; si < vi.scheduled.size(); ++si) {
        const LinkId l = vi.scheduled[si];
        const auto oj = vj.offset_on(l);
        if (!oj) continue;
        const VarId oi = vi.offset[si];
        const TimeNs span_i = sc.span_on(l, sc.flows[i]), span_j = sc.span_on(l, sc.flows[j]);
        for (const PeriodPair& pp : period_pairs(sc, bm, i, j)) {
          const TimeNs hp = checked_lcm(pp.pu, pp.pw);
          const BoundFn cond = conditional_bounds(sc, bm, i, pp.pu, j, pp.pw);
          for (std::int64_t a = 0; a < hp / pp.pu; ++a) {
            for (std::int64_t b = 0; b < hp / pp.pw; ++b) {
              Expr ba = Expr(a * pp.pu - b * pp.pw - span_j) + Expr::var(oi) - Expr::var(*oj);
              Expr bb = Expr(b * pp.pw - a * pp.pu - span_i) + Expr::var(*oj) - Expr::var(oi);
              const std::string tag = "tdma:" + sc.flows[i].id + ":" + sc.flows[j].id + ":" + sc.link_name(l) +
                                      ":" + pair_tag(pp, a, b);
              add_guarded_disjunction(bm, tag, ba, bb, pp.guards, cond, uncond);
            }
          }
        }
      }
    }
  }
}

// Two flows entering the same output link: one flow's window there opens no
// later than the other's arrival on its input link, or the mirror.
inline void add_frame_isolation_constraints(const Scenario& sc, BuiltModel& bm) {
  using namespace detail;
  const BoundFn uncond = declared_bounds(bm.model);
  for (std::size_t i = 0; i < sc.flows.size(); ++i) {
    for (std::size_t j = i + 1; j < sc.flows.size(); ++j) {
      const FlowVars &vi = bm.flows[i], &vj = bm.flows[j];
      for (std::size_t ci = 1; ci < vi.scheduled.size(); ++ci) {
        const LinkId lc = vi.scheduled[ci];
        std::optional<std::size_t> cj;
        for (std::size_t s = 1; s < vj.scheduled.size(); ++s) {
          if (vj.scheduled[s] == lc) cj = s;
        }
        if (!cj) continue;
        const LinkId la = vi.scheduled[ci - 1], lb = vj.scheduled[*cj - 1];
        const VarId oic = vi.offset[ci], oia = vi.offset[ci - 1];
        const VarId ojc = vj.offset[*cj], ojb = vj.offset[*cj - 1];
        for (const PeriodPair& pp : period_pairs(sc, bm, i, j)) {
          const TimeNs hp = checked_lcm(pp.pu, pp.pw);
          const BoundFn cond = conditional_bounds(sc, bm, i, pp.pu, j, pp.pw);
          for (std::int64_t a = 0; a < hp / pp.pu; ++a) {
            for (std::int64_t b = 0; b < hp / pp.pw; ++b) {
              // b*Tj + o_j^lb + ld_b - (a*Ti + o_i^lc) >= 0
              Expr ba = Expr(b * pp.pw + sc.links[lb].prop_delay - a * pp.pu) + Expr::var(ojb) - Expr::var(oic);
              Expr bb = Expr(a * pp.pu + sc.links[la].prop_delay - b * pp.pw) + Expr::var(oia) - Expr::var(ojc);
              const std::string tag = "isolation:" + sc.flows[i].id + ":" + sc.flows[j].id + ":" +
                                      sc.link_name(lc) + ":" + pair_tag(pp, a, b);
              add_guarded_disjunction(bm, tag, ba, bb, pp.guards, cond, uncond);
            }
          }
        }
      }
    }
  }
}

// Scheduled end-to-end delay within the deadline. Under STSM the first wired
// window also waits for the jitter-free 5GS delivery.
inline void add_e2e_delay_constraints(const Scenario& sc, BuiltModel& bm, std::size_t fi) {
  using namespace detail;
  const FlowSpec& f = sc.flows[fi];
  const FlowVars& fv = bm.flows[fi];
  const TimeNs tti = sc.radio.tti;
  const LinkId last_sched = fv.scheduled.back();
  const LinkId final_hop = f.last_link();
  const TimeNs tail = sc.span_on(last_sched, f) + sc.links[last_sched].prop_delay + sc.span_on(final_hop, f) +
                      sc.links[final_hop].prop_delay;
  TimeNs chain = 0;
  for (std::size_t s = 0; s + 1 < fv.scheduled.size(); ++s) {
    chain += sc.span_on(fv.scheduled[s], f) + sc.links[fv.scheduled[s]].prop_delay;
  }
  const VarId o_first = fv.offset.front(), o_last = fv.offset.back();
  if (bm.kind == ModelKind::Atsm) {
    const TimeNs floor_delay = tti + sc.radio.proc_delay() + fv.candidates.front() + chain + tail;
    if (floor_delay > f.deadline) {
      throw InfeasibleError("e2e", f.id,
                            "flow '" + f.id + "': minimum end-to-end delay " + std::to_string(floor_delay) +
                                " ns exceeds deadline " + std::to_string(f.deadline) + " ns");
    }
    Expr lhs = Expr::var(fv.d, tti) + Expr(sc.radio.proc_delay() + tail) + period_expr(fv) + Expr::var(o_last) -
               Expr::var(o_first);
    bm.model.add_constraint("e2e:" + f.id, lhs, Sense::Le, Expr(f.deadline));
    // Same row with the order chain summed in. Redundant, but bound
    // propagation cannot derive it and it caps T_i before any offset is set.
    if (chain > 0) {
      bm.model.add_constraint("e2e:" + f.id + ":floor",
                              Expr::var(fv.d, tti) + Expr(sc.radio.proc_delay() + tail + chain) + period_expr(fv),
                              Sense::Le, Expr(f.deadline));
    }
    return;
  }
  const TimeNs floor_delay = tti + sc.radio.proc_delay() + sc.scheduler.tam_guard + chain + tail;
  if (floor_delay > f.deadline) {
    throw InfeasibleError("e2e", f.id,
                          "flow '" + f.id + "': minimum end-to-end delay " + std::to_string(floor_delay) +
                              " ns exceeds deadline " + std::to_string(f.deadline) + " ns");
  }
  bm.model.add_constraint("chain:" + f.id, Expr::var(o_first), Sense::Ge,
                          Expr::var(fv.c, tti) + Expr::var(fv.d, tti) +
                              Expr(sc.radio.proc_delay() + sc.scheduler.tam_guard));
  bm.model.add_constraint("e2e:" + f.id, Expr::var(o_last) + Expr(tail) - Expr::var(fv.c, tti), Sense::Le,
                          Expr(f.deadline));
}

// gamma * sum_k y_k / K  -  (1 - gamma) * sum_i T_i / (period_i * |F|)
inline void build_objective(const Scenario& sc, BuiltModel& bm, const Rational& gamma) {
  validate_gamma(gamma);
  bm.gamma = gamma;
  const auto kmax = static_cast<std::int64_t>(bm.y.size());
  const auto nf = static_cast<std::int64_t>(sc.flows.size());
  for (ilp::VarId y : bm.y) bm.model.add_objective(y, gamma / Rational(kmax));
  const Rational tsn_weight = Rational(1) - gamma;
  for (std::size_t i = 0; i < sc.flows.size(); ++i) {
    const Rational denom = Rational(sc.flows[i].period) * Rational(nf);
    const FlowVars& fv = bm.flows[i];
    if (bm.kind == ModelKind::Atsm) {
      for (std::size_t j = 0; j < fv.b.size(); ++j) {
        bm.model.add_objective(fv.b[j], -tsn_weight * Rational(fv.candidates[j]) / denom);
      }
    } else {
      bm.objective_constant = bm.objective_constant - tsn_weight / Rational(nf);
    }
  }
}

namespace detail {

inline BuiltModel build_model(const Scenario& sc, ModelKind kind, const Rational& gamma) {
  BuiltModel bm;
  bm.kind = kind;
  bm.flows.resize(sc.flows.size());
  ilp::IlpModel& m = bm.model;
  const int kmax = sc.radio.k_max;
  for (std::size_t fi = 0; fi < sc.flows.size(); ++fi) {
    const FlowSpec& f = sc.flows[fi];
    FlowVars& fv = bm.flows[fi];
    const std::string n = std::to_string(fi);
    if (kind == ModelKind::Atsm) {
      fv.candidates = build_period_candidates(f.period, sc.scheduler.min_p);
      fv.b.resize(fv.candidates.size());
      // Largest candidate declared first so the search tries long periods early.
      for (std::size_t j = fv.candidates.size(); j-- > 0;) {
        fv.b[j] = m.add_binary("b_" + n + "_" + std::to_string(j), ilp::VarRole::PeriodChoice);
      }
    } else {
      fv.candidates = {f.period};
    }
    add_transmission_opportunity_constraints(sc, bm, fi);
    const std::int64_t dmax = m.var(fv.d).ub;
    for (int k = 0; k < kmax; ++k) fv.x.push_back(m.add_binary("x_" + n + "_" + std::to_string(k)));
    for (int k = 0; k < kmax; ++k) fv.z.push_back(m.add_integer("z_" + n + "_" + std::to_string(k), 0, dmax));
    const TimeNs tmax = fv.candidates.back();
    for (LinkId l : f.scheduled_links()) {
      const TimeNs span = sc.span_on(l, f);
      if (span > tmax) {
        throw InfeasibleError("window", f.id,
                              "flow '" + f.id + "': span " + std::to_string(span) + " ns on " + sc.link_name(l) +
                                  " exceeds the largest window period");
      }
      fv.scheduled.push_back(l);
      fv.offset.push_back(m.add_integer("o_" + n + "_" + std::to_string(l), 0, tmax - span));
    }
  }
  for (int k = 0; k < kmax && !sc.flows.empty(); ++k) bm.y.push_back(m.add_binary("y_" + std::to_string(k)));

  for (std::size_t fi = 0; fi < sc.flows.size(); ++fi) {
    add_resource_constraints(sc, bm, fi);
    add_window_and_frame_constraints(sc, bm, fi);
    add_transmission_order_constraints(sc, bm, fi);
    add_e2e_delay_constraints(sc, bm, fi);
  }
  add_rb_constraints(sc, bm);
  add_ofdma_constraints(sc, bm);
  add_tdma_constraints(sc, bm);
  add_frame_isolation_constraints(sc, bm);
  build_objective(sc, bm, gamma);
  return bm;
}

}  // namespace detail

inline BuiltModel build_atsm(const Scenario& sc, const Rational& gamma) {
  return detail::build_model(sc, ModelKind::Atsm, gamma);
}

inline BuiltModel build_stsm(const Scenario& sc, const Rational& gamma) {
  return detail::build_model(sc, ModelKind::Stsm, gamma);
}

inline BuiltModel build_model(const Scenario& sc, ModelKind kind, const Rational& gamma) {
  return detail::build_model(sc, kind, gamma);
}

// Reads a Schedule out of a full assignment.
inline Schedule decode_schedule(const Scenario& sc, const BuiltModel& bm, const ilp::Assignment& a) {
  Schedule s;
  s.model = bm.kind;
  s.gamma = bm.gamma;
  s.scenario_digest = scenario_digest(sc);
  std::vector<TimeNs> hold, periods;
  for (std::size_t fi = 0; fi < sc.flows.size(); ++fi) {
    const FlowSpec& f = sc.flows[fi];
    const FlowVars& fv = bm.flows[fi];
    FlowSchedule fs;
    fs.hold_period = f.period;
    for (std::size_t j = 0; j < fv.b.size(); ++j) {
      if (a.at(fv.b[j]) == 1) fs.hold_period = fv.candidates[j];
    }
    fs.radio.start_tti = a.at(fv.c);
    fs.radio.tti_count = a.at(fv.d);
    for (std::size_t k = 0; k < fv.x.size(); ++k) {
      if (a.at(fv.x[k]) == 1) fs.radio.rbs.push_back(static_cast<int>(k));
    }
    for (std::size_t si = 0; si < fv.scheduled.size(); ++si) {
      fs.tsn.push_back({fv.scheduled[si], fs.hold_period, a.at(fv.offset[si]), sc.span_on(fv.scheduled[si], f)});
    }
    hold.push_back(fs.hold_period);
    periods.push_back(f.period);
    s.flows.push_back(std::move(fs));
  }
  for (ilp::VarId y : bm.y) s.rb_used.push_back(a.at(y) == 1);
  if (s.rb_used.empty()) s.rb_used.assign(static_cast<std::size_t>(sc.radio.k_max), false);
  if (!sc.flows.empty()) {
    s.tsn_hyper_period = hyper_period(hold);
    s.fiveg_hyper_period = hyper_period(periods);
  }
  for (std::size_t fi = 0; fi < sc.flows.size(); ++fi) s.flows[fi].e2e_delay = scheduled_e2e_delay(sc, s, fi);
  return s;
}

// Inverse of decode_schedule. Selector binaries get whichever value satisfies
// their constraints (1 when both do). Returns nullopt when the schedule does
// not fit the model's variables at all (e.g. a period outside the candidate
// list); constraint violations are left for ilp::verify to report.
inline std::optional<ilp::Assignment> encode_schedule(const Scenario& sc, const BuiltModel& bm, const Schedule& s,
                                                      std::string* why = nullptr) {
  auto fail = [&](const std::string& msg) -> std::optional<ilp::Assignment> {
    if (why) *why = msg;
    return std::nullopt;
  };
  if (s.flows.size() != sc.flows.size()) return fail("flow count mismatch");
  const ilp::IlpModel& m = bm.model;
  ilp::Assignment a(m.num_vars(), 0);
  for (std::size_t fi = 0; fi < sc.flows.size(); ++fi) {
    const FlowSpec& f = sc.flows[fi];
    const FlowVars& fv = bm.flows[fi];
    const FlowSchedule& fs = s.flows[fi];
    if (bm.kind == ModelKind::Atsm) {
      bool found = false;
      for (std::size_t j = 0; j < fv.b.size(); ++j) {
        a[fv.b[j]] = fv.candidates[j] == fs.hold_period;
        found = found || a[fv.b[j]] == 1;
      }
      if (!found) return fail("flow '" + f.id + "': period " + std::to_string(fs.hold_period) + " is not a candidate");
    } else if (fs.hold_period != f.period) {
      return fail("flow '" + f.id + "': synchronous schedule must use the flow period");
    }
    a[fv.c] = fs.radio.start_tti;
    a[fv.d] = fs.radio.tti_count;
    for (int k : fs.radio.rbs) {
      if (k < 0 || static_cast<std::size_t>(k) >= fv.x.size()) return fail("flow '" + f.id + "': RB out of range");
      a[fv.x[static_cast<std::size_t>(k)]] = 1;
    }
    for (std::size_t k = 0; k < fv.x.size(); ++k) a[fv.z[k]] = a[fv.x[k]] * a[fv.d];
    if (fs.tsn.size() != fv.scheduled.size()) return fail("flow '" + f.id + "': wrong number of wired windows");
    for (std::size_t si = 0; si < fv.scheduled.size(); ++si) {
      const TsnInstance& t = fs.tsn[si];
      if (t.link != fv.scheduled[si]) return fail("flow '" + f.id + "': window on a link off its route");
      if (t.period != fs.hold_period) return fail("flow '" + f.id + "': window periods differ along the route");
      a[fv.offset[si]] = t.offset;
    }
  }
  for (std::size_t k = 0; k < bm.y.size(); ++k) {
    a[bm.y[k]] = k < s.rb_used.size() && s.rb_used[k];
  }
  std::vector<std::vector<std::size_t>> uses(m.num_vars());
  for (std::size_t ci = 0; ci < m.constraints().size(); ++ci) {
    for (const ilp::Term& t : m.constraints()[ci].terms) {
      if (m.var(t.var).role == ilp::VarRole::Selector) uses[t.var].push_back(ci);
    }
  }
  for (ilp::VarId v = 0; v < m.num_vars(); ++v) {
    if (m.var(v).role != ilp::VarRole::Selector) continue;
    a[v] = 1;
    const bool ok = std::all_of(uses[v].begin(), uses[v].end(),
                                [&](std::size_t ci) { return ilp::satisfied(m.constraints()[ci], a); });
    if (!ok) a[v] = 0;
  }
  return a;
}

}  // namespace converged
