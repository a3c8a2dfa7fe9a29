#pragma once

// Shared fixtures for the unit tests and the acceptance binary: scenario
// builders, a small-instance generator and a brute-force schedule oracle that
// never looks at the ILP.

#include <algorithm>
#include <bit>
#include <numeric>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "converged/converged.hpp"

namespace testsupport {

using namespace converged;

inline std::string source_path(const std::string& rel) { return std::string(CONVERGED_SOURCE_DIR) + "/" + rel; }

inline Json node(const std::string& id, const std::string& role) { return {{"id", id}, {"role", role}}; }
inline Json link(const std::string& a, const std::string& b, std::int64_t rate, std::int64_t prop) {
  return {{"a", a}, {"b", b}, {"rate_bps", rate}, {"prop_delay_ns", prop}};
}
inline Json flow(const std::string& id, std::int64_t period, std::int64_t len, std::int64_t deadline,
                 std::vector<std::string> route) {
  return {{"id", id}, {"period_ns", period}, {"length_bytes", len}, {"deadline_ns", deadline}, {"route", route}};
}

// ue - gw - sw - es with 1 Gbps links and 1 us propagation; a 1025 B frame
// takes 8.2 us per hop.
inline Json toy_json(std::int64_t period = 1'000'000, std::int64_t deadline = 1'000'000, int k_max = 1) {
  return {{"network",
           {{"nodes", {node("ue1", "user_equipment"), node("gw", "gateway"), node("sw", "tsn_switch"),
                       node("es1", "end_station")}},
            {"links", {link("gw", "sw", 1'000'000'000, 1000), link("sw", "es1", 1'000'000'000, 1000)}}}},
          {"radio", {{"tti_ns", 62'500}, {"k_max", k_max}, {"t_proc_ttis", 1}, {"rb_bytes", 1025}}},
          {"flows", {flow("f1", period, 1025, deadline, {"ue1", "gw", "sw", "es1"})}},
          {"scheduler", {{"gamma", 0.5}, {"min_p_ns", 100'000}}}};
}

// Two UEs, two switches in a line, one end station behind each switch.
// Flow routes are chosen by `routes`: 0 -> ue,gw,sw1,es1 ; 1 -> ue,gw,sw1,sw2,es2.
inline Json pair_json(int route_a, int route_b, std::int64_t period, std::int64_t deadline, int k_max = 1,
                      std::int64_t tti = 62'500, std::int64_t rate = 1'000'000'000, std::int64_t len = 1025,
                      std::int64_t prop = 1000) {
  auto route = [](int r, const std::string& ue) -> std::vector<std::string> {
    if (r == 0) return {ue, "gw", "sw1", "es1"};
    return {ue, "gw", "sw1", "sw2", "es2"};
  };
  return {{"network",
           {{"nodes", {node("ue1", "user_equipment"), node("ue2", "user_equipment"), node("gw", "gateway"),
                       node("sw1", "tsn_switch"), node("sw2", "tsn_switch"), node("es1", "end_station"),
                       node("es2", "end_station")}},
            {"links", {link("gw", "sw1", rate, prop), link("sw1", "sw2", rate, prop), link("sw1", "es1", rate, prop),
                       link("sw2", "es2", rate, prop)}}}},
          {"radio", {{"tti_ns", tti}, {"k_max", k_max}, {"t_proc_ttis", 1}, {"rb_bytes", len}}},
          {"flows",
           {flow("f1", period, len, deadline, route(route_a, "ue1")),
            flow("f2", period, len, deadline, route(route_b, "ue2"))}},
          {"scheduler", {{"gamma", 0.5}, {"min_p_ns", period}}}};
}

// Small random instances for exhaustive comparison: at most two flows, at
// most two scheduled wired hops, k_max <= 2, at most two period candidates.
// Times are a few nanoseconds so every domain stays tiny.
inline Json small_instance_json(std::uint64_t seed) {
  std::mt19937_64 g(seed * 0x9e3779b97f4a7c15ULL + 17);
  auto pick = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(g);
  };
  const int nflows = static_cast<int>(pick(1, 2));
  const int k_max = static_cast<int>(pick(1, 2));
  const std::int64_t tti = pick(1, 2);
  const std::int64_t min_p = 4;
  const std::int64_t prop = pick(0, 1);
  // 8 Gbps makes a 1-byte frame exactly 1 ns long.
  const std::int64_t rate = pick(0, 1) ? 8'000'000'000 : 4'000'000'000;
  Json nodes = {node("ue1", "user_equipment"), node("ue2", "user_equipment"), node("gw", "gateway"),
                node("sw1", "tsn_switch"),     node("sw2", "tsn_switch"),     node("es1", "end_station"),
                node("es2", "end_station")};
  Json links = {link("gw", "sw1", rate, prop), link("sw1", "sw2", rate, prop), link("sw1", "es1", rate, prop),
                link("sw2", "es2", rate, prop)};
  Json flows = Json::array();
  Json per_flow = Json::object();
  for (int i = 0; i < nflows; ++i) {
    const std::string id = "f" + std::to_string(i + 1);
    const std::int64_t period = pick(0, 1) ? 8 : 4;  // candidates {4, 8} or {4}
    const std::int64_t len = pick(1, 2);
    std::vector<std::string> route;
    if (pick(0, 1)) {
      route = {"ue" + std::to_string(i + 1), "gw", "sw1", "es1"};
    } else {
      route = {"ue" + std::to_string(i + 1), "gw", "sw1", "sw2", "es2"};
    }
    flows.push_back(flow(id, period, len, pick(8, 40), route));
    std::vector<std::int64_t> row;
    for (int k = 0; k < k_max; ++k) row.push_back(pick(1, 2));
    per_flow[id] = row;
  }
  static const char* gammas[] = {"0", "0.25", "0.5", "0.75", "1"};
  return {{"network", {{"nodes", nodes}, {"links", links}}},
          {"radio", {{"tti_ns", tti}, {"k_max", k_max}, {"t_proc_ttis", pick(0, 1)},
                     {"rb_bytes", {{"default", 1}, {"per_flow", per_flow}}}}},
          {"flows", flows},
          {"scheduler", {{"gamma", gammas[pick(0, 4)]}, {"min_p_ns", min_p}, {"tam_guard_ns", pick(0, 1)}}}};
}

struct OracleResult {
  bool feasible = false;
  Rational objective;
  std::int64_t schedules_checked = 0;
};

namespace oracle_detail {

struct FlowOption {
  TimeNs period = 0;
  unsigned rb_mask = 0;
  FlowSchedule fs;
};

inline TimeNs lcm_all(const std::vector<TimeNs>& v) {
  TimeNs h = 1;
  for (TimeNs p : v) h = std::lcm(h, p);
  return h;
}

inline Schedule assemble(const Scenario& sc, ModelKind kind, const std::vector<const FlowOption*>& pick,
                         int k_max) {
  Schedule s;
  s.model = kind;
  s.scenario_digest = scenario_digest(sc);
  s.rb_used.assign(static_cast<std::size_t>(k_max), false);
  std::vector<TimeNs> holds, periods;
  for (std::size_t i = 0; i < pick.size(); ++i) {
    s.flows.push_back(pick[i]->fs);
    for (int k = 0; k < k_max; ++k) {
      if (pick[i]->rb_mask >> k & 1u) s.rb_used[static_cast<std::size_t>(k)] = true;
    }
    holds.push_back(pick[i]->period);
    periods.push_back(sc.flows[i].period);
  }
  s.tsn_hyper_period = lcm_all(holds);
  s.fiveg_hyper_period = lcm_all(periods);
  for (std::size_t i = 0; i < pick.size(); ++i) s.flows[i].e2e_delay = scheduled_e2e_delay(sc, s, i);
  return s;
}

// Every schedule of one flow that passes the checker on its own.
inline std::vector<FlowOption> flow_options(const Scenario& sc, ModelKind kind, std::size_t fi) {
  Scenario solo = sc;
  solo.flows = {sc.flows[fi]};
  solo.radio.rb_bytes = {sc.radio.rb_bytes[fi]};
  const FlowSpec& f = sc.flows[fi];
  const int k_max = sc.radio.k_max;
  const TimeNs tti = sc.radio.tti;
  std::vector<TimeNs> periods;
  if (kind == ModelKind::Stsm) {
    periods = {f.period};
  } else {
    for (TimeNs p = sc.scheduler.min_p; p <= f.period; p *= 2) periods.push_back(p);
  }
  const auto links = f.scheduled_links();
  std::vector<FlowOption> out;
  for (TimeNs T : periods) {
    for (unsigned mask = 1; mask < (1u << k_max); ++mask) {
      std::vector<int> rbs;
      for (int k = 0; k < k_max; ++k) {
        if (mask >> k & 1u) rbs.push_back(k);
      }
      for (std::int64_t d = 1; d * tti <= f.period; ++d) {
        for (std::int64_t c = 0; (c + d) * tti <= f.period; ++c) {
          FlowOption opt;
          opt.period = T;
          opt.rb_mask = mask;
          opt.fs.hold_period = T;
          opt.fs.radio = {c, d, rbs};
          // Odometer over offsets in [0, T).
          std::vector<TimeNs> off(links.size(), 0);
          while (true) {
            opt.fs.tsn.clear();
            for (std::size_t h = 0; h < links.size(); ++h) {
              opt.fs.tsn.push_back({links[h], T, off[h], sc.span_on(links[h], f)});
            }
            FlowOption cand = opt;
            const Schedule s = assemble(solo, kind, {&cand}, k_max);
            cand.fs.e2e_delay = s.flows[0].e2e_delay;
            if (check_schedule(solo, s).ok()) out.push_back(cand);
            std::size_t h = 0;
            while (h < off.size() && ++off[h] == T) off[h++] = 0;
            if (h == off.size()) break;
          }
        }
      }
    }
  }
  return out;
}

inline Rational objective_of(const Scenario& sc, ModelKind kind, const Rational& gamma,
                             const std::vector<const FlowOption*>& pick) {
  const auto nf = static_cast<std::int64_t>(sc.flows.size());
  if (nf == 0) return Rational(0);
  unsigned used = 0;
  Rational tsn;
  for (std::size_t i = 0; i < pick.size(); ++i) {
    used |= pick[i]->rb_mask;
    const TimeNs T = kind == ModelKind::Stsm ? sc.flows[i].period : pick[i]->period;
    tsn = tsn + Rational(T, sc.flows[i].period);
  }
  const Rational rbs(static_cast<std::int64_t>(std::popcount(used)), sc.radio.k_max);
  return gamma * rbs - (Rational(1) - gamma) * tsn / Rational(nf);
}

}  // namespace oracle_detail

// Best objective over every schedule the checker accepts, for one or two
// flows. Enumeration is exhaustive: all candidate periods, RB subsets, grant
// positions and integer offsets.
inline OracleResult exhaustive_optimum(const Scenario& sc, ModelKind kind, const Rational& gamma) {
  using namespace oracle_detail;
  OracleResult res;
  if (sc.flows.empty()) {
    res.feasible = true;
    return res;
  }
  std::vector<std::vector<FlowOption>> opts;
  for (std::size_t fi = 0; fi < sc.flows.size(); ++fi) opts.push_back(flow_options(sc, kind, fi));
  const int k_max = sc.radio.k_max;
  std::vector<std::size_t> idx(opts.size(), 0);
  for (const auto& o : opts) {
    if (o.empty()) return res;
  }
  while (true) {
    std::vector<const FlowOption*> pick;
    for (std::size_t i = 0; i < opts.size(); ++i) pick.push_back(&opts[i][idx[i]]);
    const Rational obj = objective_of(sc, kind, gamma, pick);
    if (!res.feasible || obj < res.objective) {
      ++res.schedules_checked;
      if (pick.size() == 1 || check_schedule(sc, assemble(sc, kind, pick, k_max)).ok()) {
        res.feasible = true;
        res.objective = obj;
      }
    }
    std::size_t i = 0;
    while (i < idx.size() && ++idx[i] == opts[i].size()) idx[i++] = 0;
    if (i == idx.size()) break;
  }
  return res;
}

}  // namespace testsupport
