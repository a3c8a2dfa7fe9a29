#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "converged/scenario.hpp"

namespace converged {

// ATSM: asynchronous model, reserved period T_i chosen per flow and packets
// held at the edge switch. STSM: synchronous baseline, T_i fixed to the flow
// period and the first wired window waits for the 5GS delivery.
enum class ModelKind { Atsm, Stsm };

inline std::string_view to_string(ModelKind k) { return k == ModelKind::Atsm ? "atsm" : "stsm"; }
inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "atsm") return ModelKind::Atsm;
  if (s == "stsm") return ModelKind::Stsm;
  throw ValidationError("unknown model '" + std::string(s) + "' (expected atsm|stsm)");
}

// Reserved window of one flow on one wired dataflow link: open during
// [offset + m*period, offset + m*period + span) for every integer m.
struct TsnInstance {
  LinkId link = 0;
  TimeNs period = 0;
  TimeNs offset = 0;
  TimeNs span = 0;
};

// Semi-persistent uplink grant: TTIs [start_tti, start_tti + tti_count) of
// every flow period, on the resource blocks in `rbs` (0-based).
struct RadioInstance {
  std::int64_t start_tti = 0;
  std::int64_t tti_count = 1;
  std::vector<int> rbs;
};

struct FlowSchedule {
  RadioInstance radio;
  std::vector<TsnInstance> tsn;  // one per scheduled link, in route order
  TimeNs hold_period = 0;        // T_i; equals the flow period under STSM
  TimeNs e2e_delay = 0;          // scheduled end-to-end delay
};

struct SolverSummary {
  std::string status;
  std::string objective;
  std::int64_t nodes = 0;
};

struct Schedule {
  ModelKind model = ModelKind::Atsm;
  std::string scenario_digest;
  Rational gamma{1, 2};
  std::vector<FlowSchedule> flows;
  std::vector<bool> rb_used;
  TimeNs tsn_hyper_period = 0;
  TimeNs fiveg_hyper_period = 0;
  SolverSummary solver;

  int rbs_in_use() const {
    int n = 0;
    for (bool b : rb_used) n += b;
    return n;
  }
};

class ScheduleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scheduled end-to-end delay of one flow, read purely from schedule fields.
//   ATSM: d*TTI + T_proc + T_i + D_tsn1 + D_tsn2
//   STSM: (last scheduled window end + ldelay) - c*TTI + D_tsn2
// where D_tsn1 spans the first scheduled window start to arrival at the edge
// switch and D_tsn2 is the final hop's serialization plus propagation.
inline TimeNs scheduled_e2e_delay(const Scenario& sc, const Schedule& sched, std::size_t fi) {
  const FlowSpec& flow = sc.flows.at(fi);
  if (fi >= sched.flows.size()) throw ScheduleError("flow '" + flow.id + "' has no schedule entry");
  const FlowSchedule& fs = sched.flows[fi];
  const auto scheduled = flow.scheduled_links();
  if (fs.tsn.size() != scheduled.size() || fs.tsn.empty()) {
    throw ScheduleError("flow '" + flow.id + "' is missing wired instances");
  }
  const TsnInstance& first = fs.tsn.front();
  const TsnInstance& last = fs.tsn.back();
  const TimeNs reach_edge = last.offset + last.span + sc.links.at(last.link).prop_delay;
  const LinkId final_hop = flow.last_link();
  const TimeNs d_tsn2 = sc.span_on(final_hop, flow) + sc.links.at(final_hop).prop_delay;
  if (sched.model == ModelKind::Atsm) {
    const TimeNs d_5gs = fs.radio.tti_count * sc.radio.tti + sc.radio.proc_delay();
    return d_5gs + fs.hold_period + (reach_edge - first.offset) + d_tsn2;
  }
  return reach_edge - fs.radio.start_tti * sc.radio.tti + d_tsn2;
}

inline Json schedule_to_json(const Scenario& sc, const Schedule& s) {
  Json flows = Json::array();
  for (std::size_t i = 0; i < s.flows.size(); ++i) {
    const FlowSchedule& f = s.flows[i];
    Json tsn = Json::array();
    for (const TsnInstance& t : f.tsn) {
      tsn.push_back({{"link", sc.link_name(t.link)},
                     {"period_ns", t.period},
                     {"offset_ns", t.offset},
                     {"span_ns", t.span}});
    }
    flows.push_back({{"id", sc.flows.at(i).id},
                     {"hold_period_ns", f.hold_period},
                     {"e2e_delay_ns", f.e2e_delay},
                     {"radio",
                      {{"start_tti", f.radio.start_tti},
                       {"tti_count", f.radio.tti_count},
                       {"rbs", f.radio.rbs}}},
                     {"tsn", tsn}});
  }
  Json rb = Json::array();
  for (bool b : s.rb_used) rb.push_back(b ? 1 : 0);
  return {{"format", "converged-schedule/1"},
          {"model", to_string(s.model)},
          {"scenario_digest", s.scenario_digest},
          {"gamma", s.gamma.str()},
          {"solver", {{"status", s.solver.status}, {"objective", s.solver.objective}, {"nodes", s.solver.nodes}}},
          {"hyper_period_tsn_ns", s.tsn_hyper_period},
          {"hyper_period_5gs_ns", s.fiveg_hyper_period},
          {"rb_used", rb},
          {"flows", flows}};
}

inline LinkId link_by_name(const Scenario& sc, const std::string& name) {
  for (LinkId l = 0; l < sc.links.size(); ++l) {
    if (sc.link_name(l) == name) return l;
  }
  throw ScheduleError("schedule names unknown link '" + name + "'");
}

// Parses a schedule file and checks that it belongs to `sc`.
inline Schedule schedule_from_json(const Scenario& sc, const Json& doc) {
  using detail::get_required;
  Schedule s;
  try {
    if (doc.value("format", "") != "converged-schedule/1") throw ScheduleError("not a schedule file");
    s.model = parse_model_kind(get_required<std::string>(doc, "model", "schedule"));
    s.scenario_digest = get_required<std::string>(doc, "scenario_digest", "schedule");
    if (s.scenario_digest != scenario_digest(sc)) {
      throw ScheduleError("schedule digest does not match scenario (schedule was built for another scenario)");
    }
    const std::string g = doc.value("gamma", "1/2");
    if (auto slash = g.find('/'); slash != std::string::npos) {
      s.gamma = Rational(std::stoll(g.substr(0, slash)), std::stoll(g.substr(slash + 1)));
    } else {
      s.gamma = Rational::from_decimal(g);
    }
    if (doc.contains("solver")) {
      const Json& sv = doc.at("solver");
      s.solver.status = sv.value("status", "");
      s.solver.objective = sv.value("objective", "");
      s.solver.nodes = sv.value("nodes", std::int64_t{0});
    }
    s.tsn_hyper_period = get_required<std::int64_t>(doc, "hyper_period_tsn_ns", "schedule");
    s.fiveg_hyper_period = get_required<std::int64_t>(doc, "hyper_period_5gs_ns", "schedule");
    for (int v : get_required<std::vector<int>>(doc, "rb_used", "schedule")) s.rb_used.push_back(v != 0);
    const Json& flows = doc.at("flows");
    if (flows.size() != sc.flows.size()) throw ScheduleError("schedule flow count does not match scenario");
    for (std::size_t i = 0; i < flows.size(); ++i) {
      const Json& fj = flows[i];
      if (fj.at("id").get<std::string>() != sc.flows[i].id) {
        throw ScheduleError("schedule flow order does not match scenario at '" + sc.flows[i].id + "'");
      }
      FlowSchedule f;
      f.hold_period = fj.at("hold_period_ns").get<std::int64_t>();
      f.e2e_delay = fj.at("e2e_delay_ns").get<std::int64_t>();
      const Json& r = fj.at("radio");
      f.radio.start_tti = r.at("start_tti").get<std::int64_t>();
      f.radio.tti_count = r.at("tti_count").get<std::int64_t>();
      f.radio.rbs = r.at("rbs").get<std::vector<int>>();
      for (const Json& t : fj.at("tsn")) {
        f.tsn.push_back({link_by_name(sc, t.at("link").get<std::string>()), t.at("period_ns").get<std::int64_t>(),
                         t.at("offset_ns").get<std::int64_t>(), t.at("span_ns").get<std::int64_t>()});
      }
      s.flows.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ScheduleError(std::string("malformed schedule file: ") + e.what());
  }
  return s;
}

inline Schedule load_schedule(const Scenario& sc, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScheduleError("cannot open schedule file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScheduleError("schedule '" + path + "' is not valid JSON: " + e.what());
  }
  return schedule_from_json(sc, doc);
}

}  // namespace converged
