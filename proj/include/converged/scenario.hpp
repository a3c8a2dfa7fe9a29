#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "converged/network.hpp"
#include "converged/rational.hpp"
#include "converged/time.hpp"

namespace converged {

using Json = nlohmann::json;

// One time-triggered flow: a single frame of `length_bytes` every `period`,
// to be delivered within `deadline`. The route starts with the 5GS uplink;
// every later link is a wired TSN dataflow link.
struct FlowSpec {
  std::string id;
  TimeNs period = 0;
  std::int64_t length_bytes = 0;
  TimeNs deadline = 0;
  std::vector<std::string> route_nodes;
  std::vector<LinkId> route;

  std::size_t hops() const { return route.size(); }
  // Wired links that carry reserved windows: everything but the uplink and
  // the final edge-to-end-station hop.
  std::vector<LinkId> scheduled_links() const {
    if (route.size() < 3) return {};
    return {route.begin() + 1, route.end() - 1};
  }
  LinkId last_link() const { return route.back(); }
};

struct RadioConfig {
  TimeNs tti = 62'500;
  int k_max = 10;
  int t_proc_ttis = 1;
  // rb_bytes[flow][k]: bytes RB k carries for that flow in one TTI.
  std::vector<std::vector<std::int64_t>> rb_bytes;
  std::int64_t rb_bytes_default = 96;

  TimeNs proc_delay() const { return tti * t_proc_ttis; }
};

struct SchedulerConfig {
  Rational gamma{1, 2};
  TimeNs min_p = 100'000;
  std::string big_m = "per_constraint";
  // Extra 5GS delay budget the synchronous model reserves before the first
  // wired window; zero places the window at the jitter-free arrival instant.
  TimeNs tam_guard = 0;
  std::int64_t max_nodes = 50'000'000;
  std::int64_t time_limit_ms = 60'000;
};

enum class SimMode { Tam, Aam };

inline std::string_view to_string(SimMode m) { return m == SimMode::Tam ? "tam" : "aam"; }
inline SimMode parse_sim_mode(std::string_view s) {
  if (s == "tam") return SimMode::Tam;
  if (s == "aam") return SimMode::Aam;
  throw ValidationError("unknown sim mode '" + std::string(s) + "' (expected tam|aam)");
}

struct SimConfig {
  SimMode mode = SimMode::Aam;
  TimeNs jitter = 0;  // width J of the U(0, J) extra 5GS delay
  TimeNs skew = 0;    // width S of the U(-S/2, S/2) clock offset
  std::optional<TimeNs> skew_offset;  // fixed offset, overrides sampling
  std::optional<TimeNs> duration;
  std::uint64_t seed = 1;
};

struct Scenario {
  NetworkGraph graph;
  std::vector<DataflowLink> links;
  RadioConfig radio;
  std::vector<FlowSpec> flows;
  SchedulerConfig scheduler;
  SimConfig sim;

  LinkId uplink() const { return uplink_id(links); }
  const FlowSpec& flow(std::size_t i) const { return flows.at(i); }
  std::optional<std::size_t> flow_index(std::string_view id) const {
    for (std::size_t i = 0; i < flows.size(); ++i) {
      if (flows[i].id == id) return i;
    }
    return std::nullopt;
  }
  TimeNs span_on(LinkId l, const FlowSpec& f) const {
    return transmission_span(f.length_bytes, links.at(l).rate_bps);
  }
  std::string link_name(LinkId l) const {
    const DataflowLink& d = links.at(l);
    const std::string to = graph.nodes().at(d.to).id;
    if (d.from == kNoNode) return "5gs-" + to;
    return graph.nodes().at(d.from).id + "-" + to;
  }
};

namespace detail {

inline void reject_unknown_keys(const Json& obj, std::string_view where,
                                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ValidationError(std::string(where) + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ValidationError(std::string(where) + ": unknown key '" + it.key() + "'");
    }
  }
}

template <typename T>
T get_required(const Json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key)) {
    throw ValidationError(std::string(where) + ": missing key '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string(where) + ": bad value for '" + key + "'");
  }
}

template <typename T>
T get_or(const Json& obj, const char* key, T fallback, std::string_view where) {
  if (!obj.contains(key)) return fallback;
  return get_required<T>(obj, key, where);
}

inline Rational parse_gamma(const Json& v) {
  if (v.is_string()) return Rational::from_decimal(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
  if (v.is_number()) return Rational::from_double(v.get<double>());
  throw ValidationError("scheduler: gamma must be a number");
}

inline Json gamma_json(const Rational& g) {
  if (g.den() == 1) return g.num();
  return g.to_double();
}

}  // namespace detail

inline void validate_gamma(const Rational& g) {
  if (g < Rational(0) || g > Rational(1)) {
    throw ValidationError("gamma must lie in [0, 1], got " + std::to_string(g.to_double()));
  }
}

// Resolves routes, fills the rate matrix, and checks structural invariants.
inline void finalize_scenario(Scenario& s) {
  s.links = derive_dataflow_links(s.graph);
  const auto& nodes = s.graph.nodes();
  int gateways = 0;
  int base_stations = 0;
  for (const Node& n : nodes) {
    gateways += n.role == NodeRole::Gateway;
    base_stations += n.role == NodeRole::BaseStation;
  }
  if (gateways != 1) throw ValidationError("network must contain exactly one gateway");
  if (base_stations > 1) throw ValidationError("network may contain at most one base station");

  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const WiredLink& w : s.graph.wired_links()) {
    for (std::size_t end : {w.a, w.b}) {
      const NodeRole r = nodes.at(end).role;
      if (r == NodeRole::UserEquipment || r == NodeRole::BaseStation) {
        throw ValidationError("wired link touches 5GS node '" + nodes[end].id + "'");
      }
    }
    if (w.a == w.b) throw ValidationError("self-loop link at '" + nodes[w.a].id + "'");
    if (!seen.insert(std::minmax(w.a, w.b)).second) {
      throw ValidationError("duplicate link " + nodes[w.a].id + "-" + nodes[w.b].id);
    }
    if (w.rate_bps <= 0) throw ValidationError("link rate must be positive");
    if (w.prop_delay < 0) throw ValidationError("propagation delay must be non-negative");
  }

  const RadioConfig& radio = s.radio;
  if (radio.tti <= 0) throw ValidationError("radio: tti_ns must be positive");
  if (radio.k_max < 1) throw ValidationError("radio: k_max must be >= 1");
  if (radio.t_proc_ttis < 0) throw ValidationError("radio: t_proc_ttis must be >= 0");
  validate_gamma(s.scheduler.gamma);
  if (s.scheduler.min_p <= 0) throw ValidationError("scheduler: min_p_ns must be positive");
  if (s.scheduler.big_m != "per_constraint") {
    throw ValidationError("scheduler: big_m policy must be 'per_constraint'");
  }
  if (s.scheduler.tam_guard < 0) throw ValidationError("scheduler: tam_guard_ns must be >= 0");
  if (s.sim.jitter < 0 || s.sim.skew < 0) throw ValidationError("sim: widths must be >= 0");

  std::set<std::string> flow_ids;
  for (std::size_t fi = 0; fi < s.flows.size(); ++fi) {
    FlowSpec& f = s.flows[fi];
    const std::string where = "flow '" + f.id + "'";
    if (!flow_ids.insert(f.id).second) throw ValidationError("duplicate flow id '" + f.id + "'");
    if (f.period <= 0) throw ValidationError(where + ": period must be positive");
    if (f.length_bytes <= 0) throw ValidationError(where + ": length must be positive");
    if (f.deadline < 0) throw ValidationError(where + ": deadline must be non-negative");
    if (f.route_nodes.size() < 4) {
      throw ValidationError(where + ": route needs UE, gateway, edge switch and end station");
    }
    std::vector<std::size_t> idx;
    for (const std::string& id : f.route_nodes) idx.push_back(s.graph.node_index(id));
    if (nodes[idx[0]].role != NodeRole::UserEquipment) {
      throw ValidationError(where + ": route must start at a user_equipment node");
    }
    if (nodes[idx[1]].role != NodeRole::Gateway) {
      throw ValidationError(where + ": second route node must be the gateway");
    }
    if (nodes[idx.back()].role != NodeRole::EndStation) {
      throw ValidationError(where + ": route must end at an end_station node");
    }
    for (std::size_t k = 2; k + 1 < idx.size(); ++k) {
      if (nodes[idx[k]].role != NodeRole::TsnSwitch) {
        throw ValidationError(where + ": intermediate node '" + nodes[idx[k]].id +
                              "' is not a tsn_switch");
      }
    }
    f.route.clear();
    f.route.push_back(uplink_id(s.links));
    for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
      auto l = find_dataflow_link(s.links, idx[k], idx[k + 1]);
      if (!l) {
        throw ValidationError(where + ": no link between '" + nodes[idx[k]].id + "' and '" +
                              nodes[idx[k + 1]].id + "'");
      }
      if (std::find(f.route.begin(), f.route.end(), *l) != f.route.end()) {
        throw ValidationError(where + ": route revisits a link");
      }
      f.route.push_back(*l);
    }
  }

  auto& rb = s.radio.rb_bytes;
  if (rb.size() < s.flows.size()) rb.resize(s.flows.size());
  if (rb.size() != s.flows.size()) throw ValidationError("radio: rb_bytes rows do not match flows");
  for (std::size_t fi = 0; fi < rb.size(); ++fi) {
    if (rb[fi].empty()) rb[fi].assign(static_cast<std::size_t>(radio.k_max), radio.rb_bytes_default);
    if (rb[fi].size() != static_cast<std::size_t>(radio.k_max)) {
      throw ValidationError("radio: rb_bytes for flow '" + s.flows[fi].id + "' must have k_max entries");
    }
    for (std::int64_t v : rb[fi]) {
      if (v <= 0) throw ValidationError("radio: rb_bytes entries must be positive");
    }
  }
}

inline Scenario parse_scenario(const Json& doc) {
  using detail::get_or;
  using detail::get_required;
  using detail::reject_unknown_keys;
  reject_unknown_keys(doc, "scenario", {"network", "radio", "flows", "scheduler", "sim"});
  Scenario s;

  const Json& net = doc.contains("network") ? doc.at("network") : throw ValidationError("scenario: missing 'network'");
  reject_unknown_keys(net, "network", {"nodes", "links"});
  std::vector<Node> nodes;
  for (const Json& n : get_required<Json>(net, "nodes", "network")) {
    reject_unknown_keys(n, "node", {"id", "role"});
    nodes.push_back({get_required<std::string>(n, "id", "node"),
                     parse_node_role(get_required<std::string>(n, "role", "node"))});
  }
  NetworkGraph probe(nodes, {});
  std::vector<WiredLink> links;
  for (const Json& l : get_required<Json>(net, "links", "network")) {
    reject_unknown_keys(l, "link", {"a", "b", "rate_bps", "prop_delay_ns"});
    WiredLink w;
    w.a = probe.node_index(get_required<std::string>(l, "a", "link"));
    w.b = probe.node_index(get_required<std::string>(l, "b", "link"));
    w.rate_bps = get_or<std::int64_t>(l, "rate_bps", w.rate_bps, "link");
    w.prop_delay = get_or<std::int64_t>(l, "prop_delay_ns", w.prop_delay, "link");
    links.push_back(w);
  }
  s.graph = NetworkGraph(std::move(nodes), std::move(links));

  const Json& radio = doc.contains("radio") ? doc.at("radio") : throw ValidationError("scenario: missing 'radio'");
  reject_unknown_keys(radio, "radio", {"tti_ns", "k_max", "t_proc_ttis", "rb_bytes"});
  s.radio.tti = get_or<std::int64_t>(radio, "tti_ns", s.radio.tti, "radio");
  s.radio.k_max = get_or<int>(radio, "k_max", s.radio.k_max, "radio");
  s.radio.t_proc_ttis = get_or<int>(radio, "t_proc_ttis", s.radio.t_proc_ttis, "radio");
  Json per_flow = Json::object();
  if (radio.contains("rb_bytes")) {
    const Json& rb = radio.at("rb_bytes");
    if (rb.is_number_integer()) {
      s.radio.rb_bytes_default = rb.get<std::int64_t>();
    } else {
      reject_unknown_keys(rb, "radio.rb_bytes", {"default", "per_flow"});
      s.radio.rb_bytes_default = get_or<std::int64_t>(rb, "default", s.radio.rb_bytes_default, "radio.rb_bytes");
      per_flow = get_or<Json>(rb, "per_flow", Json::object(), "radio.rb_bytes");
      if (!per_flow.is_object()) throw ValidationError("radio.rb_bytes.per_flow must be an object");
    }
  }

  const Json& flows = doc.contains("flows") ? doc.at("flows") : throw ValidationError("scenario: missing 'flows'");
  if (!flows.is_array()) throw ValidationError("flows must be an array");
  for (const Json& fj : flows) {
    reject_unknown_keys(fj, "flow", {"id", "period_ns", "length_bytes", "deadline_ns", "route"});
    FlowSpec f;
    f.id = get_required<std::string>(fj, "id", "flow");
    f.period = get_required<std::int64_t>(fj, "period_ns", "flow");
    f.length_bytes = get_required<std::int64_t>(fj, "length_bytes", "flow");
    f.deadline = get_required<std::int64_t>(fj, "deadline_ns", "flow");
    f.route_nodes = get_required<std::vector<std::string>>(fj, "route", "flow");
    s.flows.push_back(std::move(f));
  }
  s.radio.rb_bytes.assign(s.flows.size(), {});
  for (auto it = per_flow.begin(); it != per_flow.end(); ++it) {
    auto fi = s.flow_index(it.key());
    if (!fi) throw ValidationError("radio.rb_bytes.per_flow: unknown flow '" + it.key() + "'");
    try {
      s.radio.rb_bytes[*fi] = it.value().get<std::vector<std::int64_t>>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("radio.rb_bytes.per_flow: bad row for '" + it.key() + "'");
    }
  }

  if (doc.contains("scheduler")) {
    const Json& sc = doc.at("scheduler");
    reject_unknown_keys(sc, "scheduler",
                        {"gamma", "min_p_ns", "big_m", "tam_guard_ns", "max_nodes", "time_limit_ms"});
    if (sc.contains("gamma")) s.scheduler.gamma = detail::parse_gamma(sc.at("gamma"));
    s.scheduler.min_p = get_or<std::int64_t>(sc, "min_p_ns", s.scheduler.min_p, "scheduler");
    s.scheduler.big_m = get_or<std::string>(sc, "big_m", s.scheduler.big_m, "scheduler");
    s.scheduler.tam_guard = get_or<std::int64_t>(sc, "tam_guard_ns", s.scheduler.tam_guard, "scheduler");
    s.scheduler.max_nodes = get_or<std::int64_t>(sc, "max_nodes", s.scheduler.max_nodes, "scheduler");
    s.scheduler.time_limit_ms =
        get_or<std::int64_t>(sc, "time_limit_ms", s.scheduler.time_limit_ms, "scheduler");
  }
  if (doc.contains("sim")) {
    const Json& sm = doc.at("sim");
    reject_unknown_keys(sm, "sim", {"mode", "jitter_ns", "skew_ns", "skew_offset_ns", "duration_ns", "seed"});
    s.sim.mode = parse_sim_mode(get_or<std::string>(sm, "mode", "aam", "sim"));
    s.sim.jitter = get_or<std::int64_t>(sm, "jitter_ns", 0, "sim");
    s.sim.skew = get_or<std::int64_t>(sm, "skew_ns", 0, "sim");
    if (sm.contains("skew_offset_ns")) s.sim.skew_offset = get_required<std::int64_t>(sm, "skew_offset_ns", "sim");
    if (sm.contains("duration_ns")) s.sim.duration = get_required<std::int64_t>(sm, "duration_ns", "sim");
    s.sim.seed = get_or<std::uint64_t>(sm, "seed", 1, "sim");
  }
  finalize_scenario(s);
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("scenario '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_scenario(doc);
}

// The parts of a scenario a schedule depends on: topology, radio grid, flows.
inline Json scenario_core_json(const Scenario& s) {
  Json nodes = Json::array();
  for (const Node& n : s.graph.nodes()) nodes.push_back({{"id", n.id}, {"role", to_string(n.role)}});
  Json links = Json::array();
  for (const WiredLink& w : s.graph.wired_links()) {
    links.push_back({{"a", s.graph.nodes()[w.a].id},
                     {"b", s.graph.nodes()[w.b].id},
                     {"rate_bps", w.rate_bps},
                     {"prop_delay_ns", w.prop_delay}});
  }
  Json per_flow = Json::object();
  for (std::size_t i = 0; i < s.flows.size(); ++i) per_flow[s.flows[i].id] = s.radio.rb_bytes.at(i);
  Json flows = Json::array();
  for (const FlowSpec& f : s.flows) {
    flows.push_back({{"id", f.id},
                     {"period_ns", f.period},
                     {"length_bytes", f.length_bytes},
                     {"deadline_ns", f.deadline},
                     {"route", f.route_nodes}});
  }
  return {{"network", {{"nodes", nodes}, {"links", links}}},
          {"radio",
           {{"tti_ns", s.radio.tti},
            {"k_max", s.radio.k_max},
            {"t_proc_ttis", s.radio.t_proc_ttis},
            {"rb_bytes", {{"default", s.radio.rb_bytes_default}, {"per_flow", per_flow}}}}},
          {"flows", flows}};
}

inline Json scenario_to_json(const Scenario& s) {
  Json doc = scenario_core_json(s);
  doc["scheduler"] = {{"gamma", detail::gamma_json(s.scheduler.gamma)},
                      {"min_p_ns", s.scheduler.min_p},
                      {"big_m", s.scheduler.big_m},
                      {"tam_guard_ns", s.scheduler.tam_guard},
                      {"max_nodes", s.scheduler.max_nodes},
                      {"time_limit_ms", s.scheduler.time_limit_ms}};
  Json sim = {{"mode", to_string(s.sim.mode)},
              {"jitter_ns", s.sim.jitter},
              {"skew_ns", s.sim.skew},
              {"seed", s.sim.seed}};
  if (s.sim.skew_offset) sim["skew_offset_ns"] = *s.sim.skew_offset;
  if (s.sim.duration) sim["duration_ns"] = *s.sim.duration;
  doc["sim"] = sim;
  return doc;
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

// Content digest that schedule files embed so mismatched pairs are refused.
inline std::string scenario_digest(const Scenario& s) {
  return sha256_hex(scenario_core_json(s).dump());
}

}  // namespace converged
