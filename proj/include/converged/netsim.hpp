#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "converged/schedule.hpp"

namespace converged::sim {

enum class DropReason { None, ReplacedInBuffer, DeadlineMissNotTracked };

struct PacketTrace {
  std::size_t flow = 0;
  std::int64_t seq = 0;
  TimeNs t_gen = 0;                    // UE clock
  TimeNs t_gw = 0;                     // TSN clock, arrival at the gateway
  std::optional<TimeNs> wait;          // AAM stamp
  std::optional<TimeNs> t_edge;        // arrival at the edge switch
  std::optional<TimeNs> t_deliver;     // arrival at the end station
  DropReason drop = DropReason::None;

  bool dropped() const { return drop != DropReason::None; }
};

struct LinkUse {
  TimeNs start = 0;
  TimeNs end = 0;
  std::size_t flow = 0;
  std::int64_t seq = 0;
};

struct RunConfig {
  SimMode mode = SimMode::Aam;
  TimeNs jitter = 0;
  TimeNs skew = 0;
  std::optional<TimeNs> skew_offset;
  TimeNs duration = 0;  // 0 picks max(10 * T_5GS, 100 ms)
  std::uint64_t seed = 1;
};

struct RunResult {
  RunConfig config;
  TimeNs skew_offset = 0;
  TimeNs duration = 0;
  std::vector<PacketTrace> packets;        // ordered by (flow, seq)
  std::vector<std::vector<LinkUse>> link_use;  // per dataflow link
  std::vector<TimeNs> reserved_gateway_time;   // per flow, windows starting in [0, duration)
  std::int64_t queue_warnings = 0;
  std::int64_t in_flight = 0;
};

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline TimeNs default_duration(const Schedule& s) {
  return std::max<TimeNs>(10 * s.fiveg_hyper_period, 100 * kNsPerMs);
}

namespace detail {

// Event kinds in tie-break order. An arrival at the gateway precedes a gate
// opening at the same instant, so the frame makes that opening.
enum class Kind : int { GwArrive = 0, GateOpen = 1, SwitchArrive = 2, HoldRelease = 3, Deliver = 4 };

struct Event {
  TimeNs time;
  std::size_t node;
  Kind kind;
  std::size_t flow;
  std::int64_t seq;
  std::size_t hop;  // index into the flow's route

  auto key() const { return std::tuple(time, node, static_cast<int>(kind), flow, seq); }
  bool operator>(const Event& o) const { return key() > o.key(); }
};

inline double unit(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

}  // namespace detail

// Constant clock offset of the run, tsn_time = fiveg_time + offset. Drawn from
// its own stream so that it does not shift the jitter samples.
inline TimeNs sample_skew(std::uint64_t seed, TimeNs width) {
  if (width <= 0) return 0;
  auto g = detail::stream(seed, 0x5eed, 1);
  return static_cast<TimeNs>(std::trunc((detail::unit(g) - 0.5) * static_cast<double>(width)));
}

inline void check_compatible(const Scenario& sc, const Schedule& s) {
  if (s.scenario_digest != scenario_digest(sc)) throw SimError("schedule does not belong to this scenario");
  if (s.flows.size() != sc.flows.size()) throw SimError("schedule flow count does not match scenario");
  for (std::size_t i = 0; i < sc.flows.size(); ++i) {
    const auto links = sc.flows[i].scheduled_links();
    const FlowSchedule& fs = s.flows[i];
    if (fs.tsn.size() != links.size()) throw SimError("flow '" + sc.flows[i].id + "': window count mismatch");
    for (std::size_t k = 0; k < links.size(); ++k) {
      if (fs.tsn[k].link != links[k]) throw SimError("flow '" + sc.flows[i].id + "': window off route");
      if (fs.tsn[k].period <= 0) throw SimError("flow '" + sc.flows[i].id + "': non-positive window period");
    }
    if (fs.hold_period <= 0) throw SimError("flow '" + sc.flows[i].id + "': non-positive reserved period");
  }
}

// Discrete-event run of one schedule. The TSN clock is the simulation clock.
inline RunResult run(const Scenario& sc, const Schedule& sched, RunConfig cfg) {
  using detail::Event;
  using detail::Kind;
  check_compatible(sc, sched);
  if (cfg.duration <= 0) cfg.duration = default_duration(sched);
  if (cfg.jitter < 0 || cfg.skew < 0) throw SimError("jitter and skew widths must be non-negative");

  RunResult res;
  res.config = cfg;
  res.duration = cfg.duration;
  res.skew_offset = cfg.skew_offset ? *cfg.skew_offset : sample_skew(cfg.seed, cfg.skew);
  res.link_use.resize(sc.links.size());
  const bool aam = cfg.mode == SimMode::Aam;
  const TimeNs tti = sc.radio.tti;
  const std::size_t nf = sc.flows.size();
  const std::size_t gw = *sc.graph.gateway();

  std::priority_queue<Event, std::vector<Event>, std::greater<>> q;
  std::vector<std::size_t> first_packet(nf, 0);
  std::vector<std::int64_t> not_arrived(nf, 0);

  // Generation and 5GS delivery.
  for (std::size_t fi = 0; fi < nf; ++fi) {
    const FlowSpec& f = sc.flows[fi];
    const FlowSchedule& fs = sched.flows[fi];
    auto rng = detail::stream(cfg.seed, fi, 0x1177);
    first_packet[fi] = res.packets.size();
    const TimeNs phase = fs.radio.start_tti * tti;
    const TimeNs radio = fs.radio.tti_count * tti + sc.radio.proc_delay();
    for (std::int64_t k = 0; k * f.period + phase < cfg.duration; ++k) {
      const double u = detail::unit(rng);
      const TimeNs j = std::min<TimeNs>(cfg.jitter, static_cast<TimeNs>(u * static_cast<double>(cfg.jitter + 1)));
      PacketTrace p;
      p.flow = fi;
      p.seq = k;
      p.t_gen = k * f.period + phase;
      p.t_gw = p.t_gen + radio + j + res.skew_offset;
      q.push({p.t_gw, gw, Kind::GwArrive, fi, k, 0});
      res.packets.push_back(p);
      ++not_arrived[fi];
    }
  }
  auto packet = [&](std::size_t fi, std::int64_t seq) -> PacketTrace& {
    return res.packets[first_packet[fi] + static_cast<std::size_t>(seq)];
  };

  // Earliest window index a flow may still use on each scheduled hop.
  std::vector<std::vector<std::optional<std::int64_t>>> next_slot(nf);
  for (std::size_t fi = 0; fi < nf; ++fi) next_slot[fi].resize(sched.flows[fi].tsn.size());

  // Reserved gateway time, for the usage figure.
  res.reserved_gateway_time.assign(nf, 0);
  for (std::size_t fi = 0; fi < nf; ++fi) {
    const TsnInstance& w = sched.flows[fi].tsn.front();
    const std::int64_t first = ceil_div(0 - w.offset, w.period);
    const std::int64_t last = ceil_div(cfg.duration - w.offset, w.period);  // exclusive
    res.reserved_gateway_time[fi] = std::max<std::int64_t>(0, last - first) * w.span;
  }

  // AAM gateway state: one-packet buffer per flow and its receive time.
  std::vector<std::optional<std::int64_t>> buffer(nf);
  std::vector<TimeNs> received(nf, 0);
  if (aam) {
    for (std::size_t fi = 0; fi < nf; ++fi) {
      if (not_arrived[fi] == 0) continue;
      const TsnInstance& w = sched.flows[fi].tsn.front();
      const TimeNs earliest = res.packets[first_packet[fi]].t_gw;
      const TimeNs open = w.offset + ceil_div(earliest - w.offset, w.period) * w.period;
      q.push({open, gw, Kind::GateOpen, fi, 0, 0});
    }
  }

  auto transmit = [&](std::size_t fi, std::int64_t seq, std::size_t hop, TimeNs start) {
    const FlowSpec& f = sc.flows[fi];
    const LinkId l = f.route[hop];
    const TimeNs span = sc.span_on(l, f);
    res.link_use[l].push_back({start, start + span, fi, seq});
    const TimeNs arrive = start + span + sc.links[l].prop_delay;
    if (hop + 1 == f.route.size()) {
      q.push({arrive, sc.links[l].to, Kind::Deliver, fi, seq, hop});
    } else {
      q.push({arrive, sc.links[l].to, Kind::SwitchArrive, fi, seq, hop + 1});
    }
  };

  // First window of (flow, scheduled hop) at or after t, one frame per window.
  auto next_window = [&](std::size_t fi, std::size_t widx, TimeNs t) {
    const TsnInstance& w = sched.flows[fi].tsn[widx];
    const std::int64_t m_ready = ceil_div(t - w.offset, w.period);
    std::int64_t m = m_ready;
    auto& slot = next_slot[fi][widx];
    if (slot && *slot > m) m = *slot;
    if (m - m_ready >= 2) ++res.queue_warnings;
    slot = m + 1;
    return w.offset + m * w.period;
  };

  while (!q.empty()) {
    const Event e = q.top();
    q.pop();
    const FlowSchedule& fs = sched.flows[e.flow];
    switch (e.kind) {
      case Kind::GwArrive: {
        --not_arrived[e.flow];
        if (aam) {
          if (buffer[e.flow]) packet(e.flow, *buffer[e.flow]).drop = DropReason::ReplacedInBuffer;
          buffer[e.flow] = e.seq;
          received[e.flow] = e.time;
        } else {
          transmit(e.flow, e.seq, 1, next_window(e.flow, 0, e.time));
        }
        break;
      }
      case Kind::GateOpen: {
        if (buffer[e.flow]) {
          const std::int64_t seq = *buffer[e.flow];
          const TimeNs wait = e.time - received[e.flow];
          if (wait < 0 || wait >= fs.hold_period) throw SimError("gateway wait stamp outside [0, T)");
          packet(e.flow, seq).wait = wait;
          buffer[e.flow].reset();
          // The gate opening is this flow's window on the first hop.
          next_slot[e.flow][0] = ceil_div(e.time - fs.tsn[0].offset, fs.tsn[0].period) + 1;
          transmit(e.flow, seq, 1, e.time);
        }
        if (not_arrived[e.flow] > 0 || buffer[e.flow]) {
          q.push({e.time + fs.tsn[0].period, gw, Kind::GateOpen, e.flow, 0, 0});
        }
        break;
      }
      case Kind::SwitchArrive: {
        const FlowSpec& f = sc.flows[e.flow];
        if (e.hop + 1 < f.route.size()) {
          transmit(e.flow, e.seq, e.hop, next_window(e.flow, e.hop - 1, e.time));
          break;
        }
        // Edge switch.
        PacketTrace& p = packet(e.flow, e.seq);
        p.t_edge = e.time;
        if (aam) {
          q.push({e.time + fs.hold_period - *p.wait, e.node, Kind::HoldRelease, e.flow, e.seq, e.hop});
        } else {
          transmit(e.flow, e.seq, e.hop, e.time);
        }
        break;
      }
      case Kind::HoldRelease:
        transmit(e.flow, e.seq, e.hop, e.time);
        break;
      case Kind::Deliver:
        packet(e.flow, e.seq).t_deliver = e.time;
        break;
    }
  }
  for (const PacketTrace& p : res.packets) {
    if (!p.dropped() && !p.t_deliver) ++res.in_flight;
  }
  return res;
}

// Pairs of overlapping transmissions on any wired link.
inline std::int64_t count_link_overlaps(const Scenario& sc, const RunResult& r) {
  std::int64_t overlaps = 0;
  for (LinkId l = 0; l < r.link_use.size(); ++l) {
    if (sc.links[l].domain != LinkDomain::Tsn) continue;
    std::vector<LinkUse> u = r.link_use[l];
    std::sort(u.begin(), u.end(), [](const LinkUse& a, const LinkUse& b) { return a.start < b.start; });
    TimeNs busy_until = INT64_MIN;
    for (const LinkUse& x : u) {
      if (x.start < busy_until) ++overlaps;
      busy_until = std::max(busy_until, x.end);
    }
  }
  return overlaps;
}

}  // namespace converged::sim
