#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "converged/netsim.hpp"

namespace converged::sim {

// Exact running moments over integer samples.
struct Moments {
  std::int64_t n = 0;
  __int128 sum = 0;
  __int128 sum_sq = 0;

  void add(std::int64_t x) {
    ++n;
    sum += x;
    sum_sq += static_cast<__int128>(x) * x;
  }
  double mean() const { return n ? static_cast<double>(sum) / static_cast<double>(n) : 0.0; }
  // n^2 * variance, exact.
  __int128 scaled_var() const { return static_cast<__int128>(n) * sum_sq - sum * sum; }
  // Population standard deviation.
  double stddev() const {
    if (n == 0) return 0.0;
    return std::sqrt(static_cast<double>(scaled_var())) / static_cast<double>(n);
  }
};

struct FlowMetrics {
  std::string id;
  std::int64_t generated = 0;
  std::int64_t delivered = 0;
  std::int64_t dropped = 0;
  std::int64_t deadline_misses = 0;
  TimeNs scheduled = 0;
  Moments e2e;
  Moments fiveg;      // gateway arrival minus generation, both in TSN time
  Moments residence;  // delivery minus gateway arrival
  std::optional<double> ce;
  std::optional<double> cv;
  std::optional<double> std_ratio;  // absent when the 5GS delay does not vary
};

struct SimReport {
  SimMode mode = SimMode::Aam;
  std::uint64_t seed = 1;
  TimeNs jitter = 0;
  TimeNs skew = 0;
  TimeNs skew_offset = 0;
  TimeNs duration = 0;
  std::vector<FlowMetrics> flows;
  double mce = std::numeric_limits<double>::quiet_NaN();
  double mcv = std::numeric_limits<double>::quiet_NaN();
  double std_ratio = std::numeric_limits<double>::quiet_NaN();
  double tsn_usage = 0;
  double fiveg_usage = 0;
  std::int64_t drops = 0;
  std::int64_t deadline_misses = 0;
  std::int64_t link_overlaps = 0;
  std::int64_t queue_warnings = 0;
  std::int64_t in_flight = 0;
  std::vector<std::string> flagged;  // flows without deliveries
};

inline SimReport compute_metrics(const Scenario& sc, const Schedule& sched, const RunResult& r) {
  SimReport rep;
  rep.mode = r.config.mode;
  rep.seed = r.config.seed;
  rep.jitter = r.config.jitter;
  rep.skew = r.config.skew;
  rep.skew_offset = r.skew_offset;
  rep.duration = r.duration;
  rep.flows.resize(sc.flows.size());
  for (std::size_t i = 0; i < sc.flows.size(); ++i) {
    rep.flows[i].id = sc.flows[i].id;
    rep.flows[i].scheduled = sched.flows[i].e2e_delay;
  }
  for (const PacketTrace& p : r.packets) {
    FlowMetrics& fm = rep.flows[p.flow];
    ++fm.generated;
    if (p.dropped()) {
      ++fm.dropped;
      continue;
    }
    if (!p.t_deliver) continue;
    ++fm.delivered;
    const TimeNs gen_tsn = p.t_gen + r.skew_offset;
    const TimeNs e2e = *p.t_deliver - gen_tsn;
    fm.e2e.add(e2e);
    fm.fiveg.add(p.t_gw - gen_tsn);
    fm.residence.add(*p.t_deliver - p.t_gw);
    if (e2e > sc.flows[p.flow].deadline) ++fm.deadline_misses;
  }
  double ce_sum = 0, cv_sum = 0, ratio_sum = 0;
  int counted = 0, ratios = 0;
  for (FlowMetrics& fm : rep.flows) {
    rep.drops += fm.dropped;
    rep.deadline_misses += fm.deadline_misses;
    if (fm.delivered == 0) {
      rep.flagged.push_back(fm.id);
      continue;
    }
    const double mean = fm.e2e.mean();
    fm.ce = mean / static_cast<double>(fm.scheduled);
    fm.cv = mean > 0 ? fm.e2e.stddev() / mean : 0.0;
    ce_sum += *fm.ce;
    cv_sum += *fm.cv;
    ++counted;
    if (fm.fiveg.scaled_var() > 0) {
      // Same n on both sides, so equal scaled variances give exactly 1.
      fm.std_ratio = std::sqrt(static_cast<double>(fm.e2e.scaled_var())) /
                     std::sqrt(static_cast<double>(fm.fiveg.scaled_var()));
      ratio_sum += *fm.std_ratio;
      ++ratios;
    }
  }
  if (counted > 0) {
    rep.mce = ce_sum / counted;
    rep.mcv = cv_sum / counted;
  }
  if (ratios > 0) rep.std_ratio = ratio_sum / ratios;
  TimeNs reserved = 0;
  for (TimeNs t : r.reserved_gateway_time) reserved += t;
  rep.tsn_usage = static_cast<double>(reserved) / static_cast<double>(r.duration);
  rep.fiveg_usage = static_cast<double>(sched.rbs_in_use()) / static_cast<double>(sc.radio.k_max);
  rep.link_overlaps = count_link_overlaps(sc, r);
  rep.queue_warnings = r.queue_warnings;
  rep.in_flight = r.in_flight;
  return rep;
}

inline SimReport simulate(const Scenario& sc, const Schedule& sched, const RunConfig& cfg) {
  return compute_metrics(sc, sched, run(sc, sched, cfg));
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

inline constexpr const char* kTraceHeader = "flow_id,seq,t_gen_ns,t_gw_ns,wait_ns,t_edge_ns,t_deliver_ns,dropped";
inline constexpr const char* kReportHeader =
    "sweep_param,value,seed,mce,mcv,std_ratio,tsn_usage,fiveg_usage,drops";

inline void write_trace_csv(std::ostream& os, const Scenario& sc, const RunResult& r) {
  auto opt = [](const std::optional<TimeNs>& v) { return v ? std::to_string(*v) : std::string(); };
  os << kTraceHeader << '\n';
  for (const PacketTrace& p : r.packets) {
    os << sc.flows[p.flow].id << ',' << p.seq << ',' << p.t_gen << ',' << p.t_gw << ',' << opt(p.wait) << ','
       << opt(p.t_edge) << ',' << opt(p.t_deliver) << ',' << (p.dropped() ? 1 : 0) << '\n';
  }
}

inline void write_report_row(std::ostream& os, const std::string& param, const std::string& value,
                             const std::string& seed, const SimReport& r) {
  os << param << ',' << value << ',' << seed << ',' << format_double(r.mce) << ',' << format_double(r.mcv) << ','
     << format_double(r.std_ratio) << ',' << format_double(r.tsn_usage) << ',' << format_double(r.fiveg_usage)
     << ',' << r.drops << '\n';
}

}  // namespace converged::sim
