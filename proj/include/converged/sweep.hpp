#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "converged/metrics.hpp"
#include "converged/pipeline.hpp"

namespace converged {

enum class SweepKind { Jitter, Skew, FlowCount, Gamma };

inline std::string_view to_string(SweepKind k) {
  switch (k) {
    case SweepKind::Jitter: return "jitter";
    case SweepKind::Skew: return "skew";
    case SweepKind::FlowCount: return "flow_count";
    case SweepKind::Gamma: return "gamma";
  }
  return "?";
}

inline SweepKind parse_sweep_kind(std::string_view s) {
  for (SweepKind k : {SweepKind::Jitter, SweepKind::Skew, SweepKind::FlowCount, SweepKind::Gamma}) {
    if (to_string(k) == s) return k;
  }
  if (s == "flowcount" || s == "flows") return SweepKind::FlowCount;
  throw ValidationError("unknown sweep '" + std::string(s) + "' (expected jitter|skew|flow_count|gamma)");
}

// Points are kept as text: nanoseconds for jitter and skew, a count for
// flow_count, a decimal for gamma.
struct SweepSpec {
  SweepKind kind = SweepKind::Jitter;
  std::vector<std::string> points;
  int seeds = 20;
};

inline std::vector<std::string> default_points(SweepKind k) {
  switch (k) {
    case SweepKind::Jitter: return {"0", "10000", "20000", "30000", "40000", "50000"};
    case SweepKind::Skew: return {"20000", "40000", "60000", "80000", "100000"};
    case SweepKind::FlowCount: return {"5", "10", "15", "20", "25"};
    case SweepKind::Gamma: return {"0", "0.2", "0.4", "0.6", "0.8", "1"};
  }
  return {};
}

inline int sweep_threads() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CONVERGED_SCHED_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n > 0 ? n : cap, cap);
  }
  return std::max(1, n);
}

// Runs tasks 0..n-1 on a small pool. Results go to caller-owned slots, so
// the output order never depends on scheduling.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(sweep_threads()), n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct SweepRow {
  std::string value;
  int seed = 0;
  sim::SimReport report;
};

struct SweepSummary {
  std::string value;
  double mce = NAN, mcv = NAN, std_ratio = NAN, tsn_usage = NAN, fiveg_usage = NAN;
  double drops = NAN;
  std::int64_t deadline_misses = 0;
  std::int64_t link_overlaps = 0;
  int runs = 0;
};

struct SweepSeries {
  SimMode mode = SimMode::Aam;
  ModelKind model = ModelKind::Atsm;
  std::vector<SweepRow> rows;  // point-major, seed-minor
  std::vector<SweepSummary> summary;
};

struct PointFailure {
  std::string value;
  std::string model;
  std::string message;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<SweepSeries> series;
  std::vector<PointFailure> failures;
  std::map<std::string, std::string> schedule_status;  // "<model>@<value>" -> solver status
};

namespace detail {

inline double nan_mean(const std::vector<double>& v) {
  double s = 0;
  int n = 0;
  for (double x : v) {
    if (!std::isnan(x)) {
      s += x;
      ++n;
    }
  }
  return n ? s / n : NAN;
}

inline void summarize(SweepSeries& s, const std::vector<std::string>& points) {
  for (const std::string& p : points) {
    std::vector<double> mce, mcv, ratio, tsn, fiveg, drops;
    SweepSummary sum;
    sum.value = p;
    for (const SweepRow& r : s.rows) {
      if (r.value != p) continue;
      mce.push_back(r.report.mce);
      mcv.push_back(r.report.mcv);
      ratio.push_back(r.report.std_ratio);
      tsn.push_back(r.report.tsn_usage);
      fiveg.push_back(r.report.fiveg_usage);
      drops.push_back(static_cast<double>(r.report.drops));
      sum.deadline_misses += r.report.deadline_misses;
      sum.link_overlaps += r.report.link_overlaps;
      ++sum.runs;
    }
    if (sum.runs == 0) continue;
    sum.mce = nan_mean(mce);
    sum.mcv = nan_mean(mcv);
    sum.std_ratio = nan_mean(ratio);
    sum.tsn_usage = nan_mean(tsn);
    sum.fiveg_usage = nan_mean(fiveg);
    sum.drops = nan_mean(drops);
    s.summary.push_back(sum);
  }
}

// N identical flows (1 ms period and deadline, 200 B), routed like the base
// scenario's flows in turn.
inline Scenario with_flow_count(const Scenario& base, int count) {
  if (base.flows.empty()) throw ValidationError("flow_count sweep needs at least one flow in the base scenario");
  Json doc = scenario_to_json(base);
  Json flows = Json::array();
  for (int n = 0; n < count; ++n) {
    const FlowSpec& tmpl = base.flows[static_cast<std::size_t>(n) % base.flows.size()];
    flows.push_back({{"id", "n" + std::to_string(n + 1)},
                     {"period_ns", 1'000'000},
                     {"length_bytes", 200},
                     {"deadline_ns", 1'000'000},
                     {"route", tmpl.route_nodes}});
  }
  doc["flows"] = flows;
  doc["radio"]["rb_bytes"] = base.radio.rb_bytes_default;
  return parse_scenario(doc);
}

}  // namespace detail

inline SweepResult run_sweep(const Scenario& base, const SweepSpec& spec) {
  SweepResult res;
  res.spec = spec;
  if (res.spec.points.empty()) res.spec.points = default_points(spec.kind);
  if (res.spec.seeds < 1) throw ValidationError("sweep needs at least one seed per point");
  const auto& points = res.spec.points;
  const bool both_models = spec.kind != SweepKind::Gamma;

  // One scenario and one schedule pair per point.
  struct Point {
    Scenario sc;
    sim::RunConfig cfg;
    std::optional<Schedule> atsm, stsm;
  };
  std::vector<Point> pts(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    Point& p = pts[i];
    p.sc = spec.kind == SweepKind::FlowCount ? detail::with_flow_count(base, std::stoi(points[i])) : base;
    p.cfg.jitter = base.sim.jitter;
    p.cfg.skew = base.sim.skew;
    p.cfg.duration = base.sim.duration.value_or(0);
    if (spec.kind == SweepKind::Jitter) p.cfg.jitter = std::stoll(points[i]);
    if (spec.kind == SweepKind::Skew) p.cfg.skew = std::stoll(points[i]);
    if (spec.kind == SweepKind::Gamma) {
      p.sc.scheduler.gamma = Rational::from_decimal(points[i]);
      validate_gamma(p.sc.scheduler.gamma);
    }
  }

  // Jitter and skew sweeps share one schedule pair across all points.
  const bool shared = spec.kind == SweepKind::Jitter || spec.kind == SweepKind::Skew;
  struct SolveTask {
    std::size_t point;
    ModelKind model;
  };
  std::vector<SolveTask> solves;
  for (std::size_t i = 0; i < (shared ? std::min<std::size_t>(1, pts.size()) : pts.size()); ++i) {
    solves.push_back({i, ModelKind::Atsm});
    if (both_models) solves.push_back({i, ModelKind::Stsm});
  }
  std::vector<ScheduleOutcome> outcomes(solves.size());
  parallel_for(solves.size(), [&](std::size_t t) {
    const Point& p = pts[solves[t].point];
    outcomes[t] = make_schedule(p.sc, solves[t].model, p.sc.scheduler.gamma, limits_of(p.sc));
  });
  for (std::size_t t = 0; t < solves.size(); ++t) {
    const std::string model(to_string(solves[t].model));
    const ScheduleOutcome& o = outcomes[t];
    const std::size_t first = solves[t].point;
    const std::size_t last = shared ? pts.size() : first + 1;
    for (std::size_t i = first; i < last; ++i) {
      res.schedule_status[model + "@" + points[i]] = std::string(to_string(o.status));
      if (!o.schedule) {
        res.failures.push_back({points[i], model, o.message});
        continue;
      }
      (solves[t].model == ModelKind::Atsm ? pts[i].atsm : pts[i].stsm) = o.schedule;
    }
  }

  if (both_models) res.series.push_back({SimMode::Tam, ModelKind::Stsm, {}, {}});
  res.series.push_back({SimMode::Aam, ModelKind::Atsm, {}, {}});
  for (SweepSeries& s : res.series) {
    struct RunTask {
      std::size_t point;
      int seed;
    };
    std::vector<RunTask> tasks;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& sched = s.model == ModelKind::Atsm ? pts[i].atsm : pts[i].stsm;
      if (!sched) continue;
      for (int seed = 1; seed <= res.spec.seeds; ++seed) tasks.push_back({i, seed});
    }
    std::vector<SweepRow> rows(tasks.size());
    parallel_for(tasks.size(), [&](std::size_t t) {
      const Point& p = pts[tasks[t].point];
      sim::RunConfig cfg = p.cfg;
      cfg.mode = s.mode;
      cfg.seed = static_cast<std::uint64_t>(tasks[t].seed);
      const Schedule& sched = s.model == ModelKind::Atsm ? *p.atsm : *p.stsm;
      rows[t] = {points[tasks[t].point], tasks[t].seed, sim::simulate(p.sc, sched, cfg)};
    });
    s.rows = std::move(rows);
    detail::summarize(s, points);
  }
  return res;
}

inline std::string sweep_csv(const SweepResult& r, const SweepSeries& s) {
  std::ostringstream os;
  os << sim::kReportHeader << '\n';
  const std::string param(to_string(r.spec.kind));
  for (const SweepRow& row : s.rows) sim::write_report_row(os, param, row.value, std::to_string(row.seed), row.report);
  for (const SweepSummary& m : s.summary) {
    sim::SimReport agg;
    agg.mce = m.mce;
    agg.mcv = m.mcv;
    agg.std_ratio = m.std_ratio;
    agg.tsn_usage = m.tsn_usage;
    agg.fiveg_usage = m.fiveg_usage;
    agg.drops = static_cast<std::int64_t>(std::llround(m.drops));
    sim::write_report_row(os, param, m.value, "mean", agg);
  }
  return os.str();
}

// One CSV per (sweep, mode) plus a metadata file.
inline std::vector<std::string> write_sweep(const SweepResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  const std::string kind(to_string(r.spec.kind));
  for (const SweepSeries& s : r.series) {
    const auto path = dir / (kind + "_" + std::string(to_string(s.mode)) + ".csv");
    std::ofstream(path) << sweep_csv(r, s);
    written.push_back(path.string());
  }
  Json meta = {{"sweep", kind}, {"points", r.spec.points}, {"seeds_per_point", r.spec.seeds},
               {"statistic", "mean over seeds"}, {"schedules", r.schedule_status}};
  Json failures = Json::array();
  for (const PointFailure& f : r.failures) failures.push_back({{"value", f.value}, {"model", f.model}, {"message", f.message}});
  meta["failures"] = failures;
  const auto mpath = dir / (kind + "_meta.json");
  std::ofstream(mpath) << meta.dump(2) << '\n';
  written.push_back(mpath.string());
  return written;
}

}  // namespace converged
