// converged-sched: schedule, simulate, sweep and verify converged 5G/TSN scenarios.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "converged/converged.hpp"

namespace {

using namespace converged;

enum Exit : int { kOk = 0, kInvalid = 1, kInfeasible = 2, kTimeout = 3 };

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
}

Rational gamma_flag(const std::string& text) {
  Rational g;
  try {
    g = Rational::from_decimal(text);
  } catch (const std::exception&) {
    throw ValidationError("--gamma: '" + text + "' is not a number");
  }
  if (g < Rational(0) || g > Rational(1)) throw ValidationError("--gamma must lie in [0, 1], got " + text);
  return g;
}

struct ScheduleArgs {
  std::string scenario;
  std::string model = "atsm";
  std::string gamma;
  std::string out;
  std::string lp;
};

int cmd_schedule(const ScheduleArgs& a) {
  const Scenario sc = load_scenario(a.scenario);
  const ModelKind kind = parse_model_kind(a.model);
  const Rational gamma = a.gamma.empty() ? sc.scheduler.gamma : gamma_flag(a.gamma);
  if (!a.lp.empty()) {
    try {
      write_text(a.lp, ilp::export_lp(build_model(sc, kind, gamma).model));
    } catch (const InfeasibleError&) {
      // reported below by make_schedule
    }
  }
  const ScheduleOutcome o = make_schedule(sc, kind, gamma, limits_of(sc));
  std::fprintf(stderr, "status=%s objective=%s nodes=%lld wall_ms=%.1f\n", std::string(to_string(o.status)).c_str(),
               o.schedule ? o.objective.str().c_str() : "-", static_cast<long long>(o.nodes), o.wall_ms);
  if (o.schedule) write_text(a.out, schedule_to_json(sc, *o.schedule).dump(2) + "\n");
  switch (o.status) {
    case ilp::SolveStatus::Optimal: return kOk;
    case ilp::SolveStatus::Infeasible:
      std::fprintf(stderr, "infeasible: %s\n", o.message.c_str());
      return kInfeasible;
    case ilp::SolveStatus::TimedOut:
      std::fprintf(stderr, "timeout: %s\n", o.schedule ? "wrote best schedule found" : o.message.c_str());
      return kTimeout;
  }
  return kInvalid;
}

struct SimulateArgs {
  std::string scenario;
  std::string schedule;
  std::string mode;
  std::optional<TimeNs> jitter, skew, skew_offset, duration;
  std::uint64_t seed = 1;
  std::string traces;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  const Scenario sc = load_scenario(a.scenario);
  const Schedule sched = load_schedule(sc, a.schedule);
  sim::RunConfig cfg;
  cfg.mode = a.mode.empty() ? sc.sim.mode : parse_sim_mode(a.mode);
  cfg.jitter = a.jitter.value_or(sc.sim.jitter);
  cfg.skew = a.skew.value_or(sc.sim.skew);
  cfg.skew_offset = a.skew_offset ? a.skew_offset : sc.sim.skew_offset;
  cfg.duration = a.duration.value_or(sc.sim.duration.value_or(0));
  cfg.seed = a.seed;
  if (cfg.jitter < 0 || cfg.skew < 0) throw ValidationError("--jitter-ns and --skew-ns must be non-negative");
  const sim::RunResult r = sim::run(sc, sched, cfg);
  const sim::SimReport rep = sim::compute_metrics(sc, sched, r);
  if (!a.traces.empty()) {
    std::ostringstream os;
    sim::write_trace_csv(os, sc, r);
    write_text(a.traces, os.str());
  }
  std::ostringstream os;
  os << sim::kReportHeader << '\n';
  sim::write_report_row(os, "run", std::string(to_string(cfg.mode)), std::to_string(cfg.seed), rep);
  write_text(a.out, os.str());
  std::fprintf(stderr,
               "skew_offset_ns=%lld duration_ns=%lld deadline_misses=%lld link_overlaps=%lld queue_warnings=%lld "
               "in_flight=%lld\n",
               static_cast<long long>(rep.skew_offset), static_cast<long long>(rep.duration),
               static_cast<long long>(rep.deadline_misses), static_cast<long long>(rep.link_overlaps),
               static_cast<long long>(rep.queue_warnings), static_cast<long long>(rep.in_flight));
  for (const std::string& f : rep.flagged) std::fprintf(stderr, "warning: flow %s delivered nothing\n", f.c_str());
  return kOk;
}

struct SweepArgs {
  std::string scenario;
  std::string kind;
  std::vector<std::string> points;
  int seeds = 20;
  std::string out_dir = "sweep_out";
};

int cmd_sweep(const SweepArgs& a) {
  const Scenario sc = load_scenario(a.scenario);
  SweepSpec spec;
  spec.kind = parse_sweep_kind(a.kind);
  spec.points = a.points;
  spec.seeds = a.seeds;
  const SweepResult r = run_sweep(sc, spec);
  for (const std::string& path : write_sweep(r, a.out_dir)) std::printf("%s\n", path.c_str());
  for (const PointFailure& f : r.failures) {
    std::fprintf(stderr, "point %s (%s) failed: %s\n", f.value.c_str(), f.model.c_str(), f.message.c_str());
  }
  return kOk;
}

int cmd_verify(const std::string& scenario_path, const std::string& schedule_path) {
  const Scenario sc = load_scenario(scenario_path);
  const Schedule sched = load_schedule(sc, schedule_path);
  const CheckReport rep = check_schedule(sc, sched);
  bool ok = rep.ok();

  // Same schedule, seen through the model's own rows.
  std::map<std::string, std::vector<std::string>> model_problems;
  std::string model_note;
  try {
    const BuiltModel bm = build_model(sc, sched.model, sched.gamma);
    std::string why;
    if (const auto a = encode_schedule(sc, bm, sched, &why)) {
      for (const ilp::Violation& v : ilp::verify(bm.model, *a)) model_problems[v.family].push_back(v.tag);
    } else {
      model_note = "schedule does not map onto model variables: " + why;
    }
  } catch (const InfeasibleError& e) {
    model_note = std::string("model cannot be built: ") + e.what();
  }
  for (const std::string& fam : rep.families) {
    const auto& p = rep.problems.at(fam);
    std::printf("%-13s %s\n", fam.c_str(), p.empty() ? "pass" : "FAIL");
    for (const std::string& m : p) std::printf("    %s\n", m.c_str());
  }
  if (model_note.empty() && model_problems.empty()) {
    std::printf("%-13s pass\n", "model");
  } else {
    ok = false;
    std::printf("%-13s FAIL\n", "model");
    if (!model_note.empty()) std::printf("    %s\n", model_note.c_str());
    for (const auto& [fam, tags] : model_problems) {
      std::printf("    %s: %zu row(s) violated, first %s\n", fam.c_str(), tags.size(), tags.front().c_str());
    }
  }
  return ok ? kOk : kInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint 5G/TSN schedule synthesis and simulation"};
  app.require_subcommand(1);

  ScheduleArgs sa;
  auto* sched = app.add_subcommand("schedule", "solve a scenario and write a schedule");
  sched->add_option("scenario", sa.scenario, "scenario JSON")->required();
  sched->add_option("--model", sa.model, "atsm or stsm")->check(CLI::IsMember({"atsm", "stsm"}));
  sched->add_option("--gamma", sa.gamma, "objective weight in [0, 1]");
  sched->add_option("--out", sa.out, "schedule output path (default stdout)");
  sched->add_option("--lp", sa.lp, "also write the model in LP format");

  SimulateArgs ma;
  std::int64_t jitter = 0, skew = 0, skew_offset = 0, duration = 0;
  auto* simc = app.add_subcommand("simulate", "simulate a schedule and report metrics");
  simc->add_option("scenario", ma.scenario, "scenario JSON")->required();
  simc->add_option("schedule", ma.schedule, "schedule JSON")->required();
  simc->add_option("--mode", ma.mode, "tam or aam")->check(CLI::IsMember({"tam", "aam"}));
  auto* o_jit = simc->add_option("--jitter-ns", jitter, "extra 5GS delay bound J");
  auto* o_skew = simc->add_option("--skew-ns", skew, "skew width S; offset drawn from [-S/2, S/2]");
  auto* o_off = simc->add_option("--skew-offset-ns", skew_offset, "fixed skew offset, overrides --skew-ns");
  auto* o_dur = simc->add_option("--duration-ns", duration, "simulated time");
  simc->add_option("--seed", ma.seed, "random seed")->default_val(1);
  simc->add_option("--traces", ma.traces, "per-packet trace CSV path");
  simc->add_option("--out", ma.out, "report CSV path (default stdout)");

  SweepArgs wa;
  auto* sweep = app.add_subcommand("sweep", "run one experiment sweep");
  sweep->add_option("scenario", wa.scenario, "base scenario JSON")->required();
  sweep->add_option("--kind", wa.kind, "jitter, skew, flow_count or gamma")->required();
  sweep->add_option("--points", wa.points, "sweep points (ns, count or gamma)");
  sweep->add_option("--seeds", wa.seeds, "seeds per point")->default_val(20);
  sweep->add_option("--out-dir", wa.out_dir, "output directory");

  std::string v_scenario, v_schedule;
  auto* ver = app.add_subcommand("verify", "check a schedule against its scenario");
  ver->add_option("scenario", v_scenario, "scenario JSON")->required();
  ver->add_option("schedule", v_schedule, "schedule JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    if (*sched) return cmd_schedule(sa);
    if (*simc) {
      if (*o_jit) ma.jitter = jitter;
      if (*o_skew) ma.skew = skew;
      if (*o_off) ma.skew_offset = skew_offset;
      if (*o_dur) ma.duration = duration;
      return cmd_simulate(ma);
    }
    if (*sweep) return cmd_sweep(wa);
    if (*ver) return cmd_verify(v_scenario, v_schedule);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalid;
  }
  return kInvalid;
}
