#pragma once

#include <optional>
#include <string>

#include "converged/atsm_builder.hpp"
#include "converged/solver.hpp"

namespace converged {

struct ScheduleOutcome {
  ilp::SolveStatus status = ilp::SolveStatus::Infeasible;
  std::optional<Schedule> schedule;  // set for Optimal and for TimedOut with an incumbent
  Rational objective;                // including the constant part of the STSM objective
  std::int64_t nodes = 0;
  double wall_ms = 0;
  std::string message;  // why it is infeasible, when it is
};

inline ilp::SolveLimits limits_of(const Scenario& sc) {
  return {sc.scheduler.max_nodes, sc.scheduler.time_limit_ms};
}

// Builds the model, solves it and decodes the result.
inline ScheduleOutcome make_schedule(const Scenario& sc, ModelKind kind, const Rational& gamma,
                                     const ilp::SolveLimits& limits) {
  ScheduleOutcome out;
  BuiltModel bm;
  try {
    bm = build_model(sc, kind, gamma);
  } catch (const InfeasibleError& e) {
    out.status = ilp::SolveStatus::Infeasible;
    out.message = std::string(e.what()) + " [" + e.family() + "]";
    return out;
  }
  const ilp::Solution sol = ilp::solve(bm.model, limits);
  out.status = sol.status;
  out.nodes = sol.nodes;
  out.wall_ms = sol.wall_ms;
  if (!sol.assignment) {
    if (sol.status == ilp::SolveStatus::Infeasible) {
      out.message = "no feasible schedule";
      if (!sol.infeasible_family.empty()) {
        out.message += " (first empty family: " + sol.infeasible_family + ", at " + sol.infeasible_tag + ")";
      }
    } else {
      out.message = "search limit reached before any feasible schedule was found";
    }
    return out;
  }
  out.objective = sol.objective + bm.objective_constant;
  Schedule s = decode_schedule(sc, bm, *sol.assignment);
  s.solver = {std::string(to_string(sol.status)), out.objective.str(), sol.nodes};
  out.schedule = std::move(s);
  return out;
}

inline ScheduleOutcome make_schedule(const Scenario& sc, ModelKind kind) {
  return make_schedule(sc, kind, sc.scheduler.gamma, limits_of(sc));
}

}  // namespace converged
