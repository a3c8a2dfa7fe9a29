#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "converged/schedule.hpp"

namespace converged {

// Findings of the schedule checker, grouped by constraint family. Every
// family is listed even when it has no findings.
struct CheckReport {
  std::vector<std::string> families;
  std::map<std::string, std::vector<std::string>> problems;

  bool ok() const {
    for (const auto& [f, p] : problems) {
      if (!p.empty()) return false;
    }
    return true;
  }
  bool family_ok(const std::string& f) const {
    auto it = problems.find(f);
    return it == problems.end() || it->second.empty();
  }
};

namespace detail {

struct Interval {
  TimeNs lo, hi;  // [lo, hi)
  std::size_t flow;
};

inline bool overlaps(TimeNs a0, TimeNs a1, TimeNs b0, TimeNs b1) { return a0 < b1 && b0 < a1; }

}  // namespace detail

// Checks a schedule against the scenario directly from its time semantics,
// without going through the ILP.
inline CheckReport check_schedule(const Scenario& sc, const Schedule& s) {
  CheckReport rep;
  rep.families = {"route", "window", "opportunity", "resource", "rb", "ofdma",
                  "order", "tdma", "isolation", "e2e", "hyper_period"};
  if (s.model == ModelKind::Stsm) rep.families.push_back("chain");
  for (const std::string& f : rep.families) rep.problems[f];
  auto bad = [&](const std::string& fam, const std::string& msg) { rep.problems[fam].push_back(msg); };

  if (s.flows.size() != sc.flows.size()) {
    bad("route", "schedule has " + std::to_string(s.flows.size()) + " flows, scenario " +
                     std::to_string(sc.flows.size()));
    return rep;
  }
  const TimeNs tti = sc.radio.tti;
  const auto kmax = static_cast<std::size_t>(sc.radio.k_max);
  std::vector<bool> structural(sc.flows.size(), true);

  for (std::size_t fi = 0; fi < sc.flows.size(); ++fi) {
    const FlowSpec& f = sc.flows[fi];
    const FlowSchedule& fs = s.flows[fi];
    const auto links = f.scheduled_links();
    if (fs.tsn.size() != links.size()) {
      bad("route", f.id + ": " + std::to_string(fs.tsn.size()) + " windows for " + std::to_string(links.size()) +
                       " scheduled links");
      structural[fi] = false;
      continue;
    }
    for (std::size_t k = 0; k < links.size(); ++k) {
      if (fs.tsn[k].link != links[k]) {
        bad("route", f.id + ": window " + std::to_string(k) + " is on " + sc.link_name(fs.tsn[k].link) +
                         ", route has " + sc.link_name(links[k]));
        structural[fi] = false;
      }
    }
    // Period membership.
    const TimeNs t = fs.hold_period;
    bool member = false;
    if (s.model == ModelKind::Stsm) {
      member = t == f.period;
    } else {
      for (TimeNs p = sc.scheduler.min_p; p > 0 && p <= f.period; p *= 2) {
        if (p == t) member = true;
        if (p > f.period / 2) break;
      }
    }
    if (!member) bad("window", f.id + ": period " + std::to_string(t) + " is not an allowed candidate");
    for (const TsnInstance& w : fs.tsn) {
      const std::string at = f.id + " on " + sc.link_name(w.link);
      if (w.period != t) bad("window", at + ": window period differs from the flow's reserved period");
      if (w.span != sc.span_on(w.link, f)) bad("window", at + ": span does not match frame length and rate");
      if (w.offset < 0 || w.offset + w.span > w.period) bad("window", at + ": window leaves its period");
    }
    // Radio grant.
    const RadioInstance& r = fs.radio;
    if (r.start_tti < 0 || r.tti_count < 1 || (r.start_tti + r.tti_count) * tti > f.period) {
      bad("opportunity", f.id + ": grant does not fit in the flow period");
    }
    __int128 per_tti = 0;
    std::vector<int> rbs = r.rbs;
    std::sort(rbs.begin(), rbs.end());
    if (std::adjacent_find(rbs.begin(), rbs.end()) != rbs.end()) bad("resource", f.id + ": repeated RB");
    for (int k : rbs) {
      if (k < 0 || static_cast<std::size_t>(k) >= kmax) {
        bad("resource", f.id + ": RB " + std::to_string(k) + " out of range");
        continue;
      }
      per_tti += sc.radio.rb_bytes.at(fi).at(static_cast<std::size_t>(k));
      if (static_cast<std::size_t>(k) >= s.rb_used.size() || !s.rb_used[static_cast<std::size_t>(k)]) {
        bad("rb", f.id + ": RB " + std::to_string(k) + " assigned but not marked used");
      }
    }
    if (per_tti * r.tti_count < f.length_bytes) bad("resource", f.id + ": grant carries too few bytes");
    if (per_tti * (r.tti_count - 1) >= f.length_bytes) bad("resource", f.id + ": grant is larger than needed");
    // Store-and-forward order.
    for (std::size_t k = 1; k < fs.tsn.size() && structural[fi]; ++k) {
      const TsnInstance& a = fs.tsn[k - 1];
      if (fs.tsn[k].offset < a.offset + a.span + sc.links[a.link].prop_delay) {
        bad("order", f.id + ": window on " + sc.link_name(fs.tsn[k].link) + " opens before the frame arrives");
      }
    }
    if (structural[fi] && !fs.tsn.empty()) {
      const TimeNs d = scheduled_e2e_delay(sc, s, fi);
      if (d > f.deadline) bad("e2e", f.id + ": scheduled delay " + std::to_string(d) + " exceeds deadline");
      if (d != fs.e2e_delay) bad("e2e", f.id + ": recorded delay " + std::to_string(fs.e2e_delay) + " should be " +
                                            std::to_string(d));
      if (s.model == ModelKind::Stsm) {
        const TimeNs ready = (r.start_tti + r.tti_count) * tti + sc.radio.proc_delay() + sc.scheduler.tam_guard;
        if (fs.tsn.front().offset < ready) bad("chain", f.id + ": first window opens before 5GS delivery");
      }
    }
  }
  if (s.rb_used.size() != kmax) bad("rb", "rb_used has " + std::to_string(s.rb_used.size()) + " entries");

  // Radio grants sharing an RB, over the 5GS hyper-period.
  if (!sc.flows.empty()) {
    std::vector<TimeNs> periods, holds;
    for (std::size_t fi = 0; fi < sc.flows.size(); ++fi) {
      periods.push_back(sc.flows[fi].period);
      holds.push_back(s.flows[fi].hold_period > 0 ? s.flows[fi].hold_period : 1);
    }
    const TimeNs h5 = hyper_period(periods);
    if (s.fiveg_hyper_period != h5) bad("hyper_period", "5GS hyper-period should be " + std::to_string(h5));
    const TimeNs ht = hyper_period(holds);
    if (s.tsn_hyper_period != ht) bad("hyper_period", "TSN hyper-period should be " + std::to_string(ht));

    for (std::size_t i = 0; i < sc.flows.size(); ++i) {
      for (std::size_t j = i + 1; j < sc.flows.size(); ++j) {
        const RadioInstance &ri = s.flows[i].radio, &rj = s.flows[j].radio;
        const bool share = std::any_of(ri.rbs.begin(), ri.rbs.end(), [&](int k) {
          return std::find(rj.rbs.begin(), rj.rbs.end(), k) != rj.rbs.end();
        });
        if (!share) continue;
        bool clash = false;
        for (TimeNs a = 0; a < h5 && !clash; a += sc.flows[i].period) {
          for (TimeNs b = 0; b < h5 && !clash; b += sc.flows[j].period) {
            clash = detail::overlaps(a + ri.start_tti * tti, a + (ri.start_tti + ri.tti_count) * tti,
                                     b + rj.start_tti * tti, b + (rj.start_tti + rj.tti_count) * tti);
          }
        }
        if (clash) bad("ofdma", sc.flows[i].id + " and " + sc.flows[j].id + " share an RB in the same TTI");
      }
    }
  }

  // Wired windows per link, unrolled over the pair hyper-period.
  for (std::size_t i = 0; i < sc.flows.size(); ++i) {
    if (!structural[i]) continue;
    for (std::size_t j = i + 1; j < sc.flows.size(); ++j) {
      if (!structural[j]) continue;
      const FlowSchedule &fi = s.flows[i], &fj = s.flows[j];
      if (fi.hold_period <= 0 || fj.hold_period <= 0) continue;
      const TimeNs hp = checked_lcm(fi.hold_period, fj.hold_period);
      for (std::size_t a = 0; a < fi.tsn.size(); ++a) {
        for (std::size_t b = 0; b < fj.tsn.size(); ++b) {
          const TsnInstance &wa = fi.tsn[a], &wb = fj.tsn[b];
          if (wa.link != wb.link) continue;
          bool clash = false;
          for (TimeNs x = 0; x < hp && !clash; x += wa.period) {
            for (TimeNs y = 0; y < hp && !clash; y += wb.period) {
              clash = detail::overlaps(x + wa.offset, x + wa.offset + wa.span, y + wb.offset, y + wb.offset + wb.span);
            }
          }
          if (clash) {
            bad("tdma", sc.flows[i].id + " and " + sc.flows[j].id + " overlap on " + sc.link_name(wa.link));
          }
          // Frame isolation at the switch feeding this link.
          if (a == 0 || b == 0) continue;
          const TsnInstance &ia = fi.tsn[a - 1], &ib = fj.tsn[b - 1];
          bool violated = false;
          for (TimeNs x = 0; x < hp && !violated; x += wa.period) {
            for (TimeNs y = 0; y < hp && !violated; y += wb.period) {
              const bool first = x + wa.offset <= y + ib.offset + sc.links[ib.link].prop_delay;
              const bool second = y + wb.offset <= x + ia.offset + sc.links[ia.link].prop_delay;
              violated = !first && !second;
            }
          }
          if (violated) {
            bad("isolation", sc.flows[i].id + " and " + sc.flows[j].id + " may queue together before " +
                                 sc.link_name(wa.link));
          }
        }
      }
    }
  }
  return rep;
}

}  // namespace converged
