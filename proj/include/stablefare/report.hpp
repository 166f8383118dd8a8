#pragma once

#include <string>
#include <vector>

#include "stablefare/allocation.hpp"
#include "stablefare/assignment.hpp"
#include "stablefare/model.hpp"
#include "stablefare/pipeline.hpp"
#include "stablefare/verify.hpp"

namespace stablefare {

// Fixed-layout report emitters. Every number prints with six decimals and
// every row order is canonical (ascending ids, schedule order, time order),
// so identical results emit identical bytes.

template <class T>
std::string emit_assignment_summary(const ProblemInstance& inst, const AssignmentResult<T>& res) {
  std::string out;
  out += "status=" + std::string(res.status == LpStatus::Optimal ? "optimal" : "infeasible") + "\n";
  if (res.status != LpStatus::Optimal) return out;
  long used = 0, matched = 0;
  for (int r = 0; r < inst.route_count(); ++r) used += res.used[r] ? 1 : 0;
  for (int a = 0; a < inst.agent_count(); ++a) matched += res.agent_route[a] >= 0 ? 1 : 0;
  out += "objective_raw=" + format_money(res.objective_raw) + "\n";
  out += "objective_net=" + format_money(res.objective_net) + "\n";
  out += "routes_used=" + std::to_string(used) + "\n";
  out += "matched_agents=" + std::to_string(matched) + "/" + std::to_string(inst.agent_count()) +
         "\n";
  return out;
}

template <class T>
std::string emit_assignment_csv(const ProblemInstance& inst, const AssignmentResult<T>& res) {
  std::string out = "user_id,route_id,riders,payoff\n";
  if (res.status != LpStatus::Optimal) return out;
  for (int s = 0; s < inst.user_count(); ++s)
    for (int r = 0; r < inst.route_count(); ++r) {
      long c = res.counts[s][r];
      if (c == 0) continue;
      out += std::to_string(inst.users[s].id) + "," + std::to_string(inst.routes[r].id) + "," +
             std::to_string(c) + "," + format_money(num_traits<T>::from_rat(inst.payoff(s, r))) +
             "\n";
    }
  return out;
}

template <class T>
std::string emit_routes_csv(const ProblemInstance& inst, const AssignmentResult<T>& res) {
  std::string out = "route_id,used,riders,C_r,minutes,miles\n";
  for (int r = 0; r < inst.route_count(); ++r) {
    long riders = 0;
    if (res.status == LpStatus::Optimal)
      for (int s = 0; s < inst.user_count(); ++s) riders += res.counts[s][r];
    out += std::to_string(inst.routes[r].id) + "," +
           (res.status == LpStatus::Optimal && res.used[r] ? "1" : "0") + "," +
           std::to_string(riders) + "," + format_money(inst.operating_cost(r)) + "," +
           format_money(inst.route_minutes(r)) + "," + format_money(inst.route_miles(r)) + "\n";
  }
  return out;
}

template <class T>
std::string emit_outcome_summary(const AllocationOutcome<T>& outcome) {
  std::string out = std::string("status=") + to_string(outcome.status) + "\n";
  if (outcome.status != CoreStatus::Optimal) return out;
  out += "objective=" + format_money(outcome.objective) + "\n";
  out += "total_value=" + format_money(outcome.total_value) + "\n";
  return out;
}

template <class T>
std::string emit_outcome_csv(const ProblemInstance& inst, const AllocationOutcome<T>& outcome) {
  std::string out = "kind,id,value\n";
  if (outcome.status != CoreStatus::Optimal) return out;
  for (int s = 0; s < inst.user_count(); ++s)
    out += "user," + std::to_string(inst.users[s].id) + "," + format_money(outcome.user_value[s]) +
           "\n";
  for (int r = 0; r < inst.route_count(); ++r)
    out += "route," + std::to_string(inst.routes[r].id) + "," +
           format_money(outcome.route_value[r]) + "\n";
  return out;
}

// What we can certify when the stability system has no solution: the
// independent vertex scan agrees, and the fractional coalition-packing bound
// strictly exceeds the value the grand assignment can distribute.
template <class T>
std::string emit_empty_core_report(const ProblemInstance& inst, const AssignmentResult<T>& res,
                                   StabilityMode mode, long max_coalitions) {
  std::string out = "status=empty_core\n";
  long rows = 0;
  for (const Coalition& c : enumerate_all_coalitions(inst, max_coalitions))
    if (c.rhs > 0) ++rows;
  out += "stability_rows=" + std::to_string(rows) + "\n";
  auto scan = core_feasible_by_scan(inst, res, mode);
  out += "feasibility_scan=";
  out += scan.has_value() ? (*scan ? "feasible" : "infeasible") : "skipped";
  out += "\n";
  if (mode == StabilityMode::Decentralized) {
    out += "packing_certificate=";
    out += core_empty_by_packing(inst, res) ? "empty" : "inconclusive";
    out += "\n";
  }
  return out;
}

template <class T>
std::string emit_price_table(const ProblemInstance& inst, const PriceSchedule<T>& user_opt,
                             const PriceSchedule<T>& op_opt) {
  if (user_opt.entries.size() != op_opt.entries.size())
    throw ValidationError("price schedules describe different assignments");
  std::string out = "user_id,route_id,riders,user_optimal,operator_optimal\n";
  for (std::size_t i = 0; i < user_opt.entries.size(); ++i) {
    const PriceEntry<T>& a = user_opt.entries[i];
    const PriceEntry<T>& b = op_opt.entries[i];
    if (a.group != b.group || a.route != b.route || a.riders != b.riders)
      throw ValidationError("price schedules describe different assignments");
    out += std::to_string(inst.users[a.group].id) + "," + std::to_string(inst.routes[a.route].id) +
           "," + std::to_string(a.riders) + "," + format_money(a.price) + "," +
           format_money(b.price) + "\n";
  }
  return out;
}

template <class T>
std::string emit_revenue_csv(const ProblemInstance& inst, const PriceSchedule<T>& user_opt,
                             const PriceSchedule<T>& op_opt) {
  std::string out = "route_id,revenue_user_optimal,revenue_operator_optimal,C_r\n";
  for (int r = 0; r < inst.route_count(); ++r)
    out += std::to_string(inst.routes[r].id) + "," + format_money(user_opt.route_revenue[r]) +
           "," + format_money(op_opt.route_revenue[r]) + "," +
           format_money(inst.operating_cost(r)) + "\n";
  return out;
}

template <class T>
std::string emit_gap_csv(const std::vector<T>& gaps_sorted_desc) {
  std::string out = "rank,gap\n";
  for (std::size_t i = 0; i < gaps_sorted_desc.size(); ++i)
    out += std::to_string(i + 1) + "," + format_money(gaps_sorted_desc[i]) + "\n";
  return out;
}

template <class T>
std::string emit_pipeline_metrics(const PipelineMetrics<T>& m) {
  std::string out;
  out += "total_trips=" + std::to_string(m.total_trips) + "\n";
  out += "matched_trips=" + std::to_string(m.matched_trips) + "\n";
  out += "shared_trips=" + std::to_string(m.shared_trips) + "\n";
  out += "share_rate=" + format_money(m.share_rate) + "\n";
  out += "single_vmt=" + format_money(m.single_vmt) + "\n";
  out += "shared_vmt=" + format_money(m.shared_vmt) + "\n";
  out += "mean_width_demand_weighted=" + format_money(m.mean_width_demand_weighted) + "\n";
  out += "mean_width_count_weighted=" + format_money(m.mean_width_count_weighted) + "\n";
  out += "stable_intervals=" + std::to_string(m.stable_intervals) + "\n";
  out += "floor_intervals=" + std::to_string(m.floor_intervals) + "\n";
  return out;
}

template <class T>
std::string emit_intervals_csv(const std::vector<IntervalResult<T>>& intervals) {
  std::string out = "begin_seconds,end_seconds,trips,status\n";
  for (const IntervalResult<T>& iv : intervals)
    out += format_money(iv.begin_seconds) + "," + format_money(iv.end_seconds) + "," +
           std::to_string(iv.trip_ids.size()) + "," + to_string(iv.status) + "\n";
  return out;
}

template <class T>
std::string emit_price_triples_csv(const PipelineMetrics<T>& m) {
  std::string out = "trip_id,observed_fare,user_optimal_price,operator_optimal_price\n";
  for (const PriceTriple<T>& row : m.prices)
    out += std::to_string(row.trip_id) + "," + format_money(row.observed_fare) + "," +
           format_money(row.user_optimal_price) + "," + format_money(row.operator_optimal_price) +
           "\n";
  return out;
}

struct BenchRow {
  int n = 0;
  long demand_rows = 0;
  long capacity_rows = 0;
  long bigm_rows = 0;
  long nodes = 0;
  double seconds = 0;
};

inline std::string emit_bench_table(const std::vector<BenchRow>& rows) {
  std::string out = "n,demand_rows,capacity_rows,bigm_rows,total_rows,nodes,seconds\n";
  char buf[32];
  for (const BenchRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f", r.seconds);
    out += std::to_string(r.n) + "," + std::to_string(r.demand_rows) + "," +
           std::to_string(r.capacity_rows) + "," + std::to_string(r.bigm_rows) + "," +
           std::to_string(r.demand_rows + r.capacity_rows + r.bigm_rows) + "," +
           std::to_string(r.nodes) + "," + buf + "\n";
  }
  return out;
}

}  // namespace stablefare
