#pragma once

#include <algorithm>
#include <vector>

#include "stablefare/mip.hpp"
#include "stablefare/model.hpp"

namespace stablefare {

struct AssignOptions {
  // Route-index groups owned by one vehicle: at most one route per group may
  // actually run.
  std::vector<std::vector<int>> vehicle_groups;
  MipOptions mip;
};

// The integer program for one scenario, with its variable layout. One integer
// rider count per (group, route) pair that earns a positive match payoff, plus
// one binary idle flag per route that collects the route's operating cost when
// nobody rides it; maximizing total payoff plus collected idle costs is then
// the same as maximizing payoffs net of the cost of the routes actually run.
template <class T>
struct AssignmentModel {
  LinearProgram<T> lp;
  std::vector<int> integer_vars;
  std::vector<std::vector<int>> rider_var;  // [group][route] -> variable or -1
  std::vector<int> idle_var;                // [route] -> variable
  int demand_rows = 0;
  int capacity_rows = 0;
};

template <class T>
AssignmentModel<T> build_assignment_model(const ProblemInstance& inst,
                                          const AssignOptions& opts = {}) {
  using NT = num_traits<T>;
  const int R = inst.route_count();
  const int S = inst.user_count();

  AssignmentModel<T> m;
  m.rider_var.assign(S, std::vector<int>(R, -1));
  m.idle_var.assign(R, -1);

  // Canonical variable order: route-major, rider counts by ascending group,
  // the route's idle flag last. Everything downstream (branching, tie-breaks,
  // reported solutions) inherits this order.
  for (int r = 0; r < R; ++r) {
    const long wr = inst.routes[r].line_capacity;
    for (int s = 0; s < S; ++s) {
      // Riders of one group share every link of their ride, so the route's
      // per-link bound caps the whole group.
      if (!(inst.payoff(s, r) > 0)) continue;
      long up = std::min<long>(inst.users[s].demand, wr);
      int var = m.lp.add_variable(T(0), NT::from_int(up), NT::from_rat(inst.payoff(s, r)));
      m.rider_var[s][r] = var;
      m.integer_vars.push_back(var);
    }
    int var = m.lp.add_variable(T(0), NT::from_int(1), NT::from_rat(inst.operating_cost(r)));
    m.idle_var[r] = var;
    m.integer_vars.push_back(var);
  }

  // One demand row per traveler group.
  for (int s = 0; s < S; ++s) {
    std::vector<std::pair<int, T>> coeffs;
    for (int r = 0; r < R; ++r)
      if (m.rider_var[s][r] >= 0) coeffs.emplace_back(m.rider_var[s][r], T(1));
    m.lp.add_le(std::move(coeffs), NT::from_int(inst.users[s].demand));
    ++m.demand_rows;
  }

  // One capacity row per (route, link).
  for (int r = 0; r < R; ++r) {
    for (int link = 0; link < inst.route_link_count(r); ++link) {
      std::vector<std::pair<int, T>> coeffs;
      for (int s = 0; s < S; ++s) {
        if (m.rider_var[s][r] < 0) continue;
        const auto& used = inst.geometry(s, r).used_links;
        if (std::find(used.begin(), used.end(), link) != used.end())
          coeffs.emplace_back(m.rider_var[s][r], T(1));
      }
      m.lp.add_le(std::move(coeffs), NT::from_int(inst.routes[r].line_capacity));
      ++m.capacity_rows;
    }
  }

  // Riders force the idle flag off: sum of riders <= M * (1 - idle). M is the
  // most riders the route could actually carry: the sum of the row's own
  // variable bounds, capped by one seat per link. A tight M keeps the
  // relaxation honest about operating costs, which is what makes the
  // branch-and-bound tree small.
  for (int r = 0; r < R; ++r) {
    const long wr = inst.routes[r].line_capacity;
    long reachable = 0;
    std::vector<std::pair<int, T>> coeffs;
    for (int s = 0; s < S; ++s) {
      if (m.rider_var[s][r] < 0) continue;
      coeffs.emplace_back(m.rider_var[s][r], T(1));
      reachable += std::min<long>(inst.users[s].demand, wr);
    }
    long big = std::min<long>(reachable, wr * inst.route_link_count(r));
    coeffs.emplace_back(m.idle_var[r], NT::from_int(big));
    m.lp.add_le(std::move(coeffs), NT::from_int(big));
  }

  // A vehicle can run at most one of its candidate routes.
  for (const auto& group : opts.vehicle_groups) {
    std::vector<std::pair<int, T>> coeffs;
    for (int r : group) coeffs.emplace_back(m.idle_var.at(r), T(1));
    m.lp.add_ge(std::move(coeffs), NT::from_int(static_cast<long>(group.size()) - 1));
  }
  return m;
}

template <class T>
struct AssignmentResult {
  LpStatus status = LpStatus::Infeasible;
  T objective_raw{};  // model objective: payoffs + idle credits
  T objective_net{};  // payoffs minus cost of operated routes
  T root_bound{};     // LP relaxation of the model objective
  bool root_bound_valid = false;
  long nodes = 0;
  std::vector<std::vector<long>> counts;  // [group][route] riders
  std::vector<char> used;                 // route actually runs
  std::vector<int> agent_route;           // unit traveler -> route index or -1
};

// Solves the scenario and reports the canonical optimal assignment: rider
// counts rounded to integers, routes without riders marked idle, and unit
// travelers of each group filled onto its routes in ascending route order.
template <class T>
AssignmentResult<T> solve_assignment(const ProblemInstance& inst, const AssignOptions& opts = {}) {
  using NT = num_traits<T>;
  const int R = inst.route_count();
  const int S = inst.user_count();

  AssignmentModel<T> model = build_assignment_model<T>(inst, opts);
  MipResult<T> mip = solve_mip(model.lp, model.integer_vars, opts.mip);

  AssignmentResult<T> out;
  out.status = mip.status;
  out.nodes = mip.nodes;
  out.root_bound = mip.root_bound;
  out.root_bound_valid = mip.root_bound_valid;
  if (mip.status != LpStatus::Optimal) return out;

  out.counts.assign(S, std::vector<long>(R, 0));
  out.used.assign(R, 0);
  for (int s = 0; s < S; ++s)
    for (int r = 0; r < R; ++r)
      if (model.rider_var[s][r] >= 0)
        out.counts[s][r] = NT::round_to_long(mip.x[model.rider_var[s][r]]);

  T raw(0);
  for (int r = 0; r < R; ++r) {
    long riders = 0;
    for (int s = 0; s < S; ++s) riders += out.counts[s][r];
    out.used[r] = riders > 0;
    if (riders == 0) raw += NT::from_rat(inst.operating_cost(r));
  }
  for (int s = 0; s < S; ++s)
    for (int r = 0; r < R; ++r)
      if (out.counts[s][r] > 0) raw += NT::from_rat(inst.payoff(s, r)) * NT::from_int(out.counts[s][r]);
  out.objective_raw = raw;
  out.objective_net = raw - NT::from_rat(inst.total_operating_cost());

  out.agent_route.assign(inst.agent_count(), -1);
  for (int s = 0; s < S; ++s) {
    const auto& agents = inst.group_agents(s);
    std::size_t next = 0;
    for (int r = 0; r < R; ++r)
      for (long c = 0; c < out.counts[s][r]; ++c) out.agent_route[agents.at(next++)] = r;
  }
  return out;
}

}  // namespace stablefare
