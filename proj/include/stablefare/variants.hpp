#pragma once

#include <string>
#include <utility>
#include <vector>

#include "allocation.hpp"
#include "assignment.hpp"
#include "errors.hpp"
#include "model.hpp"

// Fleet scenarios: operators own vehicles, each vehicle picks at most one of
// its candidate paths, and stability is judged between operators rather than
// between individual routes.
namespace stablefare {

struct Vehicle {
  int id = 0;
  int start_node = 0;
  int capacity = 1;                               // per-link rider bound
  std::vector<std::vector<int>> candidate_paths;  // node sequences from start
};

struct OperatorFleet {
  int id = 0;
  Rat min_profit;  // per-match floor b, may be negative
  std::vector<Vehicle> vehicles;
};

struct FleetScenario {
  Network network;
  std::vector<OperatorFleet> operators;
  std::vector<UserGroup> users;
  CostParams params;
  CostRule cost_rule;
};

// The expanded per-path instance plus the vehicle-exclusivity side
// constraints that go with it.
struct FleetModel {
  ProblemInstance instance;
  AssignOptions assign;
  int vehicle_count = 0;
};

// Expands every (vehicle, candidate path) into one tagged route. Waiting time
// is charged from the vehicle's start node, so every candidate path must
// begin there.
inline FleetModel build_fleet_model(const FleetScenario& scn) {
  if (scn.operators.empty()) throw ValidationError("fleet scenario has no operators");
  std::vector<Route> routes;
  AssignOptions assign;
  int vehicle_counter = 0;
  int next_id = 1;
  for (std::size_t p = 0; p < scn.operators.size(); ++p) {
    const OperatorFleet& op = scn.operators[p];
    if (op.id < 0)
      throw ValidationError("operator id must be nonnegative, got " + std::to_string(op.id));
    for (std::size_t q = p + 1; q < scn.operators.size(); ++q)
      if (scn.operators[q].id == op.id)
        throw ValidationError("duplicate operator id " + std::to_string(op.id));
    for (const Vehicle& veh : op.vehicles) {
      if (veh.candidate_paths.empty())
        throw ValidationError("vehicle " + std::to_string(veh.id) + " of operator " +
                              std::to_string(op.id) + " has no candidate paths");
      std::vector<int> group;
      for (const std::vector<int>& path : veh.candidate_paths) {
        if (path.empty() || path.front() != veh.start_node)
          throw ValidationError("candidate path of vehicle " + std::to_string(veh.id) +
                                " must start at its node " + std::to_string(veh.start_node));
        Route route;
        route.id = next_id++;
        route.nodes = path;
        route.line_capacity = veh.capacity;
        route.min_profit = op.min_profit;
        route.operator_id = op.id;
        route.vehicle_id = vehicle_counter;
        group.push_back(static_cast<int>(routes.size()));
        routes.push_back(std::move(route));
      }
      // One candidate path is never a real choice; skip the vacuous row.
      if (group.size() > 1) assign.vehicle_groups.push_back(std::move(group));
      ++vehicle_counter;
    }
  }
  FleetModel out;
  out.instance = validate_instance(scn.network, std::move(routes), scn.users, scn.params,
                                   scn.cost_rule, WaitPolicy::FromRouteStart);
  out.assign = std::move(assign);
  out.vehicle_count = vehicle_counter;
  return out;
}

struct FleetOptions {
  MipOptions mip;
  LpOptions lp;
  long max_coalitions = kDefaultCoalitionLimit;
};

template <class T>
struct FleetResult {
  ProblemInstance instance;
  AssignmentResult<T> assignment;
  AllocationOutcome<T> user_optimal;
  AllocationOutcome<T> operator_optimal;
  PriceSchedule<T> user_prices;
  PriceSchedule<T> operator_prices;
  std::vector<int> active_path;  // per vehicle: running route index, or -1
};

// End to end: expand, assign with vehicle exclusivity, allocate under
// between-operator stability, and price both extremes.
template <class T>
FleetResult<T> solve_fleet_scenario(const FleetScenario& scn, const FleetOptions& opts = {}) {
  FleetModel model = build_fleet_model(scn);
  FleetResult<T> out;
  out.instance = std::move(model.instance);
  AssignOptions assign_opts = std::move(model.assign);
  assign_opts.mip = opts.mip;
  out.assignment = solve_assignment<T>(out.instance, assign_opts);
  out.active_path.assign(model.vehicle_count, -1);
  if (out.assignment.status != LpStatus::Optimal) return out;
  for (int r = 0; r < out.instance.route_count(); ++r) {
    if (!out.assignment.used[r]) continue;
    int veh = out.instance.routes[r].vehicle_id;
    if (out.active_path[veh] != -1)
      throw Error("vehicle " + std::to_string(veh) + " runs two paths at once");
    out.active_path[veh] = r;
  }

  AllocationOptions<T> alloc;
  alloc.mode = StabilityMode::Centralized;
  alloc.max_coalitions = opts.max_coalitions;
  alloc.lp = opts.lp;
  out.user_optimal = user_optimal_allocation(out.instance, out.assignment, alloc);
  if (out.user_optimal.status != CoreStatus::Optimal) return out;
  out.operator_optimal =
      operator_optimal_allocation(out.instance, out.assignment, out.user_optimal, alloc);
  out.user_prices = compute_prices(out.instance, out.assignment, out.user_optimal);
  out.operator_prices = compute_prices(out.instance, out.assignment, out.operator_optimal);
  return out;
}

}  // namespace stablefare
