#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "helpers.hpp"
#include "stablefare/assignment.hpp"
#include "stablefare/assignment_oracle.hpp"
#include "stablefare/synthetic.hpp"

using namespace stablefare;
using testutil::R;

namespace {

// Re-checks a reported assignment against the instance from scratch.
void require_assignment_feasible(const ProblemInstance& inst, const AssignmentResult<Rat>& res) {
  REQUIRE(res.counts.size() == static_cast<std::size_t>(inst.user_count()));
  for (int s = 0; s < inst.user_count(); ++s) {
    long total = 0;
    for (int r = 0; r < inst.route_count(); ++r) {
      long c = res.counts[s][r];
      REQUIRE(c >= 0);
      if (c > 0) {
        REQUIRE(inst.compatible(s, r));
        REQUIRE(inst.payoff(s, r) > 0);
      }
      total += c;
    }
    REQUIRE(total <= inst.users[s].demand);
  }
  for (int r = 0; r < inst.route_count(); ++r) {
    std::vector<long> load(inst.route_link_count(r), 0);
    long riders = 0;
    for (int s = 0; s < inst.user_count(); ++s) {
      riders += res.counts[s][r];
      for (int link : inst.geometry(s, r).used_links) load[link] += res.counts[s][r];
    }
    for (long l : load) REQUIRE(l <= inst.routes[r].line_capacity);
    REQUIRE((res.used[r] != 0) == (riders > 0));
  }
  // The unit-traveler expansion must agree with the counts.
  std::vector<std::vector<long>> from_agents(inst.user_count(),
                                             std::vector<long>(inst.route_count(), 0));
  for (int a = 0; a < inst.agent_count(); ++a)
    if (res.agent_route[a] >= 0) ++from_agents[inst.agent_group(a)][res.agent_route[a]];
  REQUIRE(from_agents == res.counts);
}

}  // namespace

TEST_CASE("the triangle scenario assigns three riders to the through route") {
  auto inst = testutil::triangle_two_route_instance();
  auto res = solve_assignment<Rat>(inst);
  REQUIRE(res.status == LpStatus::Optimal);
  require_assignment_feasible(inst, res);

  CHECK(res.objective_net == R("64.25"));   // 47.25 + 17
  CHECK(res.objective_raw == R("70.55"));   // plus both operating costs
  CHECK(res.used == std::vector<char>{1, 1});
  CHECK(res.counts[0] == std::vector<long>{1, 0});
  CHECK(res.counts[1] == std::vector<long>{1, 0});
  CHECK(res.counts[2] == std::vector<long>{1, 0});
  CHECK(res.counts[3] == std::vector<long>{0, 1});
  CHECK(res.agent_route == std::vector<int>{0, 0, 0, 1});
  REQUIRE(res.root_bound_valid);
  CHECK(res.root_bound >= res.objective_raw);

  auto again = solve_assignment<Rat>(inst);
  CHECK(again.counts == res.counts);

  auto dres = solve_assignment<double>(inst);
  REQUIRE(dres.status == LpStatus::Optimal);
  CHECK(std::abs(dres.objective_net - 64.25) <= 1e-6);
}

TEST_CASE("a tight line capacity prices the middle traveler out") {
  std::vector<Route> routes{Route{.id = 1, .nodes = {1, 2, 3}, .line_capacity = 1},
                            Route{.id = 2, .nodes = {3, 2}, .line_capacity = 1}};
  CostParams params{.value_of_time = R("0.4"), .wait_multiplier = R("1.25")};
  auto inst = validate_instance(testutil::triangle_network(), routes, testutil::triangle_users(),
                                params, CostRule::per_mile(R("0.9")), WaitPolicy::FromRouteStart);
  auto res = solve_assignment<Rat>(inst);
  REQUIRE(res.status == LpStatus::Optimal);
  require_assignment_feasible(inst, res);
  // Travelers 1 and 3 use disjoint links; traveler 2 would need both.
  CHECK(res.objective_net == R("47.25"));
  CHECK(res.counts[0] == std::vector<long>{1, 0});
  CHECK(res.counts[1] == std::vector<long>{0, 0});
  CHECK(res.counts[2] == std::vector<long>{1, 0});
  CHECK(res.counts[3] == std::vector<long>{0, 1});
  CHECK(res.agent_route == std::vector<int>{0, -1, 0, 1});
}

TEST_CASE("routes nobody rides stay idle and their cost is not charged") {
  std::vector<Route> routes{Route{.id = 1, .nodes = {1, 2, 3}, .line_capacity = 2},
                            Route{.id = 2, .nodes = {3, 2}, .line_capacity = 2}};
  auto users = testutil::triangle_users();
  users.pop_back();  // nobody wants 3 -> 2
  CostParams params{.value_of_time = R("0.4"), .wait_multiplier = R("1.25")};
  auto inst = validate_instance(testutil::triangle_network(), routes, users, params,
                                CostRule::per_mile(R("0.9")), WaitPolicy::FromRouteStart);
  auto res = solve_assignment<Rat>(inst);
  REQUIRE(res.status == LpStatus::Optimal);
  require_assignment_feasible(inst, res);
  CHECK(res.objective_net == R("47.25"));
  CHECK(res.objective_raw == R("53.55"));  // 51.75 payoff + 1.8 idle credit
  CHECK(res.used == std::vector<char>{1, 0});
}

TEST_CASE("demand bundles ride up to the line capacity") {
  Network net = testutil::triangle_network();
  std::vector<Route> routes{Route{.id = 1, .nodes = {1, 2}, .line_capacity = 2}};
  std::vector<UserGroup> users{UserGroup{.id = 1, .origin = 1, .destination = 2, .demand = 3,
                                         .utility = Rat(20)}};
  CostParams params{.value_of_time = R("0.4"), .wait_multiplier = R("1.25")};
  auto inst = validate_instance(std::move(net), routes, users, params,
                                CostRule::per_mile(R("0.9")), WaitPolicy::FromRouteStart);
  auto res = solve_assignment<Rat>(inst);
  REQUIRE(res.status == LpStatus::Optimal);
  require_assignment_feasible(inst, res);
  CHECK(res.counts[0] == std::vector<long>{2});
  CHECK(res.objective_net == R("33.7"));  // 2 * 18.2 - 2.7
  CHECK(res.agent_route == std::vector<int>{0, 0, -1});
}

TEST_CASE("a vehicle runs at most one of its candidate routes") {
  // With a short direct 1-3 link it pays to serve traveler 2 on a dedicated
  // route; tying that route to the same vehicle as the through route forbids
  // the split.
  std::vector<Route> routes{Route{.id = 1, .nodes = {1, 2, 3}, .line_capacity = 2},
                            Route{.id = 2, .nodes = {3, 2}, .line_capacity = 2},
                            Route{.id = 3, .nodes = {1, 3}, .line_capacity = 2}};
  CostParams params{.value_of_time = R("0.4"), .wait_multiplier = R("1.25")};
  auto inst = validate_instance(testutil::triangle_network(Rat(1)), routes,
                                testutil::triangle_users(), params, CostRule::per_mile(R("0.9")),
                                WaitPolicy::FromRouteStart);

  auto free_res = solve_assignment<Rat>(inst);
  REQUIRE(free_res.status == LpStatus::Optimal);
  require_assignment_feasible(inst, free_res);
  CHECK(free_res.objective_net == R("65.75"));  // 18.2 + 16.55 - 4.5 + 19.4 - 0.9 + 17
  CHECK(free_res.used == std::vector<char>{1, 1, 1});
  CHECK(free_res.counts[1] == std::vector<long>{0, 0, 1});

  AssignOptions opts;
  opts.vehicle_groups = {{0, 2}};
  auto tied = solve_assignment<Rat>(inst, opts);
  REQUIRE(tied.status == LpStatus::Optimal);
  require_assignment_feasible(inst, tied);
  CHECK(tied.objective_net == R("64.25"));
  CHECK(tied.used == std::vector<char>{1, 1, 0});
  CHECK(tied.counts[1] == std::vector<long>{1, 0, 0});
}

TEST_CASE("the solver matches exhaustive search on random scenarios") {
  std::mt19937 rng(991);
  for (int trial = 0; trial < 300; ++trial) {
    ProblemInstance inst = random_small_instance(rng);
    BruteForceAssignment oracle = brute_force_assignment(inst);
    REQUIRE(oracle.any_solution);

    auto res = solve_assignment<Rat>(inst);
    REQUIRE(res.status == LpStatus::Optimal);
    require_assignment_feasible(inst, res);
    REQUIRE(res.objective_net == oracle.best_net);
    REQUIRE(res.objective_raw == oracle.best_raw);
    REQUIRE(res.objective_raw == res.objective_net + inst.total_operating_cost());
    REQUIRE(res.root_bound_valid);
    REQUIRE(res.root_bound >= res.objective_raw);

    // The canonical solution must be one of the oracle's optima.
    std::vector<long> flat;
    for (const auto& row : res.counts) flat.insert(flat.end(), row.begin(), row.end());
    REQUIRE(oracle.optima.count(flat) == 1);

    auto dres = solve_assignment<double>(inst);
    REQUIRE(dres.status == LpStatus::Optimal);
    REQUIRE(std::abs(dres.objective_net - to_double(oracle.best_net)) <= 1e-6);
  }
}

TEST_CASE("model dimensions follow the instance shape") {
  auto inst = testutil::triangle_two_route_instance();
  auto model = build_assignment_model<Rat>(inst);
  CHECK(model.demand_rows == 4);
  CHECK(model.capacity_rows == 3);  // two links on route 1, one on route 2
  // Three positive matches on route 1, one on route 2, one idle flag each.
  CHECK(model.lp.variable_count() == 6);
  CHECK(model.integer_vars.size() == 6);
  // demand + capacity + one idle-link row per route
  CHECK(model.lp.row_count() == 4 + 3 + 2);
}
