#pragma once

#include <vector>

#include "stablefare/model.hpp"

// Shared fixture builders for the test suite.
namespace testutil {

using stablefare::CostParams;
using stablefare::CostRule;
using stablefare::Link;
using stablefare::Network;
using stablefare::ProblemInstance;
using stablefare::Rat;
using stablefare::Route;
using stablefare::UserGroup;
using stablefare::WaitPolicy;

inline Rat R(const char* text) { return stablefare::parse_decimal(text); }

// Three-node triangle: bidirectional links 1-2 (3 mi), 2-3 (2 mi), 1-3
// (direct_miles, default 5). Vehicles run at 40 mph, i.e. 1.5 min per mile.
inline Network triangle_network(const Rat& direct_miles = Rat(5)) {
  Network net;
  net.nodes = {1, 2, 3};
  auto add = [&](int a, int b, const Rat& miles) {
    Rat minutes = miles * Rat(3, 2);
    net.links.push_back(Link{a, b, minutes, miles});
    net.links.push_back(Link{b, a, minutes, miles});
  };
  add(1, 2, Rat(3));
  add(2, 3, Rat(2));
  add(1, 3, direct_miles);
  return net;
}

// Four travelers on the triangle, one per demanded origin-destination pair,
// all valuing the trip at $20.
inline std::vector<UserGroup> triangle_users(const Rat& min_benefit = Rat(0)) {
  std::vector<UserGroup> users(4);
  users[0] = UserGroup{.id = 1, .origin = 1, .destination = 2, .demand = 1,
                       .utility = Rat(20), .min_benefit = min_benefit};
  users[1] = UserGroup{.id = 2, .origin = 1, .destination = 3, .demand = 1,
                       .utility = Rat(20), .min_benefit = min_benefit};
  users[2] = UserGroup{.id = 3, .origin = 2, .destination = 3, .demand = 1,
                       .utility = Rat(20), .min_benefit = min_benefit};
  users[3] = UserGroup{.id = 4, .origin = 3, .destination = 2, .demand = 1,
                       .utility = Rat(20), .min_benefit = min_benefit};
  return users;
}

// The known-good service plan on the triangle: route 1 runs 1-2-3, route 2
// runs 3-2, waiting charged from the route start. Time is worth $0.4/min,
// waiting weighs 1.25x, operating costs $0.9/mile.
inline ProblemInstance triangle_two_route_instance(const Rat& direct_miles = Rat(5),
                                                   const Rat& min_profit = Rat(0)) {
  std::vector<Route> routes(2);
  routes[0] = Route{.id = 1, .nodes = {1, 2, 3}, .line_capacity = 2};
  routes[1] = Route{.id = 2, .nodes = {3, 2}, .line_capacity = 2};
  CostParams params{.value_of_time = R("0.4"), .wait_multiplier = R("1.25"),
                    .min_profit = min_profit};
  return validate_instance(triangle_network(direct_miles), routes, triangle_users(), params,
                           CostRule::per_mile(R("0.9")), WaitPolicy::FromRouteStart);
}

}  // namespace testutil
