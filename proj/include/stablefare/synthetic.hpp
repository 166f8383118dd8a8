#pragma once

#include <random>
#include <set>
#include <utility>
#include <vector>

#include "stablefare/model.hpp"
#include "stablefare/pipeline.hpp"

namespace stablefare {

// Deterministic scenario generators. All randomness comes from raw mt19937
// draws (never std::uniform_int_distribution, whose mapping is
// implementation-defined), so a seed pins the same scenario everywhere.

namespace detail {

inline int draw(std::mt19937& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1));
}

inline std::vector<int> shuffled(std::mt19937& rng, std::vector<int> items) {
  for (int i = static_cast<int>(items.size()) - 1; i > 0; --i) {
    int j = static_cast<int>(rng() % static_cast<unsigned>(i + 1));
    std::swap(items[i], items[j]);
  }
  return items;
}

}  // namespace detail

// Small dense scenario for cross-checks against exhaustive search: up to 5
// nodes, 3 routes, 3 traveler groups, 6 unit travelers.
inline ProblemInstance random_small_instance(std::mt19937& rng) {
  using detail::draw;
  const int k = draw(rng, 2, 5);

  Network net;
  for (int n = 1; n <= k; ++n) net.nodes.push_back(n);
  for (int a = 1; a <= k; ++a)
    for (int b = 1; b <= k; ++b)
      if (a != b)
        net.links.push_back(Link{a, b, Rat(draw(rng, 1, 5)), Rat(draw(rng, 1, 3))});

  const int route_count = draw(rng, 1, 3);
  std::vector<Route> routes;
  for (int i = 0; i < route_count; ++i) {
    int len = draw(rng, 2, std::min(k, 4));
    auto order = detail::shuffled(rng, net.nodes);
    Route route;
    route.id = i + 1;
    route.nodes.assign(order.begin(), order.begin() + len);
    route.line_capacity = draw(rng, 1, 2);
    routes.push_back(std::move(route));
  }

  const int group_count = draw(rng, 1, 3);
  int agents_left = 6;
  std::vector<UserGroup> users;
  for (int i = 0; i < group_count; ++i) {
    UserGroup user;
    user.id = i + 1;
    auto ends = detail::shuffled(rng, net.nodes);
    user.origin = ends[0];
    user.destination = ends[1];
    user.demand = std::min(draw(rng, 1, 2), agents_left);
    agents_left -= user.demand;
    user.utility = Rat(draw(rng, 3, 12));
    user.min_benefit = Rat(draw(rng, 0, 1));
    if (draw(rng, 0, 4) == 0)
      user.utility_by_route[draw(rng, 1, route_count)] = Rat(draw(rng, 0, 12));
    users.push_back(std::move(user));
  }

  CostParams params;
  params.value_of_time = Rat(draw(rng, 1, 2), 2);
  params.wait_multiplier = Rat(draw(rng, 4, 5), 4);
  params.min_profit = Rat(draw(rng, 0, 1), 2);
  CostRule rule = CostRule::per_mile(Rat(draw(rng, 1, 2), 2));
  WaitPolicy policy = draw(rng, 0, 1) ? WaitPolicy::FromRouteStart : WaitPolicy::None;
  return validate_instance(std::move(net), std::move(routes), std::move(users), params, rule,
                           policy);
}

// City-grid trip sample: every trip gets its own pickup and dropoff corner
// (all stops distinct, so pairwise shared routes always have three legs),
// rectilinear travel between corners, metered fares plus seeded cent noise.
struct TripSetOptions {
  int count = 50;
  unsigned seed = 1;
  int grid = 24;                       // corners live on grid x grid blocks
  Rat minutes_per_block = Rat(1, 4);   // 12 mph at 20 blocks per mile
  Rat miles_per_block = Rat(1, 20);
  Rat fare_base = Rat(5, 2);
  Rat fare_per_mile = Rat(7, 4);
  long first_request = 1754006400;     // epoch anchor, arbitrary
  long horizon_seconds = 540;
  int max_passengers = 3;
};

struct TripSet {
  std::vector<TripRecord> trips;
  TripMatrix minutes;
  TripMatrix miles;
};

inline TripSet random_trip_set(const TripSetOptions& opt = {}) {
  if (opt.count < 1 || opt.grid < 2 || 2 * opt.count > opt.grid * opt.grid)
    throw ValidationError("trip sample does not fit the grid");
  std::mt19937 rng(opt.seed);
  using detail::draw;

  std::vector<std::pair<int, int>> corners;
  std::set<std::pair<int, int>> taken;
  while (static_cast<int>(corners.size()) < 2 * opt.count) {
    std::pair<int, int> c{draw(rng, 0, opt.grid - 1), draw(rng, 0, opt.grid - 1)};
    if (taken.insert(c).second) corners.push_back(c);
  }

  std::vector<int> ids;
  for (std::size_t i = 0; i < corners.size(); ++i)
    ids.push_back(1000 + corners[i].first * opt.grid + corners[i].second);
  std::vector<std::vector<Rat>> minute_cells(ids.size()), mile_cells(ids.size());
  for (std::size_t a = 0; a < corners.size(); ++a) {
    for (std::size_t b = 0; b < corners.size(); ++b) {
      long blocks = std::abs(corners[a].first - corners[b].first) +
                    std::abs(corners[a].second - corners[b].second);
      minute_cells[a].push_back(Rat(blocks) * opt.minutes_per_block);
      mile_cells[a].push_back(Rat(blocks) * opt.miles_per_block);
    }
  }

  TripSet out;
  out.minutes = TripMatrix(ids, std::move(minute_cells));
  out.miles = TripMatrix(ids, std::move(mile_cells));
  for (int k = 0; k < opt.count; ++k) {
    TripRecord t;
    t.id = k + 1;
    t.pickup_node = ids[2 * k];
    t.dropoff_node = ids[2 * k + 1];
    t.request_time = opt.first_request + draw(rng, 0, static_cast<int>(opt.horizon_seconds) - 1);
    t.fare = opt.fare_base + opt.fare_per_mile * out.miles.at(t.pickup_node, t.dropoff_node) +
             Rat(draw(rng, 0, 99), 100);
    t.passengers = draw(rng, 1, opt.max_passengers);
    out.trips.push_back(std::move(t));
  }
  return out;
}

}  // namespace stablefare
