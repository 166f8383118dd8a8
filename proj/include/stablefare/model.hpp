#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stablefare/errors.hpp"
#include "stablefare/numeric.hpp"

namespace stablefare {

// ---------------------------------------------------------------------------
// Input types
// ---------------------------------------------------------------------------

struct Link {
  int from = 0;
  int to = 0;
  Rat minutes;  // directed travel time
  Rat miles;    // directed length
};

// Directed graph over integer node ids; at most one link per ordered pair.
class Network {
 public:
  std::vector<int> nodes;
  std::vector<Link> links;

  // Built by finalize(); link_at(a,b) is the index into links or -1.
  void finalize() {
    index_.clear();
    node_set_.clear();
    for (int n : nodes) {
      if (!node_set_.insert(n).second)
        throw ValidationError("duplicate node id " + std::to_string(n));
    }
    for (std::size_t i = 0; i < links.size(); ++i) {
      const Link& l = links[i];
      if (!has_node(l.from) || !has_node(l.to))
        throw ValidationError("link " + std::to_string(l.from) + "->" +
                              std::to_string(l.to) + " references unknown node");
      if (l.from == l.to)
        throw ValidationError("self-loop link at node " + std::to_string(l.from));
      if (l.minutes < 0 || l.miles < 0)
        throw ValidationError("negative time or length on link " +
                              std::to_string(l.from) + "->" + std::to_string(l.to));
      if (!index_.emplace(std::make_pair(l.from, l.to), static_cast<int>(i)).second)
        throw ValidationError("duplicate link " + std::to_string(l.from) + "->" +
                              std::to_string(l.to));
    }
  }

  bool has_node(int id) const { return node_set_.count(id) != 0; }

  int link_at(int from, int to) const {
    auto it = index_.find({from, to});
    return it == index_.end() ? -1 : it->second;
  }

 private:
  std::map<std::pair<int, int>, int> index_;
  std::set<int> node_set_;
};

// A candidate service route: a node sequence over existing links. Nodes are
// distinct, except the last may equal the first (a closed tour back to the
// start). Fleet scenarios tag routes with their owning operator and vehicle.
struct Route {
  int id = 0;
  std::vector<int> nodes;
  int line_capacity = 1;               // per-link rider bound w
  std::optional<Rat> operating_cost;   // required under CostRule::Explicit
  std::optional<Rat> min_profit;       // per-route operator floor override
  int operator_id = -1;                // -1 when not a fleet route
  int vehicle_id = -1;
};

// A group of identical travelers: same origin/destination, same utility,
// `demand` unit travelers.
struct UserGroup {
  int id = 0;
  int origin = 0;
  int destination = 0;
  int demand = 1;                        // q >= 1, bundle size
  Rat utility;                           // willingness to pay, all routes
  std::map<int, Rat> utility_by_route;   // optional per-route override (route id)
  Rat min_benefit;                       // reservation surplus g >= 0
  std::optional<Rat> observed_fare;      // carried through the trip pipeline
};

struct CostParams {
  Rat value_of_time;           // $/min of in-vehicle time
  Rat wait_multiplier = 1;     // weight on waiting minutes
  Rat walk_multiplier = 1;     // weight on walking minutes (policy analysis)
  Rat incompatible_cost = 1000000;  // sentinel generalized cost
  Rat min_profit;              // default per-match operator floor b
};

// How route operating costs are derived.
struct CostRule {
  enum class Kind { PerMile, PerLinkAffine, Explicit };
  Kind kind = Kind::PerMile;
  Rat rate;      // PerMile: $ per mile
  Rat base;      // PerLinkAffine: base + per_link * |links|
  Rat per_link;

  static CostRule per_mile(Rat rate) {
    CostRule r;
    r.kind = Kind::PerMile;
    r.rate = std::move(rate);
    return r;
  }
  static CostRule per_link_affine(Rat base, Rat per_link) {
    CostRule r;
    r.kind = Kind::PerLinkAffine;
    r.base = std::move(base);
    r.per_link = std::move(per_link);
    return r;
  }
  static CostRule explicit_costs() {
    CostRule r;
    r.kind = Kind::Explicit;
    return r;
  }
};

// Waiting-time convention. Pure route scenarios have no vehicle motion before
// boarding; fleet scenarios charge the vehicle's travel from its start node
// (= the first node of the route) to the boarding node.
enum class WaitPolicy { None, FromRouteStart };

// ---------------------------------------------------------------------------
// Match geometry
// ---------------------------------------------------------------------------

// Where a traveler boards and alights on a route, and what that ride costs in
// time. A traveler is compatible when their origin appears strictly before
// their destination in the route sequence (first boarding opportunity, first
// alighting opportunity after it).
struct MatchGeometry {
  bool compatible = false;
  int board_index = -1;
  int alight_index = -1;
  std::vector<int> used_links;  // positions into the route's link list
  Rat in_vehicle_minutes;
  Rat wait_minutes;
};

namespace detail {

// Links of a route as (from,to) pairs; sequence validity is checked by
// validate_instance, not here.
inline std::vector<std::pair<int, int>> route_leg_pairs(const Route& route) {
  std::vector<std::pair<int, int>> legs;
  for (std::size_t i = 0; i + 1 < route.nodes.size(); ++i)
    legs.emplace_back(route.nodes[i], route.nodes[i + 1]);
  return legs;
}

}  // namespace detail

// Boarding/alighting geometry of (origin -> destination) on `route`,
// with per-leg minutes supplied by the caller (prefix[i] = minutes from the
// route start to node position i).
inline MatchGeometry match_geometry(const Route& route, int origin, int destination,
                                    const std::vector<Rat>& prefix_minutes,
                                    WaitPolicy wait_policy) {
  MatchGeometry g;
  const auto& seq = route.nodes;
  int board = -1;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq[i] == origin) {
      board = static_cast<int>(i);
      break;
    }
  }
  if (board < 0) return g;
  int alight = -1;
  for (std::size_t i = board + 1; i < seq.size(); ++i) {
    if (seq[i] == destination) {
      alight = static_cast<int>(i);
      break;
    }
  }
  if (alight < 0) return g;

  g.compatible = true;
  g.board_index = board;
  g.alight_index = alight;
  for (int i = board; i < alight; ++i) g.used_links.push_back(i);
  g.in_vehicle_minutes = prefix_minutes[alight] - prefix_minutes[board];
  if (wait_policy == WaitPolicy::FromRouteStart)
    g.wait_minutes = prefix_minutes[board];
  return g;
}

// Generalized travel cost t of a compatible match: monetized in-vehicle time
// plus weighted waiting time. Incompatible pairs carry the sentinel cost.
inline Rat travel_cost(const CostParams& params, const MatchGeometry& g) {
  if (!g.compatible) return params.incompatible_cost;
  return params.value_of_time * g.in_vehicle_minutes +
         params.value_of_time * params.wait_multiplier * g.wait_minutes;
}

// ---------------------------------------------------------------------------
// Validated instance
// ---------------------------------------------------------------------------

// Immutable, fully derived problem data: per-route costs, per (group, route)
// geometry, travel costs and match payoffs, and the unit-traveler expansion of
// demand bundles. Safe for concurrent reads after construction.
class ProblemInstance {
 public:
  Network network;
  std::vector<Route> routes;     // sorted by id
  std::vector<UserGroup> users;  // sorted by id
  CostParams params;
  CostRule cost_rule;
  WaitPolicy wait_policy = WaitPolicy::None;

  int route_count() const { return static_cast<int>(routes.size()); }
  int user_count() const { return static_cast<int>(users.size()); }

  int route_index(int route_id) const {
    auto it = route_index_.find(route_id);
    if (it == route_index_.end())
      throw ValidationError("unknown route id " + std::to_string(route_id));
    return it->second;
  }
  int user_index(int user_id) const {
    auto it = user_index_.find(user_id);
    if (it == user_index_.end())
      throw ValidationError("unknown user id " + std::to_string(user_id));
    return it->second;
  }

  // Derived route data (indexed like `routes`).
  const Rat& operating_cost(int r) const { return operating_cost_[r]; }
  const Rat& route_minutes(int r) const { return route_minutes_[r]; }
  const Rat& route_miles(int r) const { return route_miles_[r]; }
  int route_link_count(int r) const { return static_cast<int>(leg_pairs_[r].size()); }
  const std::vector<std::pair<int, int>>& route_legs(int r) const { return leg_pairs_[r]; }

  // Operator floor b applied to matches on route r.
  const Rat& min_profit(int r) const { return min_profit_[r]; }

  // Per (user-group u, route r) data.
  const MatchGeometry& geometry(int u, int r) const { return geom_[u * route_count() + r]; }
  const Rat& travel_cost(int u, int r) const { return travel_cost_[u * route_count() + r]; }
  const Rat& utility(int u, int r) const { return utility_[u * route_count() + r]; }
  // Match payoff a = max(0, U - t - g - b).
  const Rat& payoff(int u, int r) const { return payoff_[u * route_count() + r]; }
  bool compatible(int u, int r) const { return geom_[u * route_count() + r].compatible; }

  // Unit-traveler expansion of demand bundles. Agents are ordered by
  // (user group, copy), so agents of one group have consecutive ids.
  int agent_count() const { return static_cast<int>(agent_group_.size()); }
  int agent_group(int agent) const { return agent_group_[agent]; }
  const std::vector<int>& group_agents(int u) const { return group_agents_[u]; }

  int total_demand() const { return agent_count(); }

  Rat total_operating_cost() const {
    Rat sum;
    for (const Rat& c : operating_cost_) sum += c;
    return sum;
  }

  friend ProblemInstance validate_instance(Network network, std::vector<Route> routes,
                                           std::vector<UserGroup> users, CostParams params,
                                           CostRule rule, WaitPolicy wait_policy);

 private:
  std::map<int, int> route_index_, user_index_;
  std::vector<Rat> operating_cost_, route_minutes_, route_miles_, min_profit_;
  std::vector<std::vector<std::pair<int, int>>> leg_pairs_;
  std::vector<MatchGeometry> geom_;
  std::vector<Rat> travel_cost_, utility_, payoff_;
  std::vector<int> agent_group_;
  std::vector<std::vector<int>> group_agents_;
};

// Computes the operating cost of one route under `rule`.
inline Rat route_operating_cost(const CostRule& rule, const Route& route, const Rat& total_miles,
                                int link_count) {
  switch (rule.kind) {
    case CostRule::Kind::PerMile:
      return rule.rate * total_miles;
    case CostRule::Kind::PerLinkAffine:
      return rule.base + rule.per_link * link_count;
    case CostRule::Kind::Explicit:
      if (!route.operating_cost)
        throw ValidationError("route " + std::to_string(route.id) +
                              " has no operating cost but the cost rule is explicit");
      return *route.operating_cost;
  }
  throw ValidationError("unknown cost rule");
}

// Checks all inputs and produces the fully derived instance. Throws
// ValidationError with a pointed message on the first problem found.
inline ProblemInstance validate_instance(Network network, std::vector<Route> routes,
                                         std::vector<UserGroup> users, CostParams params,
                                         CostRule rule, WaitPolicy wait_policy = WaitPolicy::None) {
  network.finalize();

  if (params.value_of_time < 0) throw ValidationError("negative value of time");
  if (params.wait_multiplier < 0) throw ValidationError("negative wait multiplier");
  if (params.walk_multiplier < 0) throw ValidationError("negative walk multiplier");
  if (params.incompatible_cost <= 0) throw ValidationError("incompatible cost must be positive");

  std::sort(routes.begin(), routes.end(), [](const Route& a, const Route& b) { return a.id < b.id; });
  std::sort(users.begin(), users.end(),
            [](const UserGroup& a, const UserGroup& b) { return a.id < b.id; });

  ProblemInstance inst;
  inst.network = std::move(network);
  inst.routes = std::move(routes);
  inst.users = std::move(users);
  inst.params = std::move(params);
  inst.cost_rule = rule;
  inst.wait_policy = wait_policy;

  const int R = inst.route_count();
  const int S = inst.user_count();

  // Routes: sequence validity, derived lengths, operating costs.
  inst.leg_pairs_.resize(R);
  inst.route_minutes_.resize(R);
  inst.route_miles_.resize(R);
  inst.operating_cost_.resize(R);
  inst.min_profit_.resize(R);
  std::vector<std::vector<Rat>> prefix(R);
  for (int r = 0; r < R; ++r) {
    const Route& route = inst.routes[r];
    if (r > 0 && inst.routes[r - 1].id == route.id)
      throw ValidationError("duplicate route id " + std::to_string(route.id));
    inst.route_index_[route.id] = r;
    if (route.nodes.size() < 2)
      throw ValidationError("route " + std::to_string(route.id) + " has fewer than two nodes");
    if (route.line_capacity < 1)
      throw ValidationError("route " + std::to_string(route.id) + " has nonpositive line capacity");

    std::set<int> seen;
    for (std::size_t i = 0; i < route.nodes.size(); ++i) {
      int node = route.nodes[i];
      if (!inst.network.has_node(node))
        throw ValidationError("route " + std::to_string(route.id) + " visits unknown node " +
                              std::to_string(node));
      bool closes_tour = i + 1 == route.nodes.size() && node == route.nodes.front();
      if (!seen.insert(node).second && !closes_tour)
        throw ValidationError("route " + std::to_string(route.id) + " repeats node " +
                              std::to_string(node) + " before the end of the sequence");
    }

    inst.leg_pairs_[r] = detail::route_leg_pairs(route);
    prefix[r].assign(route.nodes.size(), Rat(0));
    for (std::size_t i = 0; i < inst.leg_pairs_[r].size(); ++i) {
      auto [a, b] = inst.leg_pairs_[r][i];
      int link = inst.network.link_at(a, b);
      if (link < 0)
        throw ValidationError("route " + std::to_string(route.id) + " uses missing link " +
                              std::to_string(a) + "->" + std::to_string(b));
      inst.route_minutes_[r] += inst.network.links[link].minutes;
      inst.route_miles_[r] += inst.network.links[link].miles;
      prefix[r][i + 1] = inst.route_minutes_[r];
    }

    if (rule.kind != CostRule::Kind::Explicit && route.operating_cost)
      throw ValidationError("route " + std::to_string(route.id) +
                            " carries an explicit operating cost but the cost rule derives costs");
    inst.operating_cost_[r] =
        route_operating_cost(rule, route, inst.route_miles_[r], inst.route_link_count(r));
    if (inst.operating_cost_[r] < 0)
      throw ValidationError("route " + std::to_string(route.id) + " has negative operating cost");
    inst.min_profit_[r] = route.min_profit ? *route.min_profit : inst.params.min_profit;
  }

  // Users: identity checks and bundle expansion.
  inst.group_agents_.resize(S);
  Rat max_utility;
  for (int u = 0; u < S; ++u) {
    const UserGroup& user = inst.users[u];
    if (u > 0 && inst.users[u - 1].id == user.id)
      throw ValidationError("duplicate user id " + std::to_string(user.id));
    inst.user_index_[user.id] = u;
    if (!inst.network.has_node(user.origin) || !inst.network.has_node(user.destination))
      throw ValidationError("user " + std::to_string(user.id) + " references unknown node");
    if (user.origin == user.destination)
      throw ValidationError("user " + std::to_string(user.id) +
                            " has identical origin and destination");
    if (user.demand < 1)
      throw ValidationError("user " + std::to_string(user.id) + " has nonpositive demand");
    if (user.min_benefit < 0)
      throw ValidationError("user " + std::to_string(user.id) + " has negative minimum benefit");
    for (const auto& [route_id, value] : user.utility_by_route) {
      if (!inst.route_index_.count(route_id))
        throw ValidationError("user " + std::to_string(user.id) +
                              " overrides utility on unknown route " + std::to_string(route_id));
      max_utility = std::max(max_utility, value);
    }
    max_utility = std::max(max_utility, user.utility);
    for (int copy = 0; copy < user.demand; ++copy) {
      inst.group_agents_[u].push_back(static_cast<int>(inst.agent_group_.size()));
      inst.agent_group_.push_back(u);
    }
  }
  if (S > 0 && inst.params.incompatible_cost <= max_utility)
    throw ValidationError("incompatible cost sentinel must exceed every utility value");

  // Per (group, route) geometry, travel cost, payoff.
  inst.geom_.resize(static_cast<std::size_t>(S) * R);
  inst.travel_cost_.resize(static_cast<std::size_t>(S) * R);
  inst.utility_.resize(static_cast<std::size_t>(S) * R);
  inst.payoff_.resize(static_cast<std::size_t>(S) * R);
  for (int u = 0; u < S; ++u) {
    const UserGroup& user = inst.users[u];
    for (int r = 0; r < R; ++r) {
      std::size_t k = static_cast<std::size_t>(u) * R + r;
      inst.geom_[k] =
          match_geometry(inst.routes[r], user.origin, user.destination, prefix[r], wait_policy);
      inst.travel_cost_[k] = travel_cost(inst.params, inst.geom_[k]);
      auto it = user.utility_by_route.find(inst.routes[r].id);
      inst.utility_[k] = it != user.utility_by_route.end() ? it->second : user.utility;
      Rat a = inst.utility_[k] - inst.travel_cost_[k] - user.min_benefit - inst.min_profit_[r];
      inst.payoff_[k] = a > 0 ? a : Rat(0);
    }
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Candidate path enumeration
// ---------------------------------------------------------------------------

struct PathEnumOptions {
  // Restrict to paths starting at this node (vehicle start); -1 = any start.
  int start_node = -1;
  // Also emit closed tours (path revisits its first node at the end).
  bool closed_tours = false;
  // Keep only paths that can serve at least one of the given (origin,
  // destination) pairs; empty = keep everything.
  std::vector<std::pair<int, int>> demand;
};

// All simple directed paths (>= 2 nodes) of the network, optionally closed
// into tours, optionally filtered to demand-serving paths. Deterministic
// order: depth-first over ascending node ids.
inline std::vector<std::vector<int>> enumerate_candidate_paths(const Network& network,
                                                               const PathEnumOptions& opts) {
  std::vector<int> nodes = network.nodes;
  std::sort(nodes.begin(), nodes.end());

  auto serves_demand = [&](const std::vector<int>& seq) {
    if (opts.demand.empty()) return true;
    for (auto [o, d] : opts.demand) {
      for (std::size_t i = 0; i < seq.size(); ++i) {
        if (seq[i] != o) continue;
        for (std::size_t j = i + 1; j < seq.size(); ++j)
          if (seq[j] == d) return true;
        break;  // first occurrence of the origin decides boarding
      }
    }
    return false;
  };

  std::vector<std::vector<int>> out;
  std::vector<int> seq;
  auto extend = [&](auto&& self) -> void {
    if (seq.size() >= 2 && serves_demand(seq)) out.push_back(seq);
    for (int next : nodes) {
      if (network.link_at(seq.back(), next) < 0) continue;
      if (next == seq.front() && opts.closed_tours && seq.size() >= 3) {
        seq.push_back(next);
        if (serves_demand(seq)) out.push_back(seq);
        seq.pop_back();
      }
      if (std::find(seq.begin(), seq.end(), next) != seq.end()) continue;
      seq.push_back(next);
      self(self);
      seq.pop_back();
    }
  };
  for (int start : nodes) {
    if (opts.start_node >= 0 && start != opts.start_node) continue;
    seq.assign(1, start);
    extend(extend);
  }
  return out;
}

}  // namespace stablefare
