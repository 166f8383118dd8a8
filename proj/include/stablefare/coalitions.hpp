#pragma once
// Capacity-feasible rider coalitions. A coalition is a multiset of user
// groups that could jointly ride one route without exceeding the per-link
// rider bound; each one later becomes a stability constraint of the core
// system. Identical unit agents are interchangeable, so exactly one
// representative per multiset of group memberships is produced.

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "stablefare/errors.hpp"
#include "stablefare/model.hpp"
#include "stablefare/numeric.hpp"

namespace stablefare {

struct CoalitionMember {
  int group = 0;   // user-group index
  long count = 0;  // members drawn from the group, 1..demand
};

inline bool operator==(const CoalitionMember& a, const CoalitionMember& b) {
  return a.group == b.group && a.count == b.count;
}

struct Coalition {
  int route = 0;                         // target route index
  std::vector<CoalitionMember> members;  // ascending group index
  Rat rhs;                               // sum of member payoffs minus operating cost
};

// Hard ceiling on emitted coalitions; beyond it enumeration aborts with a
// LimitError instead of silently truncating the constraint system.
inline constexpr long kDefaultCoalitionLimit = 2000000;

namespace detail {

// Depth-first over groups in ascending order; every multiset is reached on
// exactly one path. Members are restricted to pairs with positive payoff:
// a zero-payoff rider adds nothing to the right-hand side while adding a
// nonnegative value to the left, so its coalitions are implied anyway.
inline void route_coalitions(const ProblemInstance& inst, int route, long limit,
                             std::vector<Coalition>& out) {
  struct Pool {
    int group;
    long demand;
    const std::vector<int>* links;  // positions within the route's leg list
    Rat payoff;
  };
  std::vector<Pool> pool;
  for (int s = 0; s < inst.user_count(); ++s) {
    if (!inst.compatible(s, route) || !(inst.payoff(s, route) > 0)) continue;
    pool.push_back({s, static_cast<long>(inst.users[s].demand),
                    &inst.geometry(s, route).used_links, inst.payoff(s, route)});
  }
  if (pool.empty()) return;

  const long cap = inst.routes[route].line_capacity;
  std::vector<long> load(inst.route_link_count(route), 0);
  std::vector<CoalitionMember> stack;
  Rat sum;
  const Rat& cost = inst.operating_cost(route);

  auto emit = [&]() {
    if (static_cast<long>(out.size()) >= limit)
      throw LimitError("coalition enumeration exceeded the limit of " + std::to_string(limit) +
                       " coalitions");
    Coalition c;
    c.route = route;
    c.members = stack;
    c.rhs = sum - cost;
    out.push_back(std::move(c));
  };

  auto dfs = [&](auto&& self, std::size_t next) -> void {
    for (std::size_t j = next; j < pool.size(); ++j) {
      const Pool& p = pool[j];
      long room = p.demand;
      for (int l : *p.links) room = std::min(room, cap - load[l]);
      if (room < 1) continue;
      stack.push_back({p.group, 0});
      long placed = 0;
      while (placed < room) {
        ++placed;
        stack.back().count = placed;
        for (int l : *p.links) ++load[l];
        sum += p.payoff;
        emit();
        self(self, j + 1);
      }
      stack.pop_back();
      for (int l : *p.links) load[l] -= placed;
      sum -= Rat(placed) * p.payoff;
    }
  };
  dfs(dfs, 0);
}

}  // namespace detail

// All feasible coalitions of one route, in depth-first order.
inline std::vector<Coalition> enumerate_coalitions(const ProblemInstance& inst, int route,
                                                   long limit = kDefaultCoalitionLimit) {
  if (route < 0 || route >= inst.route_count())
    throw ValidationError("coalition enumeration on unknown route index " + std::to_string(route));
  std::vector<Coalition> out;
  detail::route_coalitions(inst, route, limit, out);
  return out;
}

// All feasible coalitions of every route, route-major; the limit applies to
// the combined count.
inline std::vector<Coalition> enumerate_all_coalitions(const ProblemInstance& inst,
                                                       long limit = kDefaultCoalitionLimit) {
  std::vector<Coalition> out;
  for (int r = 0; r < inst.route_count(); ++r) detail::route_coalitions(inst, r, limit, out);
  return out;
}

}  // namespace stablefare
