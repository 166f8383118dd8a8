#pragma once

#include <set>
#include <vector>

#include "stablefare/errors.hpp"
#include "stablefare/model.hpp"

namespace stablefare {

// Exhaustive reference optimum for small scenarios: every way of loading
// traveler groups onto routes within link capacities, including rides that
// earn nothing. Exists only to cross-check the integer-programming path and
// is deliberately free of any shared machinery with it.
struct BruteForceAssignment {
  Rat best_net;          // max total payoff minus cost of routes with riders
  Rat best_raw;          // best_net plus cost of every route
  bool any_solution = false;
  long leaves = 0;
  // All optimal rider-count matrices, flattened [group*R + route], with
  // zero-payoff rides stripped (stripping preserves optimality: it can only
  // empty a route, which never raises the cost of running it).
  std::set<std::vector<long>> optima;
};

inline BruteForceAssignment brute_force_assignment(const ProblemInstance& inst,
                                                   long leaf_limit = 5000000) {
  const int R = inst.route_count();
  const int S = inst.user_count();

  BruteForceAssignment out;
  std::vector<std::vector<long>> counts(S, std::vector<long>(R, 0));
  std::vector<std::vector<long>> load(R);
  for (int r = 0; r < R; ++r) load[r].assign(inst.route_link_count(r), 0);

  Rat payoff_sum;

  auto evaluate = [&]() {
    Rat net = payoff_sum;
    for (int r = 0; r < R; ++r) {
      long riders = 0;
      for (int s = 0; s < S; ++s) riders += counts[s][r];
      if (riders > 0) net -= inst.operating_cost(r);
    }
    if (!out.any_solution || net > out.best_net) {
      out.any_solution = true;
      out.best_net = net;
      out.optima.clear();
    }
    if (net == out.best_net && out.optima.size() < 4096) {
      std::vector<long> flat(static_cast<std::size_t>(S) * R, 0);
      for (int s = 0; s < S; ++s)
        for (int r = 0; r < R; ++r)
          if (inst.payoff(s, r) > 0) flat[static_cast<std::size_t>(s) * R + r] = counts[s][r];
      out.optima.insert(std::move(flat));
    }
  };

  auto dfs = [&](auto&& self, int s, int r, long remaining) -> void {
    if (s == S) {
      if (++out.leaves > leaf_limit)
        throw LimitError("exhaustive assignment search exceeded its leaf budget");
      evaluate();
      return;
    }
    if (r == R) {
      int ns = s + 1;
      self(self, ns, 0, ns < S ? inst.users[ns].demand : 0);
      return;
    }
    // Riders of one group share all links of their ride; the tightest slack
    // along those links caps how many can board here.
    long cap = 0;
    if (inst.compatible(s, r)) {
      cap = remaining;
      for (int link : inst.geometry(s, r).used_links)
        cap = std::min(cap, inst.routes[r].line_capacity - load[r][link]);
    }
    for (long c = 0; c <= cap; ++c) {
      if (c > 0) {
        counts[s][r] = c;
        for (int link : inst.geometry(s, r).used_links) load[r][link] += c;
        payoff_sum += inst.payoff(s, r) * c;
      }
      self(self, s, r + 1, remaining - c);
      if (c > 0) {
        counts[s][r] = 0;
        for (int link : inst.geometry(s, r).used_links) load[r][link] -= c;
        payoff_sum -= inst.payoff(s, r) * c;
      }
    }
  };

  dfs(dfs, 0, 0, S > 0 ? inst.users[0].demand : 0);
  out.best_raw = out.best_net + inst.total_operating_cost();
  return out;
}

}  // namespace stablefare
