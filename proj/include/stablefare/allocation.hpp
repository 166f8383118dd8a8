#pragma once
// Core allocation: builds the stability/feasibility system for an optimal
// assignment, optimizes linear objectives over it, refines ties toward
// balanced ticket prices, and converts allocations into price schedules.
//
// Variables are one benefit u per user group (identical unit agents provably
// earn the same amount in any stable outcome, so one shared variable is
// exact) and one profit v per route. A used route's riders and profit split
// its net surplus exactly; unused routes earn zero; a group with any member
// left unmatched keeps zero benefit, since an idle identical agent would
// undercut any positive one.

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stablefare/assignment.hpp"
#include "stablefare/coalitions.hpp"
#include "stablefare/errors.hpp"
#include "stablefare/lp.hpp"
#include "stablefare/model.hpp"
#include "stablefare/numeric.hpp"

namespace stablefare {

enum class StabilityMode {
  Decentralized,  // every feasible coalition constrains the outcome
  Centralized,    // only coalitions containing a member served by a rival operator
};

enum class CoreStatus { Optimal, EmptyCore };

inline const char* to_string(CoreStatus s) {
  return s == CoreStatus::Optimal ? "optimal" : "empty_core";
}

template <class T>
struct AllocationOutcome {
  CoreStatus status = CoreStatus::EmptyCore;
  std::vector<T> user_value;   // u per user group (agents of a group share)
  std::vector<T> agent_value;  // u per expanded unit agent
  std::vector<T> route_value;  // v per route
  T objective{};               // value of the optimized objective
  T total_value{};             // sum over agents of u plus sum over routes of v
};

// Linear functional over (u, v). Empty weight vectors mean all zeros.
template <class T>
struct AllocationObjective {
  std::vector<T> user_weights;   // applied to u per group
  std::vector<T> route_weights;  // applied to v per route
};

// Z = total user benefit over expanded unit agents.
template <class T>
AllocationObjective<T> user_value_objective(const ProblemInstance& inst) {
  AllocationObjective<T> obj;
  for (int s = 0; s < inst.user_count(); ++s)
    obj.user_weights.push_back(num_traits<T>::from_int(inst.users[s].demand));
  obj.route_weights.assign(inst.route_count(), T(0));
  return obj;
}

// Z = total route profit.
template <class T>
AllocationObjective<T> route_value_objective(const ProblemInstance& inst) {
  AllocationObjective<T> obj;
  obj.user_weights.assign(inst.user_count(), T(0));
  obj.route_weights.assign(inst.route_count(), T(1));
  return obj;
}

template <class T>
struct AllocationOptions {
  StabilityMode mode = StabilityMode::Decentralized;
  long max_coalitions = kDefaultCoalitionLimit;
  LpOptions lp{};
  // Smooth the optimal face toward balanced prices (lowest possible maximum
  // price for user-side outcomes, highest possible minimum for operator-side).
  bool refine = true;
};

// True when some coalition member is currently unmatched or rides a route
// run by a different operator than the coalition's target route. Routes
// without an operator id count as one-route operators of their own.
inline bool coalition_has_rival_member(const ProblemInstance& inst,
                                       const std::vector<std::vector<long>>& counts, int route,
                                       const std::vector<CoalitionMember>& members) {
  auto owner = [&](int r) {
    int id = inst.routes[r].operator_id;
    return id >= 0 ? id : -(r + 2);
  };
  const int target = owner(route);
  for (const CoalitionMember& m : members) {
    long matched = 0;
    for (int r = 0; r < inst.route_count(); ++r) {
      long c = counts[m.group][r];
      if (c == 0) continue;
      matched += c;
      if (owner(r) != target) return true;
    }
    if (matched < inst.users[m.group].demand) return true;  // idle members answer to nobody
  }
  return false;
}

// The constraint system whose points are exactly the stable outcomes.
template <class T>
struct CoreSystem {
  LinearProgram<T> lp;
  std::vector<int> u_var;          // per group
  std::vector<int> v_var;          // per route
  std::vector<long> matched;       // matched agents per group
  std::vector<char> group_pinned;  // u fixed to zero (some member unmatched)
  std::vector<Coalition> rows;     // stability rows actually emitted, in order
};

template <class T>
CoreSystem<T> build_core_system(const ProblemInstance& inst, const AssignmentResult<T>& assign,
                                StabilityMode mode = StabilityMode::Decentralized,
                                long max_coalitions = kDefaultCoalitionLimit) {
  if (assign.status != LpStatus::Optimal)
    throw ValidationError("allocation requires an optimal assignment");
  const int S = inst.user_count();
  const int R = inst.route_count();

  CoreSystem<T> sys;
  sys.matched.assign(S, 0);
  for (int s = 0; s < S; ++s)
    for (int r = 0; r < R; ++r) sys.matched[s] += assign.counts[s][r];
  sys.group_pinned.assign(S, 0);
  for (int s = 0; s < S; ++s)
    sys.group_pinned[s] = sys.matched[s] < inst.users[s].demand ? 1 : 0;

  for (int s = 0; s < S; ++s)
    sys.u_var.push_back(sys.lp.add_variable(
        T(0), sys.group_pinned[s] ? std::optional<T>(T(0)) : std::nullopt, T(0)));
  for (int r = 0; r < R; ++r)
    sys.v_var.push_back(
        sys.lp.add_variable(T(0), assign.used[r] ? std::nullopt : std::optional<T>(T(0)), T(0)));

  // Riders and profit of each used route split its net surplus exactly.
  for (int r = 0; r < R; ++r) {
    if (!assign.used[r]) continue;
    std::vector<std::pair<int, T>> terms;
    Rat rhs = -inst.operating_cost(r);
    for (int s = 0; s < S; ++s) {
      long c = assign.counts[s][r];
      if (c == 0) continue;
      terms.push_back({sys.u_var[s], num_traits<T>::from_int(c)});
      rhs += Rat(c) * inst.payoff(s, r);
    }
    terms.push_back({sys.v_var[r], T(1)});
    sys.lp.add_eq(terms, num_traits<T>::from_rat(rhs));
  }

  // No feasible coalition may out-earn the values its members and target
  // route hold now. Rows with a nonpositive right-hand side are implied by
  // nonnegativity and skipped.
  for (Coalition& c : enumerate_all_coalitions(inst, max_coalitions)) {
    if (!(c.rhs > 0)) continue;
    if (mode == StabilityMode::Centralized &&
        !coalition_has_rival_member(inst, assign.counts, c.route, c.members))
      continue;
    std::vector<std::pair<int, T>> terms;
    for (const CoalitionMember& m : c.members)
      terms.push_back({sys.u_var[m.group], num_traits<T>::from_int(m.count)});
    terms.push_back({sys.v_var[c.route], T(1)});
    sys.lp.add_ge(terms, num_traits<T>::from_rat(c.rhs));
    sys.rows.push_back(std::move(c));
  }
  return sys;
}

namespace detail {

template <class T>
AllocationOutcome<T> read_outcome(const ProblemInstance& inst, const std::vector<T>& u,
                                  const std::vector<T>& v, const AllocationObjective<T>& obj) {
  AllocationOutcome<T> out;
  out.status = CoreStatus::Optimal;
  out.user_value = u;
  out.route_value = v;
  for (int a = 0; a < inst.agent_count(); ++a) out.agent_value.push_back(u[inst.agent_group(a)]);
  out.objective = T(0);
  out.total_value = T(0);
  for (int s = 0; s < inst.user_count(); ++s) {
    if (!obj.user_weights.empty()) out.objective += obj.user_weights[s] * u[s];
    out.total_value += num_traits<T>::from_int(inst.users[s].demand) * u[s];
  }
  for (int r = 0; r < inst.route_count(); ++r) {
    if (!obj.route_weights.empty()) out.objective += obj.route_weights[r] * v[r];
    out.total_value += v[r];
  }
  return out;
}

template <class T>
std::pair<std::vector<T>, std::vector<T>> split_point(const CoreSystem<T>& sys,
                                                      const std::vector<T>& x) {
  std::vector<T> u, v;
  for (int var : sys.u_var) u.push_back(x[var]);
  for (int var : sys.v_var) v.push_back(x[var]);
  return {std::move(u), std::move(v)};
}

// Solves the system under the given objective; Infeasible means the core is
// empty. The system is a bounded polytope, so no other failure is expected.
template <class T>
LpResult<T> solve_core_lp(LinearProgram<T>& lp, const LpOptions& opts) {
  LpResult<T> res = lp.solve(opts);
  if (res.status == LpStatus::Unbounded)
    throw Error("core system unbounded; the assignment cannot be optimal");
  if (res.status == LpStatus::IterLimit) throw Error("core LP exceeded its iteration budget");
  return res;
}

// Lexicographic price smoothing on the optimal face. For user-side outcomes
// (minimize_max = true) the largest ticket price is made as small as the face
// allows, groups stuck at that level are fixed, and the process repeats on
// the rest; operator-side outcomes do the mirror image with the smallest
// price. Prices obey p = a + b - u per matched pair, so per group only the
// extreme pair matters.
template <class T>
void refine_prices(const ProblemInstance& inst, const CoreSystem<T>& sys,
                   const AssignmentResult<T>& assign, bool minimize_max, const T& face_value,
                   const LpOptions& opts, std::vector<T>& u_out, std::vector<T>& v_out) {
  const int S = inst.user_count();
  const int R = inst.route_count();
  const T eps = num_traits<T>::feasibility_tol();

  LinearProgram<T> work = sys.lp;
  for (int var = 0; var < work.variable_count(); ++var) work.set_objective(var, T(0));
  // Stay on the optimal face of the objective that was just solved.
  {
    std::vector<std::pair<int, T>> terms;
    if (minimize_max) {
      for (int s = 0; s < S; ++s)
        terms.push_back({sys.u_var[s], num_traits<T>::from_int(inst.users[s].demand)});
    } else {
      for (int r = 0; r < R; ++r) terms.push_back({sys.v_var[r], T(1)});
    }
    work.add_eq(terms, face_value);
  }

  // Extreme price coefficient per fully matched group: p = k - u.
  std::vector<int> active;
  std::vector<T> k(S, T(0));
  Rat big_r = 1;
  for (int r = 0; r < R; ++r) big_r += inst.operating_cost(r) + inst.min_profit(r);
  for (int s = 0; s < S; ++s) {
    if (sys.group_pinned[s] || sys.matched[s] == 0) continue;
    bool first = true;
    Rat ks;
    for (int r = 0; r < R; ++r) {
      if (assign.counts[s][r] == 0) continue;
      Rat pair_k = inst.payoff(s, r) + inst.min_profit(r);
      big_r += Rat(assign.counts[s][r]) * inst.payoff(s, r);
      if (first || (minimize_max ? pair_k > ks : pair_k < ks)) ks = pair_k;
      first = false;
    }
    active.push_back(s);
    k[s] = num_traits<T>::from_rat(ks);
  }
  const T big = num_traits<T>::from_rat(big_r);

  while (!active.empty()) {
    LinearProgram<T> probe = work;
    const int t_var = probe.add_variable(-big, big, minimize_max ? T(-1) : T(1));
    for (int s : active) {
      if (minimize_max)
        probe.add_ge({{sys.u_var[s], T(1)}, {t_var, T(1)}}, k[s]);  // p <= t
      else
        probe.add_le({{sys.u_var[s], T(1)}, {t_var, T(1)}}, k[s]);  // p >= t
    }
    LpResult<T> level = solve_core_lp(probe, opts);
    if (level.status != LpStatus::Optimal) throw Error("price refinement lost feasibility");
    const T t_star = minimize_max ? -level.objective : level.objective;
    if (minimize_max)
      probe.set_bounds(t_var, -big, t_star);
    else
      probe.set_bounds(t_var, t_star, big);
    probe.set_objective(t_var, T(0));

    // A group whose extreme price cannot leave the level t* is fixed there.
    std::vector<int> stuck, rest;
    std::vector<T> reach(S, T(0));
    for (int s : active) {
      LinearProgram<T> test = probe;
      test.set_objective(sys.u_var[s], minimize_max ? T(1) : T(-1));
      LpResult<T> res = solve_core_lp(test, opts);
      if (res.status != LpStatus::Optimal) throw Error("price refinement lost feasibility");
      reach[s] = minimize_max ? res.objective : -res.objective;  // farthest u from the level
      bool at_level = minimize_max ? reach[s] <= k[s] - t_star + eps
                                   : reach[s] >= k[s] - t_star - eps;
      (at_level ? stuck : rest).push_back(s);
    }
    if (stuck.empty()) {
      // Numerical guard: fix the group closest to the level at its attained
      // price; exact arithmetic never takes this branch.
      int pick = rest.front();
      for (int s : rest) {
        T gap_pick = minimize_max ? k[pick] - reach[pick] : reach[pick] - k[pick];
        T gap_s = minimize_max ? k[s] - reach[s] : reach[s] - k[s];
        if (minimize_max ? gap_s < gap_pick : gap_s > gap_pick) pick = s;
      }
      work.set_bounds(sys.u_var[pick], reach[pick], reach[pick]);
      rest.erase(std::find(rest.begin(), rest.end(), pick));
    }
    for (int s : stuck) {
      const T value = k[s] - t_star;
      work.set_bounds(sys.u_var[s], value, value);
    }
    for (int s : rest) {
      // The settled level bounds every remaining price permanently.
      if (minimize_max) {
        T lo = T(k[s] - t_star);
        if (work.lower_bound(sys.u_var[s]) > lo) lo = work.lower_bound(sys.u_var[s]);
        work.set_bounds(sys.u_var[s], lo, work.upper_bound(sys.u_var[s]));
      } else {
        T hi = k[s] - t_star;
        auto cur = work.upper_bound(sys.u_var[s]);
        if (cur && *cur < hi) hi = *cur;
        work.set_bounds(sys.u_var[s], work.lower_bound(sys.u_var[s]), hi);
      }
    }
    active = std::move(rest);
  }

  // All group values are fixed; route profits follow from the feasibility
  // equalities without another solve.
  u_out.assign(S, T(0));
  for (int s = 0; s < S; ++s)
    if (!sys.group_pinned[s]) u_out[s] = work.lower_bound(sys.u_var[s]);
  v_out.assign(R, T(0));
  for (int r = 0; r < R; ++r) {
    if (!assign.used[r]) continue;
    T v = num_traits<T>::from_rat(-inst.operating_cost(r));
    for (int s = 0; s < S; ++s) {
      long c = assign.counts[s][r];
      if (c == 0) continue;
      v += num_traits<T>::from_int(c) * (num_traits<T>::from_rat(inst.payoff(s, r)) - u_out[s]);
    }
    v_out[r] = v;
  }
}

}  // namespace detail

// Optimizes an arbitrary linear objective over the stable outcomes of the
// given optimal assignment. Ties inside the optimal face break by the
// solver's canonical pivoting, so repeated calls agree bit for bit.
template <class T>
AllocationOutcome<T> solve_allocation(const ProblemInstance& inst,
                                      const AssignmentResult<T>& assign,
                                      const AllocationObjective<T>& objective,
                                      const AllocationOptions<T>& opts = {}) {
  CoreSystem<T> sys = build_core_system(inst, assign, opts.mode, opts.max_coalitions);
  for (int s = 0; s < inst.user_count(); ++s)
    sys.lp.set_objective(sys.u_var[s],
                         objective.user_weights.empty() ? T(0) : objective.user_weights[s]);
  for (int r = 0; r < inst.route_count(); ++r)
    sys.lp.set_objective(sys.v_var[r],
                         objective.route_weights.empty() ? T(0) : objective.route_weights[r]);
  LpResult<T> res = detail::solve_core_lp(sys.lp, opts.lp);
  if (res.status != LpStatus::Optimal) return {};
  auto [u, v] = detail::split_point(sys, res.x);
  return detail::read_outcome(inst, u, v, objective);
}

// The stable outcome best for users: maximizes total user benefit, then
// lowers the worst ticket price as far as the optimal face allows.
template <class T>
AllocationOutcome<T> user_optimal_allocation(const ProblemInstance& inst,
                                             const AssignmentResult<T>& assign,
                                             const AllocationOptions<T>& opts = {}) {
  const AllocationObjective<T> objective = user_value_objective<T>(inst);
  CoreSystem<T> sys = build_core_system(inst, assign, opts.mode, opts.max_coalitions);
  for (int s = 0; s < inst.user_count(); ++s)
    sys.lp.set_objective(sys.u_var[s], objective.user_weights[s]);
  LpResult<T> res = detail::solve_core_lp(sys.lp, opts.lp);
  if (res.status != LpStatus::Optimal) return {};
  auto [u, v] = detail::split_point(sys, res.x);
  if (opts.refine) detail::refine_prices(inst, sys, assign, true, res.objective, opts.lp, u, v);
  return detail::read_outcome(inst, u, v, objective);
}

// The stable outcome best for operators: maximizes total route profit while
// never dropping a ticket price below the user-optimal schedule, then raises
// the lowest price as far as the optimal face allows.
template <class T>
AllocationOutcome<T> operator_optimal_allocation(const ProblemInstance& inst,
                                                 const AssignmentResult<T>& assign,
                                                 const AllocationOutcome<T>& user_optimal,
                                                 const AllocationOptions<T>& opts = {}) {
  if (user_optimal.status != CoreStatus::Optimal)
    throw ValidationError("operator-optimal allocation needs an optimal user-side outcome");
  const AllocationObjective<T> objective = route_value_objective<T>(inst);
  CoreSystem<T> sys = build_core_system(inst, assign, opts.mode, opts.max_coalitions);
  // Price floors at the user-optimal schedule are benefit ceilings per group.
  for (int s = 0; s < inst.user_count(); ++s) {
    if (sys.group_pinned[s] || sys.matched[s] == 0) continue;
    sys.lp.set_bounds(sys.u_var[s], T(0), user_optimal.user_value[s]);
  }
  for (int r = 0; r < inst.route_count(); ++r) sys.lp.set_objective(sys.v_var[r], T(1));
  LpResult<T> res = detail::solve_core_lp(sys.lp, opts.lp);
  if (res.status != LpStatus::Optimal) return {};
  auto [u, v] = detail::split_point(sys, res.x);
  if (opts.refine) detail::refine_prices(inst, sys, assign, false, res.objective, opts.lp, u, v);
  return detail::read_outcome(inst, u, v, objective);
}

// ---------------------------------------------------------------------------
// Prices, gaps, combinations
// ---------------------------------------------------------------------------

template <class T>
struct PriceEntry {
  int group = 0;
  int route = 0;
  long riders = 0;  // matched agents of the group on the route
  T price{};        // per-rider ticket price
};

template <class T>
struct PriceSchedule {
  std::vector<PriceEntry<T>> entries;  // group-major, then by route
  std::vector<T> route_revenue;        // riders times price, summed per route
};

// A rider pays their gross gain on the route minus the benefit they keep:
// p = (U - t) - g - u, which equals a + b - u for every matched pair.
template <class T>
PriceSchedule<T> compute_prices(const ProblemInstance& inst, const AssignmentResult<T>& assign,
                                const AllocationOutcome<T>& outcome) {
  if (outcome.status != CoreStatus::Optimal)
    throw ValidationError("cannot price an empty-core outcome");
  PriceSchedule<T> sched;
  sched.route_revenue.assign(inst.route_count(), T(0));
  for (int s = 0; s < inst.user_count(); ++s) {
    for (int r = 0; r < inst.route_count(); ++r) {
      long c = assign.counts[s][r];
      if (c == 0) continue;
      T price = num_traits<T>::from_rat(inst.payoff(s, r) + inst.min_profit(r)) -
                outcome.user_value[s];
      sched.entries.push_back({s, r, c, price});
      sched.route_revenue[r] += num_traits<T>::from_int(c) * price;
    }
  }
  return sched;
}

// Per-agent price increase from the user-optimal to the operator-optimal
// schedule, sorted descending.
template <class T>
std::vector<T> allocation_gap(const PriceSchedule<T>& user_opt, const PriceSchedule<T>& op_opt) {
  if (user_opt.entries.size() != op_opt.entries.size())
    throw ValidationError("price schedules describe different assignments");
  std::vector<T> gaps;
  for (std::size_t i = 0; i < user_opt.entries.size(); ++i) {
    const PriceEntry<T>& a = user_opt.entries[i];
    const PriceEntry<T>& b = op_opt.entries[i];
    if (a.group != b.group || a.route != b.route || a.riders != b.riders)
      throw ValidationError("price schedules describe different assignments");
    for (long c = 0; c < a.riders; ++c) gaps.push_back(b.price - a.price);
  }
  std::sort(gaps.begin(), gaps.end(), [](const T& x, const T& y) { return y < x; });
  return gaps;
}

// Componentwise blend lambda*o1 + (1-lambda)*o2; the stable outcomes form a
// convex set, so the blend of two stable outcomes is stable again.
template <class T>
AllocationOutcome<T> convex_combination(const AllocationOutcome<T>& o1,
                                        const AllocationOutcome<T>& o2, const T& lambda) {
  if (lambda < T(0) || lambda > T(1))
    throw ValidationError("convex combination weight must lie in [0, 1]");
  if (o1.status != CoreStatus::Optimal || o2.status != CoreStatus::Optimal)
    throw ValidationError("convex combination needs two optimal outcomes");
  if (o1.user_value.size() != o2.user_value.size() ||
      o1.route_value.size() != o2.route_value.size())
    throw ValidationError("convex combination over outcomes of different instances");
  const T rest = T(1) - lambda;
  AllocationOutcome<T> out;
  out.status = CoreStatus::Optimal;
  auto blend = [&](const std::vector<T>& a, const std::vector<T>& b) {
    std::vector<T> m;
    for (std::size_t i = 0; i < a.size(); ++i) m.push_back(lambda * a[i] + rest * b[i]);
    return m;
  };
  out.user_value = blend(o1.user_value, o2.user_value);
  out.agent_value = blend(o1.agent_value, o2.agent_value);
  out.route_value = blend(o1.route_value, o2.route_value);
  out.objective = lambda * o1.objective + rest * o2.objective;
  out.total_value = lambda * o1.total_value + rest * o2.total_value;
  return out;
}

}  // namespace stablefare
