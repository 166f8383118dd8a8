#pragma once

#include <optional>
#include <queue>
#include <utility>
#include <vector>

#include "stablefare/lp.hpp"
#include "stablefare/numeric.hpp"

namespace stablefare {

template <class T>
struct MipResult {
  LpStatus status = LpStatus::Infeasible;
  T objective{};
  std::vector<T> x;   // best integral solution found (empty if none)
  T root_bound{};     // LP relaxation value at the root
  bool root_bound_valid = false;
  long nodes = 0;
};

struct MipOptions {
  long node_limit = 200000;
  LpOptions lp;
};

// Best-bound branch and bound over an LP with integrality on the listed
// variables. Deterministic: nodes are keyed (bound, insertion id), branching
// picks the lowest-index fractional variable, the floor child is enqueued
// first, and only strictly better incumbents replace the current one — so
// among equally good optima the solver always reports the first one reached
// in this fixed order.
template <class T>
MipResult<T> solve_mip(const LinearProgram<T>& lp, const std::vector<int>& integer_vars,
                       const MipOptions& opts = {}) {
  using NT = num_traits<T>;

  struct Node {
    std::vector<std::pair<int, std::pair<T, std::optional<T>>>> bounds;
    T bound;
    long id;
  };
  struct Better {
    bool operator()(const Node& a, const Node& b) const {
      if (a.bound != b.bound) return a.bound < b.bound;  // max-heap on bound
      return a.id > b.id;                                // then FIFO
    }
  };

  MipResult<T> out;
  LinearProgram<T> work = lp;

  auto solve_with = [&](const Node& node) {
    std::vector<std::pair<int, std::pair<T, std::optional<T>>>> saved;
    saved.reserve(node.bounds.size());
    for (const auto& [var, b] : node.bounds) {
      saved.emplace_back(var, std::make_pair(work.lower_bound(var), work.upper_bound(var)));
      work.set_bounds(var, b.first, b.second);
    }
    LpResult<T> res = work.solve(opts.lp);
    for (auto it = saved.rbegin(); it != saved.rend(); ++it)
      work.set_bounds(it->first, it->second.first, it->second.second);
    return res;
  };

  Node root;
  root.id = 0;
  LpResult<T> root_res = work.solve(opts.lp);
  out.nodes = 1;
  if (root_res.status == LpStatus::Unbounded || root_res.status == LpStatus::IterLimit) {
    out.status = root_res.status;
    return out;
  }
  if (root_res.status == LpStatus::Infeasible) {
    out.status = LpStatus::Infeasible;
    return out;
  }
  out.root_bound = root_res.objective;
  out.root_bound_valid = true;

  bool have_incumbent = false;
  T incumbent{};

  std::priority_queue<Node, std::vector<Node>, Better> open;
  root.bound = root_res.objective;
  long next_id = 1;

  auto offer = [&](const LpResult<T>& res, const Node& node) {
    // Integral? Take as incumbent if strictly better; else branch.
    int frac = -1;
    for (int v : integer_vars) {
      if (!NT::is_integer(res.x[v])) {
        frac = v;
        break;
      }
    }
    if (frac < 0) {
      if (!have_incumbent || res.objective > incumbent) {
        have_incumbent = true;
        incumbent = res.objective;
        out.x = res.x;
        for (int v : integer_vars) out.x[v] = NT::from_int(NT::round_to_long(res.x[v]));
        out.objective = res.objective;
      }
      return;
    }
    const T& xv = res.x[frac];
    T down = NT::floor(xv);
    // Effective bounds of the branching variable at this node.
    T cur_lo = work.lower_bound(frac);
    std::optional<T> cur_up = work.upper_bound(frac);
    for (const auto& [var, b] : node.bounds)
      if (var == frac) {
        cur_lo = b.first;
        cur_up = b.second;
      }
    Node lo_child{node.bounds, res.objective, next_id++};
    lo_child.bounds.emplace_back(frac, std::make_pair(cur_lo, std::optional<T>(down)));
    Node hi_child{node.bounds, res.objective, next_id++};
    hi_child.bounds.emplace_back(frac, std::make_pair(T(down + T(1)), cur_up));
    open.push(std::move(lo_child));
    open.push(std::move(hi_child));
  };

  offer(root_res, root);

  while (!open.empty()) {
    if (out.nodes >= opts.node_limit) {
      out.status = LpStatus::IterLimit;
      if (have_incumbent) out.objective = incumbent;
      return out;
    }
    Node node = open.top();
    open.pop();
    if (have_incumbent && node.bound <= incumbent) continue;  // parent bound got beaten
    LpResult<T> res = solve_with(node);
    ++out.nodes;
    if (res.status == LpStatus::IterLimit) {
      out.status = res.status;
      return out;
    }
    if (res.status == LpStatus::Infeasible) continue;
    if (res.status == LpStatus::Unbounded) {
      out.status = LpStatus::Unbounded;
      return out;
    }
    if (have_incumbent && res.objective <= incumbent) continue;
    node.bound = res.objective;
    offer(res, node);
  }

  out.status = have_incumbent ? LpStatus::Optimal : LpStatus::Infeasible;
  return out;
}

}  // namespace stablefare
