#pragma once
// Independent validation of allocations. Everything here re-derives the
// feasibility and stability conditions from the instance with its own
// enumeration (plain odometer walks, no reuse of the solver's constraint
// store) so that a bug in the allocation builder cannot hide itself.

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stablefare/allocation.hpp"
#include "stablefare/assignment.hpp"
#include "stablefare/coalitions.hpp"
#include "stablefare/errors.hpp"
#include "stablefare/lp.hpp"
#include "stablefare/model.hpp"
#include "stablefare/numeric.hpp"

namespace stablefare {

template <class T>
struct StabilityReport {
  bool ok = true;
  std::string reason;                    // human-readable failure note
  int route = -1;                        // violated coalition's route, if one failed
  std::vector<CoalitionMember> members;  // violated coalition, ascending group
  T lhs{}, rhs{};
};

namespace detail {

// Walks every nonzero count vector over `limits` (first position fastest);
// returns false when the walk is exhausted.
inline bool next_counts(std::vector<long>& counts, const std::vector<long>& limits) {
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < limits[i]) {
      ++counts[i];
      return true;
    }
    counts[i] = 0;
  }
  return false;
}

inline long checked_combination_budget(const std::vector<long>& limits, long budget) {
  long combos = 1;
  for (long q : limits) {
    if (combos > budget / (q + 1) + 1) return -1;
    combos *= q + 1;
    if (combos > budget) return -1;
  }
  return combos;
}

// Effective operator of a route; routes without one stand alone.
inline int route_owner(const ProblemInstance& inst, int r) {
  int id = inst.routes[r].operator_id;
  return id >= 0 ? id : -(r + 2);
}

// Re-derived centralized qualifier: some member is idle or served by another
// operator than the coalition's target route.
inline bool rival_member_check(const ProblemInstance& inst,
                               const std::vector<std::vector<long>>& counts, int route,
                               const std::vector<int>& groups, const std::vector<long>& picked) {
  const int target = route_owner(inst, route);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (picked[i] == 0) continue;
    int s = groups[i];
    long matched = 0;
    for (int r = 0; r < inst.route_count(); ++r) {
      if (counts[s][r] == 0) continue;
      matched += counts[s][r];
      if (route_owner(inst, r) != target) return true;
    }
    if (matched < inst.users[s].demand) return true;
  }
  return false;
}

}  // namespace detail

// Audit of one allocation against one assignment: nonnegativity, the zero
// pins, the per-route split equalities, and every capacity-feasible
// coalition's stability row. The first failure is reported; for a failed
// stability row the coalition itself is included.
template <class T>
StabilityReport<T> check_stability(const ProblemInstance& inst, const AssignmentResult<T>& assign,
                                   const std::vector<T>& u, const std::vector<T>& v,
                                   StabilityMode mode = StabilityMode::Decentralized,
                                   long combo_budget = 20000000) {
  const int S = inst.user_count();
  const int R = inst.route_count();
  if (static_cast<int>(u.size()) != S || static_cast<int>(v.size()) != R)
    throw ValidationError("allocation vectors do not fit the instance");
  const T tol = num_traits<T>::feasibility_tol();

  StabilityReport<T> rep;
  auto fail = [&](std::string why) {
    rep.ok = false;
    rep.reason = std::move(why);
    return rep;
  };

  for (int s = 0; s < S; ++s)
    if (u[s] < -tol) return fail("group " + std::to_string(inst.users[s].id) + " has negative benefit");
  for (int r = 0; r < R; ++r)
    if (v[r] < -tol) return fail("route " + std::to_string(inst.routes[r].id) + " has negative profit");

  std::vector<long> matched(S, 0);
  for (int s = 0; s < S; ++s)
    for (int r = 0; r < R; ++r) matched[s] += assign.counts[s][r];
  for (int s = 0; s < S; ++s)
    if (matched[s] < inst.users[s].demand && u[s] > tol)
      return fail("group " + std::to_string(inst.users[s].id) +
                  " keeps benefit although a member is unmatched");
  for (int r = 0; r < R; ++r)
    if (!assign.used[r] && v[r] > tol)
      return fail("unused route " + std::to_string(inst.routes[r].id) + " keeps profit");

  for (int r = 0; r < R; ++r) {
    if (!assign.used[r]) continue;
    T lhs = v[r];
    T rhs = -num_traits<T>::from_rat(inst.operating_cost(r));
    for (int s = 0; s < S; ++s) {
      long c = assign.counts[s][r];
      if (c == 0) continue;
      lhs += num_traits<T>::from_int(c) * u[s];
      rhs += num_traits<T>::from_int(c) * num_traits<T>::from_rat(inst.payoff(s, r));
    }
    T diff = lhs - rhs;
    if (diff < -tol || diff > tol)
      return fail("route " + std::to_string(inst.routes[r].id) +
                  " does not split its surplus exactly");
  }

  for (int r = 0; r < R; ++r) {
    std::vector<int> groups;
    std::vector<long> limits;
    for (int s = 0; s < S; ++s)
      if (inst.compatible(s, r) && inst.payoff(s, r) > 0) {
        groups.push_back(s);
        limits.push_back(inst.users[s].demand);
      }
    if (groups.empty()) continue;
    if (detail::checked_combination_budget(limits, combo_budget) < 0)
      throw LimitError("stability audit on route " + std::to_string(inst.routes[r].id) +
                       " exceeds the combination budget");

    const long cap = inst.routes[r].line_capacity;
    std::vector<long> picked(groups.size(), 0);
    std::vector<long> load(inst.route_link_count(r), 0);
    while (detail::next_counts(picked, limits)) {
      std::fill(load.begin(), load.end(), 0);
      bool feasible = true;
      for (std::size_t i = 0; i < groups.size() && feasible; ++i) {
        if (picked[i] == 0) continue;
        for (int l : inst.geometry(groups[i], r).used_links) {
          load[l] += picked[i];
          if (load[l] > cap) {
            feasible = false;
            break;
          }
        }
      }
      if (!feasible) continue;
      if (mode == StabilityMode::Centralized &&
          !detail::rival_member_check(inst, assign.counts, r, groups, picked))
        continue;
      T lhs = v[r];
      T rhs = -num_traits<T>::from_rat(inst.operating_cost(r));
      for (std::size_t i = 0; i < groups.size(); ++i) {
        if (picked[i] == 0) continue;
        lhs += num_traits<T>::from_int(picked[i]) * u[groups[i]];
        rhs += num_traits<T>::from_int(picked[i]) *
               num_traits<T>::from_rat(inst.payoff(groups[i], r));
      }
      if (lhs < rhs - tol) {
        rep.ok = false;
        rep.reason = "a coalition on route " + std::to_string(inst.routes[r].id) +
                     " could earn more than it is allocated";
        rep.route = r;
        for (std::size_t i = 0; i < groups.size(); ++i)
          if (picked[i] > 0) rep.members.push_back({groups[i], picked[i]});
        rep.lhs = lhs;
        rep.rhs = rhs;
        return rep;
      }
    }
  }
  return rep;
}

template <class T>
StabilityReport<T> check_stability(const ProblemInstance& inst, const AssignmentResult<T>& assign,
                                   const AllocationOutcome<T>& outcome,
                                   StabilityMode mode = StabilityMode::Decentralized,
                                   long combo_budget = 20000000) {
  if (outcome.status != CoreStatus::Optimal)
    throw ValidationError("cannot audit an empty-core outcome");
  return check_stability(inst, assign, outcome.user_value, outcome.route_value, mode,
                         combo_budget);
}

// ---------------------------------------------------------------------------
// Brute-force feasibility scan of the core system (exact arithmetic)
// ---------------------------------------------------------------------------

namespace detail {

struct ScanRow {
  std::vector<Rat> a;
  Rat b;
  bool is_eq = false;
};

// Reduced-row-echelon elimination of the equality rows; returns false when
// they are inconsistent. On success `point` solves the equalities and
// `basis` spans their null space (identity at the free positions).
inline bool eliminate_equalities(std::vector<std::vector<Rat>> eq, std::vector<Rat> rhs,
                                 std::size_t n, std::vector<Rat>& point,
                                 std::vector<std::vector<Rat>>& basis) {
  std::vector<int> pivot_col;
  std::size_t row = 0;
  for (std::size_t col = 0; col < n && row < eq.size(); ++col) {
    std::size_t lead = row;
    while (lead < eq.size() && eq[lead][col] == 0) ++lead;
    if (lead == eq.size()) continue;
    std::swap(eq[row], eq[lead]);
    std::swap(rhs[row], rhs[lead]);
    Rat inv = eq[row][col];
    for (std::size_t j = col; j < n; ++j) eq[row][j] /= inv;
    rhs[row] /= inv;
    for (std::size_t i = 0; i < eq.size(); ++i) {
      if (i == row || eq[i][col] == 0) continue;
      Rat f = eq[i][col];
      for (std::size_t j = col; j < n; ++j) eq[i][j] -= f * eq[row][j];
      rhs[i] -= f * rhs[row];
    }
    pivot_col.push_back(static_cast<int>(col));
    ++row;
  }
  for (std::size_t i = row; i < eq.size(); ++i)
    if (rhs[i] != 0) return false;

  std::vector<char> is_pivot(n, 0);
  for (int c : pivot_col) is_pivot[c] = 1;
  point.assign(n, Rat(0));
  for (std::size_t i = 0; i < pivot_col.size(); ++i) point[pivot_col[i]] = rhs[i];
  basis.clear();
  for (std::size_t col = 0; col < n; ++col) {
    if (is_pivot[col]) continue;
    std::vector<Rat> dir(n, Rat(0));
    dir[col] = 1;
    for (std::size_t i = 0; i < pivot_col.size(); ++i) dir[pivot_col[i]] = -eq[i][col];
    basis.push_back(std::move(dir));
  }
  return true;
}

// Solves a d-by-d rational system; false when singular.
inline bool solve_square_rat(std::vector<std::vector<Rat>> m, std::vector<Rat> b,
                             std::vector<Rat>& x) {
  const std::size_t d = b.size();
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t lead = col;
    while (lead < d && m[lead][col] == 0) ++lead;
    if (lead == d) return false;
    std::swap(m[col], m[lead]);
    std::swap(b[col], b[lead]);
    Rat inv = m[col][col];
    for (std::size_t j = col; j < d; ++j) m[col][j] /= inv;
    b[col] /= inv;
    for (std::size_t i = 0; i < d; ++i) {
      if (i == col || m[i][col] == 0) continue;
      Rat f = m[i][col];
      for (std::size_t j = col; j < d; ++j) m[i][j] -= f * m[col][j];
      b[i] -= f * b[col];
    }
  }
  x = std::move(b);
  return true;
}

// Collects the full core constraint system of an assignment in exact
// rationals: pins and nonnegativity, per-used-route split equalities, and
// odometer-enumerated stability rows.
inline std::vector<ScanRow> collect_core_rows(const ProblemInstance& inst,
                                              const std::vector<std::vector<long>>& counts,
                                              const std::vector<char>& used, StabilityMode mode,
                                              long combo_budget) {
  const int S = inst.user_count();
  const int R = inst.route_count();
  const std::size_t n = static_cast<std::size_t>(S) + R;
  std::vector<ScanRow> rows;
  auto blank = [&]() {
    ScanRow row;
    row.a.assign(n, Rat(0));
    return row;
  };

  std::vector<long> matched(S, 0);
  for (int s = 0; s < S; ++s)
    for (int r = 0; r < R; ++r) matched[s] += counts[s][r];

  for (int s = 0; s < S; ++s) {
    ScanRow row = blank();
    row.a[s] = 1;
    row.is_eq = matched[s] < inst.users[s].demand;  // pinned groups: u = 0
    rows.push_back(std::move(row));                 // otherwise u >= 0
  }
  for (int r = 0; r < R; ++r) {
    ScanRow row = blank();
    row.a[S + r] = 1;
    row.is_eq = !used[r];  // unused routes: v = 0
    rows.push_back(std::move(row));
  }
  for (int r = 0; r < R; ++r) {
    if (!used[r]) continue;
    ScanRow row = blank();
    row.b = -inst.operating_cost(r);
    for (int s = 0; s < S; ++s) {
      long c = counts[s][r];
      if (c == 0) continue;
      row.a[s] = c;
      row.b += Rat(c) * inst.payoff(s, r);
    }
    row.a[S + r] = 1;
    row.is_eq = true;
    rows.push_back(std::move(row));
  }

  for (int r = 0; r < R; ++r) {
    std::vector<int> groups;
    std::vector<long> limits;
    for (int s = 0; s < S; ++s)
      if (inst.compatible(s, r) && inst.payoff(s, r) > 0) {
        groups.push_back(s);
        limits.push_back(inst.users[s].demand);
      }
    if (groups.empty()) continue;
    if (checked_combination_budget(limits, combo_budget) < 0)
      throw LimitError("core feasibility scan exceeds the combination budget");
    const long cap = inst.routes[r].line_capacity;
    std::vector<long> picked(groups.size(), 0);
    std::vector<long> load(inst.route_link_count(r), 0);
    while (next_counts(picked, limits)) {
      std::fill(load.begin(), load.end(), 0);
      bool feasible = true;
      for (std::size_t i = 0; i < groups.size() && feasible; ++i) {
        if (picked[i] == 0) continue;
        for (int l : inst.geometry(groups[i], r).used_links) {
          load[l] += picked[i];
          if (load[l] > cap) {
            feasible = false;
            break;
          }
        }
      }
      if (!feasible) continue;
      if (mode == StabilityMode::Centralized &&
          !rival_member_check(inst, counts, r, groups, picked))
        continue;
      ScanRow row = blank();
      row.b = -inst.operating_cost(r);
      for (std::size_t i = 0; i < groups.size(); ++i) {
        if (picked[i] == 0) continue;
        row.a[groups[i]] = picked[i];
        row.b += Rat(picked[i]) * inst.payoff(groups[i], r);
      }
      row.a[S + r] += 1;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace detail

// Decides by brute force whether any stable outcome exists for the given
// assignment: eliminates the equality rows exactly, then scans every basis
// of the remaining inequality rows for a feasible vertex. The core polytope
// is bounded, so a nonempty core always exposes such a vertex. Returns
// nullopt when the basis count exceeds the budget.
template <class T>
std::optional<bool> core_feasible_by_scan(const ProblemInstance& inst,
                                          const AssignmentResult<T>& assign,
                                          StabilityMode mode = StabilityMode::Decentralized,
                                          long basis_budget = 2000000,
                                          long combo_budget = 20000000) {
  const std::size_t n = static_cast<std::size_t>(inst.user_count()) + inst.route_count();
  std::vector<detail::ScanRow> rows =
      detail::collect_core_rows(inst, assign.counts, assign.used, mode, combo_budget);

  std::vector<std::vector<Rat>> eq;
  std::vector<Rat> eq_rhs;
  std::vector<std::vector<Rat>> ge;
  std::vector<Rat> ge_rhs;
  for (detail::ScanRow& row : rows) {
    (row.is_eq ? eq : ge).push_back(std::move(row.a));
    (row.is_eq ? eq_rhs : ge_rhs).push_back(row.b);
  }

  std::vector<Rat> point;
  std::vector<std::vector<Rat>> basis;
  if (!detail::eliminate_equalities(eq, eq_rhs, n, point, basis)) return false;

  // Project the inequalities onto the null space of the equalities.
  const std::size_t d = basis.size();
  std::vector<std::vector<Rat>> proj;
  std::vector<Rat> proj_rhs;
  for (std::size_t i = 0; i < ge.size(); ++i) {
    Rat base;
    for (std::size_t j = 0; j < n; ++j) base += ge[i][j] * point[j];
    std::vector<Rat> row(d, Rat(0));
    bool zero = true;
    for (std::size_t k = 0; k < d; ++k) {
      for (std::size_t j = 0; j < n; ++j) row[k] += ge[i][j] * basis[k][j];
      if (row[k] != 0) zero = false;
    }
    Rat rhs = ge_rhs[i] - base;
    if (zero) {
      if (rhs > 0) return false;  // 0 >= positive: inconsistent
      continue;
    }
    proj.push_back(std::move(row));
    proj_rhs.push_back(std::move(rhs));
  }
  if (d == 0 || proj.empty()) return true;

  // Count the bases first; refuse oversized scans instead of guessing.
  const std::size_t m = proj.size();
  {
    double bases = 1;
    for (std::size_t i = 0; i < d; ++i) bases = bases * static_cast<double>(m - i) / (i + 1);
    if (bases > static_cast<double>(basis_budget)) return std::nullopt;
  }

  std::vector<std::size_t> pick(d);
  std::iota(pick.begin(), pick.end(), 0);
  while (true) {
    std::vector<std::vector<Rat>> sq;
    std::vector<Rat> sq_rhs;
    for (std::size_t i : pick) {
      sq.push_back(proj[i]);
      sq_rhs.push_back(proj_rhs[i]);
    }
    std::vector<Rat> y;
    if (detail::solve_square_rat(std::move(sq), std::move(sq_rhs), y)) {
      bool ok = true;
      for (std::size_t i = 0; i < m && ok; ++i) {
        Rat lhs;
        for (std::size_t k = 0; k < d; ++k) lhs += proj[i][k] * y[k];
        ok = lhs >= proj_rhs[i];
      }
      if (ok) return true;
    }
    // next d-combination of m rows
    std::size_t i = d;
    while (i > 0 && pick[i - 1] == m - d + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < d; ++j) pick[j] = pick[j - 1] + 1;
  }
  return false;
}

// Cross-checks an empty-core verdict by duality: with the zero pins in
// place, a stable outcome exists exactly when the fractional bound of the
// coalition-packing relaxation equals the integral assignment value, so a
// strictly larger bound certifies emptiness. Decentralized semantics only.
template <class T>
bool core_empty_by_packing(const ProblemInstance& inst, const AssignmentResult<T>& assign,
                           long combo_budget = 20000000) {
  const int S = inst.user_count();
  const int R = inst.route_count();
  std::vector<detail::ScanRow> rows = detail::collect_core_rows(
      inst, assign.counts, assign.used, StabilityMode::Decentralized, combo_budget);

  LinearProgram<Rat> lp;
  std::vector<std::vector<std::pair<int, Rat>>> group_rows(S), route_rows(R);
  for (const detail::ScanRow& row : rows) {
    if (row.is_eq || !(row.b > 0)) continue;  // packing columns: stability rows with value
    bool coalition = false;
    for (int s = 0; s < S; ++s)
      if (row.a[s] != 0) coalition = true;
    if (!coalition) continue;  // skip plain nonnegativity rows
    int z = lp.add_variable(Rat(0), std::nullopt, row.b);
    for (int s = 0; s < S; ++s)
      if (row.a[s] != 0) group_rows[s].push_back({z, row.a[s]});
    for (int r = 0; r < R; ++r)
      if (row.a[S + r] != 0) route_rows[r].push_back({z, Rat(1)});
  }
  for (int s = 0; s < S; ++s)
    if (!group_rows[s].empty()) lp.add_le(group_rows[s], Rat(inst.users[s].demand));
  for (int r = 0; r < R; ++r)
    if (!route_rows[r].empty()) lp.add_le(route_rows[r], Rat(1));

  Rat integral;
  for (int r = 0; r < R; ++r) {
    if (!assign.used[r]) continue;
    integral -= inst.operating_cost(r);
    for (int s = 0; s < S; ++s)
      if (assign.counts[s][r] > 0) integral += Rat(assign.counts[s][r]) * inst.payoff(s, r);
  }
  if (lp.variable_count() == 0) return integral != 0;
  LpResult<Rat> res = lp.solve({});
  if (res.status != LpStatus::Optimal) throw Error("coalition-packing bound failed to solve");
  return res.objective != integral;
}

}  // namespace stablefare
