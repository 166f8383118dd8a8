#pragma once

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "stablefare/errors.hpp"
#include "stablefare/numeric.hpp"

namespace stablefare {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterLimit: return "iteration-limit";
  }
  return "unknown";
}

struct LpOptions {
  long max_iterations = 0;  // 0 = scale with problem size
};

template <class T>
struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  T objective{};
  std::vector<T> x;  // structural values, filled when status == Optimal
  long iterations = 0;
};

namespace detail {

template <class T>
inline T tabs(const T& v) {
  return v < 0 ? T(-v) : v;
}

// Dense bounded-variable primal simplex. Rows become equalities through one
// slack each (<=: slack in [0,inf), >=: slack in (-inf,0], =: slack fixed at
// 0); artificials are added only for rows whose initial slack value violates
// its bounds, and stay fixed at zero after phase one. Entering rule is
// largest reduced cost, switching permanently to Bland's rule after a fixed
// number of iterations so degenerate problems still terminate. All
// tie-breaks are by lowest variable index, which makes every run, and hence
// every reported solution, deterministic.
template <class T>
class Simplex {
  using NT = num_traits<T>;
  enum class Vs : char { Basic, Lower, Upper };

 public:
  // rows: (sense, rhs, dense coefficients over structurals)
  // sense: -1 '<=', 0 '=', +1 '>='
  Simplex(const std::vector<T>& lo, const std::vector<std::optional<T>>& up,
          std::vector<signed char> sense, std::vector<T> rhs, std::vector<std::vector<T>> dense)
      : n_(static_cast<int>(lo.size())), m_(static_cast<int>(dense.size())) {
    tol_ = NT::feasibility_tol();

    // Column layout: structurals, then one slack per row, artificials appended.
    total_ = n_ + m_;
    lo_.resize(total_);
    up_.resize(total_);
    has_lo_.assign(total_, true);
    has_up_.assign(total_, true);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = lo[j];
      if (up[j]) {
        up_[j] = *up[j];
      } else {
        has_up_[j] = false;
      }
    }
    for (int i = 0; i < m_; ++i) {
      int s = n_ + i;
      if (sense[i] < 0) {  // <= : slack in [0, inf)
        lo_[s] = T(0);
        has_up_[s] = false;
      } else if (sense[i] > 0) {  // >= : slack in (-inf, 0]
        up_[s] = T(0);
        has_lo_[s] = false;
      } else {  // = : slack fixed
        lo_[s] = T(0);
        up_[s] = T(0);
      }
    }

    // Start every structural at a finite bound.
    value_.assign(total_, T(0));
    stat_.assign(total_, Vs::Lower);
    for (int j = 0; j < n_; ++j) {
      if (has_lo_[j]) {
        value_[j] = lo_[j];
        stat_[j] = Vs::Lower;
      } else if (has_up_[j]) {
        value_[j] = up_[j];
        stat_[j] = Vs::Upper;
      } else {
        throw ValidationError("variables must have at least one finite bound");
      }
    }

    // Natural slack values; rows whose slack cannot absorb the residual get
    // an artificial variable and start with the slack pinned at the violated
    // bound.
    std::vector<T> resid(m_);
    std::vector<signed char> art_sign(m_, 0);
    int n_art = 0;
    for (int i = 0; i < m_; ++i) {
      T act(0);
      for (int j = 0; j < n_; ++j)
        if (dense[i][j] != 0) act += dense[i][j] * value_[j];
      resid[i] = rhs[i] - act;
      int s = n_ + i;
      if (has_up_[s] && resid[i] > up_[s]) {
        art_sign[i] = 1;  // slack at upper, artificial = resid - up >= 0
        ++n_art;
      } else if (has_lo_[s] && resid[i] < lo_[s]) {
        art_sign[i] = -1;  // slack at lower, artificial = lo - resid >= 0
        ++n_art;
      }
    }

    int first_art = total_;
    total_ += n_art;
    lo_.resize(total_, T(0));
    up_.resize(total_, T(0));
    has_lo_.resize(total_, true);
    has_up_.resize(total_, false);  // artificials: [0, inf) during phase one
    value_.resize(total_, T(0));
    stat_.resize(total_, Vs::Lower);

    a_.assign(m_, std::vector<T>(total_, T(0)));
    rhs_ = std::move(rhs);
    basis_.assign(m_, -1);
    int next_art = first_art;
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) a_[i][j] = dense[i][j];
      int s = n_ + i;
      a_[i][s] = T(1);
      if (art_sign[i] == 0) {
        basis_[i] = s;
        stat_[s] = Vs::Basic;
        value_[s] = resid[i];
      } else {
        int t = next_art++;
        a_[i][t] = T(art_sign[i]);
        basis_[i] = t;
        stat_[t] = Vs::Basic;
        if (art_sign[i] > 0) {
          stat_[s] = Vs::Upper;
          value_[s] = up_[s];
          value_[t] = resid[i] - up_[s];
        } else {
          stat_[s] = Vs::Lower;
          value_[s] = lo_[s];
          value_[t] = lo_[s] - resid[i];
          // Normalize so the basic (artificial) column is +1: the tableau
          // must hold the basis-inverse image of the original rows.
          for (int j = 0; j < total_; ++j)
            if (a_[i][j] != 0) a_[i][j] = -a_[i][j];
          rhs_[i] = -rhs_[i];
        }
      }
    }
    first_art_ = first_art;
  }

  LpResult<T> run(const std::vector<T>& objective, const LpOptions& opts) {
    long cap = opts.max_iterations > 0
                   ? opts.max_iterations
                   : 5000 + 50L * (m_ + total_);
    long bland_after = 100 + 4L * (m_ + total_);
    iterations_ = 0;

    LpResult<T> out;
    if (first_art_ < total_) {
      std::vector<T> phase1(total_, T(0));
      for (int j = first_art_; j < total_; ++j) phase1[j] = T(-1);
      set_costs(phase1);
      LpStatus st = iterate(cap, bland_after);
      out.iterations = iterations_;
      if (st == LpStatus::IterLimit) {
        out.status = st;
        return out;
      }
      refresh_basic_values();
      for (int j = first_art_; j < total_; ++j) {
        if (value_[j] > tol_ || value_[j] < -tol_) {
          out.status = LpStatus::Infeasible;
          return out;
        }
        // Never let an artificial move again.
        value_[j] = T(0);
        up_[j] = T(0);
        has_up_[j] = true;
      }
    }

    set_costs(objective);
    LpStatus st = iterate(cap, bland_after);
    out.iterations = iterations_;
    if (st != LpStatus::Optimal) {
      out.status = st;
      return out;
    }
    refresh_basic_values();
    out.status = LpStatus::Optimal;
    out.x.assign(value_.begin(), value_.begin() + n_);
    T z(0);
    for (int j = 0; j < n_; ++j)
      if (objective[j] != 0) z += objective[j] * out.x[j];
    out.objective = z;
    return out;
  }

 private:
  bool fixed(int j) const { return has_lo_[j] && has_up_[j] && lo_[j] == up_[j]; }

  // Reduced costs for a fresh objective under the current basis.
  void set_costs(const std::vector<T>& objective) {
    cost_ = objective;
    cost_.resize(total_, T(0));
    for (int i = 0; i < m_; ++i) {
      const T f = cost_[basis_[i]];
      if (f == 0) continue;
      const std::vector<T>& row = a_[i];
      for (int j = 0; j < total_; ++j)
        if (row[j] != 0) cost_[j] -= f * row[j];
    }
    for (int i = 0; i < m_; ++i) cost_[basis_[i]] = T(0);
  }

  // Basic values from the transformed rhs and the nonbasic bound values;
  // cancels incremental drift in floating point (exact identity otherwise).
  void refresh_basic_values() {
    for (int i = 0; i < m_; ++i) {
      T v = rhs_[i];
      const std::vector<T>& row = a_[i];
      for (int j = 0; j < total_; ++j)
        if (stat_[j] != Vs::Basic && row[j] != 0 && value_[j] != 0) v -= row[j] * value_[j];
      value_[basis_[i]] = v;
    }
  }

  LpStatus iterate(long cap, long bland_after) {
    while (true) {
      if (++iterations_ > cap) return LpStatus::IterLimit;
      const bool bland = iterations_ > bland_after;

      int enter = -1;
      T best(0);
      for (int j = 0; j < total_; ++j) {
        if (stat_[j] == Vs::Basic || fixed(j)) continue;
        const T& c = cost_[j];
        const bool eligible = stat_[j] == Vs::Lower ? c > tol_ : c < -tol_;
        if (!eligible) continue;
        if (bland) {
          enter = j;
          break;
        }
        T mag = tabs(c);
        if (enter < 0 || mag > best) {
          best = std::move(mag);
          enter = j;
        }
      }
      if (enter < 0) return LpStatus::Optimal;

      const int dir = stat_[enter] == Vs::Lower ? 1 : -1;

      // Longest step the entering variable can take; ties go to the blocking
      // basic with the lowest variable index, pivots beat bound flips.
      bool have_step = false;
      bool flip = false;
      T step(0);
      int leave_row = -1;
      signed char leave_to = 0;
      if (has_lo_[enter] && has_up_[enter]) {
        step = up_[enter] - lo_[enter];
        have_step = true;
        flip = true;
      }
      for (int i = 0; i < m_; ++i) {
        const T& aij = a_[i][enter];
        T g = dir > 0 ? T(-aij) : aij;  // d(basic value)/d(step)
        int bv = basis_[i];
        T bound;
        signed char to = 0;
        if (g > tol_) {
          if (!has_up_[bv]) continue;
          bound = up_[bv] - value_[bv];
          to = 1;
        } else if (g < -tol_) {
          if (!has_lo_[bv]) continue;
          bound = lo_[bv] - value_[bv];
          to = -1;
        } else {
          continue;
        }
        T t = bound / g;
        if (t < 0) t = T(0);  // numerical: basic already pinned at its bound
        if (!have_step || t < step ||
            (t == step && (flip || (leave_row >= 0 && bv < basis_[leave_row])))) {
          have_step = true;
          flip = false;
          step = std::move(t);
          leave_row = i;
          leave_to = to;
        }
      }
      if (!have_step) return LpStatus::Unbounded;

      if (step != 0) {
        for (int i = 0; i < m_; ++i) {
          const T& aij = a_[i][enter];
          if (aij != 0) value_[basis_[i]] -= dir > 0 ? aij * step : T(-(aij * step));
        }
        if (dir > 0)
          value_[enter] += step;
        else
          value_[enter] -= step;
      }

      if (flip) {
        stat_[enter] = stat_[enter] == Vs::Lower ? Vs::Upper : Vs::Lower;
        value_[enter] = stat_[enter] == Vs::Lower ? lo_[enter] : up_[enter];
        continue;
      }

      const int leave = basis_[leave_row];
      value_[leave] = leave_to > 0 ? up_[leave] : lo_[leave];
      stat_[leave] = leave_to > 0 ? Vs::Upper : Vs::Lower;
      stat_[enter] = Vs::Basic;
      basis_[leave_row] = enter;
      pivot(leave_row, enter);

      if constexpr (!NT::exact) {
        if (iterations_ % 64 == 0) refresh_basic_values();
      }
    }
  }

  void pivot(int r, int jc) {
    std::vector<T>& prow = a_[r];
    const T piv = prow[jc];
    for (int j = 0; j < total_; ++j)
      if (prow[j] != 0) prow[j] /= piv;
    rhs_[r] /= piv;
    prow[jc] = T(1);
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      const T f = a_[i][jc];
      if (f == 0) continue;
      std::vector<T>& row = a_[i];
      for (int j = 0; j < total_; ++j)
        if (prow[j] != 0) row[j] -= f * prow[j];
      rhs_[i] -= f * rhs_[r];
      row[jc] = T(0);
    }
    const T cf = cost_[jc];
    if (cf != 0) {
      for (int j = 0; j < total_; ++j)
        if (prow[j] != 0) cost_[j] -= cf * prow[j];
      cost_[jc] = T(0);
    }
  }

  int n_ = 0, m_ = 0, total_ = 0, first_art_ = 0;
  long iterations_ = 0;
  T tol_;
  std::vector<std::vector<T>> a_;
  std::vector<T> rhs_, cost_, value_, lo_, up_;
  std::vector<bool> has_lo_, has_up_;
  std::vector<Vs> stat_;
  std::vector<int> basis_;
};

}  // namespace detail

// Builder for  maximize c.x  over linear rows plus per-variable bounds.
// solve() is const and reentrant; bounds and objective can be edited between
// solves, which is how the branch-and-bound layer drives it.
template <class T>
class LinearProgram {
 public:
  int add_variable(const T& lower, std::optional<T> upper, const T& objective) {
    if (upper && *upper < lower)
      throw ValidationError("variable upper bound lies below its lower bound");
    lo_.push_back(lower);
    up_.push_back(std::move(upper));
    obj_.push_back(objective);
    return variable_count() - 1;
  }

  void set_objective(int var, const T& value) { obj_.at(var) = value; }
  const T& objective(int var) const { return obj_.at(var); }

  void set_bounds(int var, const T& lower, std::optional<T> upper) {
    if (upper && *upper < lower)
      throw ValidationError("variable upper bound lies below its lower bound");
    lo_.at(var) = lower;
    up_.at(var) = std::move(upper);
  }
  const T& lower_bound(int var) const { return lo_.at(var); }
  const std::optional<T>& upper_bound(int var) const { return up_.at(var); }

  void add_le(std::vector<std::pair<int, T>> coeffs, const T& rhs) { add_row(-1, coeffs, rhs); }
  void add_ge(std::vector<std::pair<int, T>> coeffs, const T& rhs) { add_row(1, coeffs, rhs); }
  void add_eq(std::vector<std::pair<int, T>> coeffs, const T& rhs) { add_row(0, coeffs, rhs); }

  int variable_count() const { return static_cast<int>(lo_.size()); }
  int row_count() const { return static_cast<int>(rows_.size()); }

  LpResult<T> solve(const LpOptions& opts = {}) const {
    const int n = variable_count();
    const int m = row_count();
    std::vector<signed char> sense(m);
    std::vector<T> rhs(m);
    std::vector<std::vector<T>> dense(m, std::vector<T>(n, T(0)));
    for (int i = 0; i < m; ++i) {
      sense[i] = rows_[i].sense;
      rhs[i] = rows_[i].rhs;
      for (const auto& [var, coeff] : rows_[i].coeffs) dense[i][var] += coeff;
    }
    for (int j = 0; j < n; ++j)
      if (up_[j] && *up_[j] < lo_[j]) {
        LpResult<T> out;
        out.status = LpStatus::Infeasible;
        return out;
      }
    detail::Simplex<T> solver(lo_, up_, std::move(sense), std::move(rhs), std::move(dense));
    std::vector<T> objective = obj_;
    return solver.run(objective, opts);
  }

  // Objective value of a given point, for cross-checks.
  T objective_value(const std::vector<T>& x) const {
    T z(0);
    for (int j = 0; j < variable_count(); ++j)
      if (obj_[j] != 0) z += obj_[j] * x[j];
    return z;
  }

 private:
  struct RowData {
    signed char sense;  // -1 '<=', 0 '=', +1 '>='
    T rhs;
    std::vector<std::pair<int, T>> coeffs;
  };

  void add_row(signed char sense, std::vector<std::pair<int, T>>& coeffs, const T& rhs) {
    for (const auto& [var, coeff] : coeffs) {
      (void)coeff;
      if (var < 0 || var >= variable_count())
        throw ValidationError("constraint references unknown variable");
    }
    rows_.push_back(RowData{sense, rhs, std::move(coeffs)});
  }

  std::vector<T> lo_;
  std::vector<std::optional<T>> up_;
  std::vector<T> obj_;
  std::vector<RowData> rows_;
};

}  // namespace stablefare
