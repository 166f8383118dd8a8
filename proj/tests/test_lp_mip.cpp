#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "stablefare/lp.hpp"
#include "stablefare/mip.hpp"

using namespace stablefare;
using testutil::R;

namespace {

template <class T>
T V(const char* s) {
  return num_traits<T>::from_rat(parse_decimal(s));
}

template <class T>
bool near(const T& a, const T& b) {
  if constexpr (num_traits<T>::exact)
    return a == b;
  else
    return std::abs(a - b) <= 1e-7;
}

// ---------------------------------------------------------------------------
// Independent oracles. The LP oracle enumerates every candidate vertex (all
// n-subsets of row/bound hyperplanes) with exact rational elimination; the IP
// oracle walks the whole integer box. Both are correct by construction on the
// small instances used here and never touch the simplex code under test.
// ---------------------------------------------------------------------------

struct OracleRow {
  int sense;  // -1 '<=', 0 '=', +1 '>='
  Rat rhs;
  std::vector<Rat> a;
};

struct OracleLp {
  std::vector<Rat> lo, up, obj;
  std::vector<OracleRow> rows;
  int vars() const { return static_cast<int>(lo.size()); }
};

std::optional<std::vector<Rat>> solve_square(std::vector<std::vector<Rat>> m, std::vector<Rat> b) {
  const int n = static_cast<int>(m.size());
  for (int c = 0; c < n; ++c) {
    int p = -1;
    for (int r = c; r < n; ++r)
      if (m[r][c] != 0) {
        p = r;
        break;
      }
    if (p < 0) return std::nullopt;
    std::swap(m[c], m[p]);
    std::swap(b[c], b[p]);
    for (int r = 0; r < n; ++r) {
      if (r == c || m[r][c] == 0) continue;
      Rat f = m[r][c] / m[c][c];
      for (int k = c; k < n; ++k) m[r][k] -= f * m[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<Rat> y(n);
  for (int i = 0; i < n; ++i) y[i] = b[i] / m[i][i];
  return y;
}

bool oracle_feasible(const OracleLp& p, const std::vector<Rat>& x) {
  for (int j = 0; j < p.vars(); ++j)
    if (x[j] < p.lo[j] || x[j] > p.up[j]) return false;
  for (const auto& row : p.rows) {
    Rat act;
    for (int j = 0; j < p.vars(); ++j) act += row.a[j] * x[j];
    if (row.sense < 0 && act > row.rhs) return false;
    if (row.sense == 0 && act != row.rhs) return false;
    if (row.sense > 0 && act < row.rhs) return false;
  }
  return true;
}

Rat oracle_objective(const OracleLp& p, const std::vector<Rat>& x) {
  Rat z;
  for (int j = 0; j < p.vars(); ++j) z += p.obj[j] * x[j];
  return z;
}

// Max objective over all vertices of the (bounded) feasible box; nullopt when
// the region is empty.
std::optional<Rat> oracle_lp_max(const OracleLp& p) {
  const int n = p.vars();
  std::vector<std::pair<std::vector<Rat>, Rat>> planes;
  for (const auto& row : p.rows) planes.emplace_back(row.a, row.rhs);
  for (int j = 0; j < n; ++j) {
    std::vector<Rat> e(n);
    e[j] = 1;
    planes.emplace_back(e, p.lo[j]);
    planes.emplace_back(e, p.up[j]);
  }
  std::optional<Rat> best;
  std::vector<int> pick(n);
  auto visit = [&](auto&& self, int from, int depth) -> void {
    if (depth == n) {
      std::vector<std::vector<Rat>> m(n);
      std::vector<Rat> b(n);
      for (int i = 0; i < n; ++i) {
        m[i] = planes[pick[i]].first;
        b[i] = planes[pick[i]].second;
      }
      auto x = solve_square(std::move(m), std::move(b));
      if (!x || !oracle_feasible(p, *x)) return;
      Rat z = oracle_objective(p, *x);
      if (!best || z > *best) best = z;
      return;
    }
    for (int i = from; i < static_cast<int>(planes.size()); ++i) {
      pick[depth] = i;
      self(self, i + 1, depth + 1);
    }
  };
  visit(visit, 0, 0);
  return best;
}

// Max objective over all integer points of the box; nullopt when none fits.
std::optional<Rat> oracle_ip_max(const OracleLp& p) {
  const int n = p.vars();
  std::vector<long> cur(n), lo(n), up(n);
  for (int j = 0; j < n; ++j) {
    lo[j] = cur[j] = p.lo[j].convert_to<long>();
    up[j] = p.up[j].convert_to<long>();
  }
  std::optional<Rat> best;
  while (true) {
    std::vector<Rat> x(n);
    for (int j = 0; j < n; ++j) x[j] = cur[j];
    if (oracle_feasible(p, x)) {
      Rat z = oracle_objective(p, x);
      if (!best || z > *best) best = z;
    }
    int j = 0;
    while (j < n && cur[j] == up[j]) {
      cur[j] = lo[j];
      ++j;
    }
    if (j == n) break;
    ++cur[j];
  }
  return best;
}

template <class T>
LinearProgram<T> to_program(const OracleLp& p) {
  LinearProgram<T> lp;
  for (int j = 0; j < p.vars(); ++j)
    lp.add_variable(num_traits<T>::from_rat(p.lo[j]),
                    std::optional<T>(num_traits<T>::from_rat(p.up[j])),
                    num_traits<T>::from_rat(p.obj[j]));
  for (const auto& row : p.rows) {
    std::vector<std::pair<int, T>> coeffs;
    for (int j = 0; j < p.vars(); ++j)
      if (row.a[j] != 0) coeffs.emplace_back(j, num_traits<T>::from_rat(row.a[j]));
    if (row.sense < 0)
      lp.add_le(std::move(coeffs), num_traits<T>::from_rat(row.rhs));
    else if (row.sense == 0)
      lp.add_eq(std::move(coeffs), num_traits<T>::from_rat(row.rhs));
    else
      lp.add_ge(std::move(coeffs), num_traits<T>::from_rat(row.rhs));
  }
  return lp;
}

OracleLp random_problem(std::mt19937& rng) {
  auto ri = [&](int a, int b) { return a + static_cast<int>(rng() % (b - a + 1)); };
  OracleLp p;
  const int n = ri(1, 4);
  const int m = ri(0, 4);
  for (int j = 0; j < n; ++j) {
    p.lo.push_back(0);
    p.up.push_back(ri(0, 3));
    p.obj.push_back(ri(-5, 5));
  }
  for (int i = 0; i < m; ++i) {
    OracleRow row;
    int pick = ri(0, 9);
    row.sense = pick < 6 ? -1 : (pick < 8 ? 1 : 0);
    row.rhs = ri(-2, 8);
    for (int j = 0; j < n; ++j) row.a.push_back(ri(-3, 3));
    p.rows.push_back(std::move(row));
  }
  return p;
}

}  // namespace

TEMPLATE_TEST_CASE("the simplex solves textbook programs", "[lp]", Rat, double) {
  using T = TestType;

  SECTION("interior optimum on a small polytope") {
    LinearProgram<T> lp;
    int x = lp.add_variable(T(0), std::nullopt, T(3));
    int y = lp.add_variable(T(0), T(3), T(2));
    lp.add_le({{x, T(1)}, {y, T(1)}}, T(4));
    lp.add_le({{x, T(1)}}, T(2));
    auto res = lp.solve();
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(near(res.objective, T(10)));
    CHECK(near(res.x[0], T(2)));
    CHECK(near(res.x[1], T(2)));
  }

  SECTION("a covering row goes through phase one") {
    LinearProgram<T> lp;
    int x = lp.add_variable(T(0), T(100), T(-1));
    lp.add_ge({{x, T(1)}}, T(3));
    auto res = lp.solve();
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(near(res.objective, T(-3)));
    CHECK(near(res.x[0], T(3)));
  }

  SECTION("equality rows") {
    LinearProgram<T> lp;
    int x = lp.add_variable(T(0), T(3), T(2));
    int y = lp.add_variable(T(0), T(10), T(1));
    lp.add_eq({{x, T(1)}, {y, T(1)}}, T(4));
    auto res = lp.solve();
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(near(res.objective, T(7)));
    CHECK(near(res.x[0], T(3)));
    CHECK(near(res.x[1], T(1)));
  }

  SECTION("bound-only problems") {
    LinearProgram<T> boxed;
    boxed.add_variable(T(0), T(5), T(1));
    auto res = boxed.solve();
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(near(res.objective, T(5)));

    LinearProgram<T> open_ended;
    open_ended.add_variable(T(0), std::nullopt, T(1));
    CHECK(open_ended.solve().status == LpStatus::Unbounded);

    LinearProgram<T> negative_box;
    negative_box.add_variable(T(-5), T(-1), T(1));
    res = negative_box.solve();
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(near(res.x[0], T(-1)));
    negative_box.set_objective(0, T(-1));
    res = negative_box.solve();
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(near(res.x[0], T(-5)));
  }

  SECTION("conflicting rows are infeasible") {
    LinearProgram<T> lp;
    int x = lp.add_variable(T(0), T(10), T(1));
    lp.add_ge({{x, T(1)}}, T(4));
    lp.add_le({{x, T(1)}}, T(2));
    CHECK(lp.solve().status == LpStatus::Infeasible);

    LinearProgram<T> eqs;
    int u = eqs.add_variable(T(0), T(10), T(1));
    int v = eqs.add_variable(T(0), T(10), T(1));
    eqs.add_eq({{u, T(1)}, {v, T(1)}}, T(2));
    eqs.add_eq({{u, T(1)}, {v, T(1)}}, T(3));
    CHECK(eqs.solve().status == LpStatus::Infeasible);
  }

  SECTION("degenerate overlapping rows still terminate") {
    LinearProgram<T> lp;
    int x = lp.add_variable(T(0), std::nullopt, T(1));
    int y = lp.add_variable(T(0), std::nullopt, T(1));
    lp.add_le({{x, T(1)}}, T(1));
    lp.add_le({{y, T(1)}}, T(1));
    lp.add_le({{x, T(1)}, {y, T(1)}}, T(2));
    auto res = lp.solve();
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(near(res.objective, T(2)));
  }

  SECTION("upper bounds enter through bound flips") {
    LinearProgram<T> lp;
    int x = lp.add_variable(T(0), T(2), T(2));
    int y = lp.add_variable(T(0), T(2), T(1));
    lp.add_le({{x, T(1)}, {y, T(1)}}, T(3));
    auto res = lp.solve();
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(near(res.objective, T(5)));
    CHECK(near(res.x[0], T(2)));
    CHECK(near(res.x[1], T(1)));
  }

  SECTION("fixed variables stay put") {
    LinearProgram<T> lp;
    int x = lp.add_variable(T(2), T(2), T(1));
    int y = lp.add_variable(T(0), T(1), T(1));
    lp.add_le({{x, T(1)}, {y, T(1)}}, T(5));
    auto res = lp.solve();
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(near(res.objective, T(3)));
    CHECK(near(res.x[0], T(2)));
  }

  SECTION("iteration budget is honored") {
    LinearProgram<T> lp;
    int x = lp.add_variable(T(0), std::nullopt, T(3));
    int y = lp.add_variable(T(0), T(3), T(2));
    lp.add_le({{x, T(1)}, {y, T(1)}}, T(4));
    lp.add_le({{x, T(1)}}, T(2));
    LpOptions opts;
    opts.max_iterations = 1;
    CHECK(lp.solve(opts).status == LpStatus::IterLimit);
  }
}

TEST_CASE("random programs match the vertex-enumeration oracle", "[lp]") {
  std::mt19937 rng(20260823);
  int optimal_seen = 0, infeasible_seen = 0;
  for (int trial = 0; trial < 200; ++trial) {
    OracleLp p = random_problem(rng);
    auto expect = oracle_lp_max(p);

    auto lp = to_program<Rat>(p);
    auto res = lp.solve();
    if (expect) {
      ++optimal_seen;
      REQUIRE(res.status == LpStatus::Optimal);
      REQUIRE(res.objective == *expect);
      REQUIRE(oracle_feasible(p, res.x));
      REQUIRE(oracle_objective(p, res.x) == *expect);
    } else {
      ++infeasible_seen;
      REQUIRE(res.status == LpStatus::Infeasible);
    }

    auto dlp = to_program<double>(p);
    auto dres = dlp.solve();
    if (expect) {
      REQUIRE(dres.status == LpStatus::Optimal);
      REQUIRE(std::abs(dres.objective - to_double(*expect)) <= 1e-6);
    } else {
      REQUIRE(dres.status == LpStatus::Infeasible);
    }
  }
  // The generator must exercise both outcomes.
  CHECK(optimal_seen >= 50);
  CHECK(infeasible_seen >= 20);
}

TEMPLATE_TEST_CASE("branch and bound solves textbook integer programs", "[mip]", Rat, double) {
  using T = TestType;

  SECTION("knapsack") {
    LinearProgram<T> lp;
    int a = lp.add_variable(T(0), T(1), T(10));
    int b = lp.add_variable(T(0), T(1), T(6));
    int c = lp.add_variable(T(0), T(1), T(4));
    lp.add_le({{a, T(5)}, {b, T(4)}, {c, T(3)}}, T(10));
    auto res = solve_mip(lp, {a, b, c});
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(near(res.objective, T(16)));
    CHECK(near(res.x[0], T(1)));
    CHECK(near(res.x[1], T(1)));
    CHECK(near(res.x[2], T(0)));
    REQUIRE(res.root_bound_valid);
    CHECK(res.root_bound >= res.objective);
  }

  SECTION("rounding the relaxation down") {
    LinearProgram<T> lp;
    int a = lp.add_variable(T(0), T(1), T(1));
    int b = lp.add_variable(T(0), T(1), T(1));
    lp.add_le({{a, T(2)}, {b, T(2)}}, T(3));
    auto res = solve_mip(lp, {a, b});
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(near(res.objective, T(1)));
    CHECK(near(res.root_bound, V<T>("1.5")));
  }

  SECTION("integer-infeasible but LP-feasible") {
    LinearProgram<T> lp;
    int a = lp.add_variable(T(0), T(1), T(1));
    lp.add_eq({{a, T(2)}}, T(1));
    CHECK(lp.solve().status == LpStatus::Optimal);
    CHECK(solve_mip(lp, {a}).status == LpStatus::Infeasible);
  }

  SECTION("node budget is honored") {
    LinearProgram<T> lp;
    int a = lp.add_variable(T(0), T(1), T(1));
    int b = lp.add_variable(T(0), T(1), T(1));
    lp.add_le({{a, T(2)}, {b, T(2)}}, T(3));
    MipOptions opts;
    opts.node_limit = 1;
    CHECK(solve_mip(lp, {a, b}, opts).status == LpStatus::IterLimit);
  }
}

TEST_CASE("branch and bound matches exhaustive search on random integer programs", "[mip]") {
  std::mt19937 rng(715);
  int optimal_seen = 0, infeasible_seen = 0;
  for (int trial = 0; trial < 200; ++trial) {
    OracleLp p = random_problem(rng);
    auto expect = oracle_ip_max(p);

    auto lp = to_program<Rat>(p);
    std::vector<int> ints(p.vars());
    for (int j = 0; j < p.vars(); ++j) ints[j] = j;
    auto res = solve_mip(lp, ints);
    if (expect) {
      ++optimal_seen;
      REQUIRE(res.status == LpStatus::Optimal);
      REQUIRE(res.objective == *expect);
      REQUIRE(oracle_feasible(p, res.x));
      for (const Rat& v : res.x) REQUIRE(rat_den(v) == 1);
      REQUIRE(res.root_bound_valid);
      REQUIRE(res.root_bound >= res.objective);

      // Deterministic: a second run reproduces the same point, not just the
      // same value.
      auto again = solve_mip(lp, ints);
      REQUIRE(again.x == res.x);
    } else {
      ++infeasible_seen;
      REQUIRE(res.status == LpStatus::Infeasible);
    }

    auto dlp = to_program<double>(p);
    auto dres = solve_mip(dlp, ints);
    if (expect) {
      REQUIRE(dres.status == LpStatus::Optimal);
      REQUIRE(std::abs(dres.objective - to_double(*expect)) <= 1e-6);
    } else {
      REQUIRE(dres.status == LpStatus::Infeasible);
    }
  }
  CHECK(optimal_seen >= 50);
  CHECK(infeasible_seen >= 20);
}
