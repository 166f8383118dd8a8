#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "helpers.hpp"
#include "stablefare/pipeline.hpp"
#include "stablefare/synthetic.hpp"
#include "stablefare/verify.hpp"

using namespace stablefare;
using testutil::R;

namespace {

TripMatrix line_matrix(const std::vector<int>& ids, const std::vector<Rat>& pos,
                       const Rat& per_unit) {
  std::vector<std::vector<Rat>> cells(ids.size());
  for (std::size_t a = 0; a < ids.size(); ++a)
    for (std::size_t b = 0; b < ids.size(); ++b) {
      Rat d = pos[a] - pos[b];
      if (d < 0) d = -d;
      cells[a].push_back(d * per_unit);
    }
  return TripMatrix(ids, std::move(cells));
}

TripRecord trip(long id, int pickup, int dropoff, long when, const Rat& fare, int pax = 1) {
  TripRecord t;
  t.id = id;
  t.pickup_node = pickup;
  t.dropoff_node = dropoff;
  t.request_time = when;
  t.fare = fare;
  t.passengers = pax;
  return t;
}

// Three riders over the same two corners with two-seat vehicles: any two can
// pool at a saving, all three cannot fit, and singles only break even. The
// pairwise poaching offers then outbid every exact split.
struct BurstFixture {
  std::vector<TripRecord> trips;
  TripMatrix minutes = line_matrix({1, 2}, {Rat(0), Rat(10)}, Rat(1));
  TripMatrix miles = line_matrix({1, 2}, {Rat(0), Rat(10)}, Rat(1, 5));
  PipelineParams params;

  explicit BurstFixture(std::vector<long> times) {
    long id = 1;
    for (long when : times) trips.push_back(trip(id++, 1, 2, when, Rat(1)));
    params.cost.value_of_time = Rat(1, 10);
    params.cost_rule = CostRule::per_mile(Rat(1, 2));  // 2 miles -> cost 1
    params.capacity = 2;
  }
};

}  // namespace

TEST_CASE("candidate routes cover singles and cheapest pair orderings", "[pipeline]") {
  // Two same-direction trips on a street: pickup 1 at 0, pickup 2 at 1,
  // dropoffs at 10 and 11. The door-to-door ordering wins.
  std::vector<int> ids = {11, 12, 13, 14};
  TripMatrix minutes = line_matrix(ids, {Rat(0), Rat(1), Rat(10), Rat(11)}, Rat(1));
  std::vector<TripRecord> trips = {trip(1, 11, 13, 0, Rat(12)), trip(2, 12, 14, 5, Rat(12))};
  PipelineParams params;
  auto cand = generate_candidate_routes(trips, minutes, params);
  REQUIRE(cand.routes.size() == 3);
  REQUIRE(cand.routes[0].nodes == std::vector<int>{11, 13});
  REQUIRE(cand.routes[1].nodes == std::vector<int>{12, 14});
  REQUIRE(cand.routes[2].nodes == std::vector<int>{11, 12, 13, 14});
  REQUIRE(cand.routes[2].line_capacity == 3);
  REQUIRE(cand.served[2] == std::array<int, 2>{0, 1});
  for (std::size_t r = 0; r < 3; ++r) REQUIRE(cand.routes[r].id == static_cast<int>(r) + 1);

  // Opposite trips between the same corners: the two drivable orderings are
  // closed tours of equal length; the earlier listed one is kept.
  std::vector<TripRecord> opposite = {trip(1, 11, 13, 0, Rat(12)), trip(2, 13, 11, 0, Rat(12))};
  auto tours = generate_candidate_routes(opposite, minutes, params);
  REQUIRE(tours.routes.size() == 3);
  REQUIRE(tours.routes[2].nodes == std::vector<int>{11, 13, 11});

  // Identical origin-destination pairs collapse to the direct route.
  std::vector<TripRecord> twins = {trip(1, 11, 13, 0, Rat(12)), trip(2, 11, 13, 0, Rat(12))};
  auto collapsed = generate_candidate_routes(twins, minutes, params);
  REQUIRE(collapsed.routes.size() == 3);
  REQUIRE(collapsed.routes[2].nodes == std::vector<int>{11, 13});
  REQUIRE(collapsed.served[2] == std::array<int, 2>{0, 1});

  // Ten trips with distinct corners: n singles plus one route per pair.
  TripSetOptions opt;
  opt.count = 10;
  opt.seed = 7;
  TripSet sample = random_trip_set(opt);
  auto many = generate_candidate_routes(sample.trips, sample.minutes, params);
  REQUIRE(many.routes.size() == 55);

  // A node outside the matrix is an error, as is a bad trip.
  std::vector<TripRecord> stray = {trip(1, 11, 99, 0, Rat(12))};
  REQUIRE_THROWS_AS(generate_candidate_routes(stray, minutes, params), ValidationError);
  std::vector<TripRecord> loop = {trip(1, 11, 11, 0, Rat(12))};
  REQUIRE_THROWS_AS(generate_candidate_routes(loop, minutes, params), ValidationError);
  std::vector<TripRecord> refund = {trip(1, 11, 13, 0, Rat(-1))};
  REQUIRE_THROWS_AS(generate_candidate_routes(refund, minutes, params), ValidationError);
  std::vector<TripRecord> twice = {trip(3, 11, 13, 0, Rat(1)), trip(3, 12, 14, 0, Rat(1))};
  REQUIRE_THROWS_AS(generate_candidate_routes(twice, minutes, params), ValidationError);
}

TEST_CASE("program rows match the closed-form counts", "[pipeline]") {
  PipelineParams params;
  params.cost.value_of_time = Rat(1, 5);
  params.cost_rule = CostRule::per_mile(Rat(2));
  for (int n = 1; n <= 15; ++n) {
    TripSetOptions opt;
    opt.count = n;
    opt.seed = 100u + static_cast<unsigned>(n);
    TripSet sample = random_trip_set(opt);
    auto cand = generate_candidate_routes(sample.trips, sample.minutes, params);
    Network net = build_trip_network(sample.minutes, sample.miles);
    ProblemInstance inst =
        validate_instance(net, cand.routes, trip_user_groups(sample.trips, sample.minutes, params.cost),
                          params.cost, params.cost_rule, WaitPolicy::FromRouteStart);
    auto model = build_assignment_model<double>(inst);
    ModelSize want = model_size(n);
    REQUIRE(model.demand_rows == want.demand_rows);
    REQUIRE(model.capacity_rows == want.capacity_rows);
    REQUIRE(model.lp.row_count() - model.demand_rows - model.capacity_rows == want.bigm_rows);
    REQUIRE(want.bigm_rows == inst.route_count());
  }
  REQUIRE(model_size(2).capacity_rows == 5);
  REQUIRE(model_size(10).capacity_rows == 145);
  REQUIRE(model_size(10).bigm_rows == 55);
  REQUIRE(model_size(1).capacity_rows == 1);
  REQUIRE_THROWS_AS(model_size(-1), ValidationError);
}

TEST_CASE("walking policy prices detours against the fare gap", "[pipeline]") {
  CostParams cost;
  cost.value_of_time = R("0.4");
  // one block at 20 blocks/mile and 4 ft/s costs 22 walking minutes per mile
  std::vector<Rat> gaps;
  for (int i = 0; i < 99; ++i) gaps.push_back(Rat(1));
  for (int i = 0; i < 656; ++i) gaps.push_back(R("0.03"));
  auto policy = evaluate_walking_policy(gaps, Rat(1), cost);
  REQUIRE(policy.walk_cost == R("0.44"));
  REQUIRE(policy.absorbable == 99);
  REQUIRE(policy.remainder == 656);
  REQUIRE(policy.total == 755);
  REQUIRE(policy.mean_remainder_gap == R("0.03"));
  REQUIRE(policy.required_transfer == (R("0.44") - R("0.03")) * Rat(656) / Rat(755));
  REQUIRE(to_double(policy.required_transfer) == Catch::Approx(0.356).margin(0.005));

  auto stay = evaluate_walking_policy(gaps, Rat(0), cost);
  REQUIRE(stay.walk_cost == Rat(0));
  REQUIRE(stay.absorbable == 755);
  REQUIRE(stay.required_transfer == Rat(0));
  REQUIRE_THROWS_AS(evaluate_walking_policy(gaps, Rat(-1), cost), ValidationError);

  std::vector<double> few = {1.0, 0.1};
  auto approx = evaluate_walking_policy(few, 1.0, cost);
  REQUIRE(approx.walk_cost == Catch::Approx(0.44));
  REQUIRE(approx.absorbable == 1);
  REQUIRE(approx.required_transfer == Catch::Approx((0.44 - 0.1) * 0.5));
}

TEST_CASE("a three-way standoff splits the interval", "[pipeline]") {
  // The static sixty-second problem has no stable split: pairs poach.
  BurstFixture burst({1754006400, 1754006410, 1754006440});
  Network net = build_trip_network(burst.minutes, burst.miles);
  auto whole = detail::solve_interval<Rat>(burst.trips, Rat(1754006400), Rat(1754006460), net,
                                           burst.minutes, burst.params);
  REQUIRE(whole.assignment.status == LpStatus::Optimal);
  REQUIRE(whole.assignment.objective_net == Rat(1));
  REQUIRE(whole.status == IntervalStatus::EmptyCoreAtFloor);
  REQUIRE(whole.user_optimal.status == CoreStatus::EmptyCore);
  auto scan = core_feasible_by_scan(whole.instance, whole.assignment);
  REQUIRE(scan.has_value());
  REQUIRE_FALSE(*scan);
  REQUIRE(core_empty_by_packing(whole.instance, whole.assignment));

  // Spread requests: one halving isolates the pair from the straggler.
  auto parts = partition_and_stabilize<Rat>(burst.trips, net, burst.minutes, burst.params);
  REQUIRE(parts.size() == 2);
  REQUIRE(parts[0].trip_ids == std::vector<long>{1, 2});
  REQUIRE(parts[0].begin_seconds == Rat(1754006400));
  REQUIRE(parts[0].end_seconds == Rat(1754006430));
  REQUIRE(parts[1].trip_ids == std::vector<long>{3});
  REQUIRE(parts[1].end_seconds == Rat(1754006460));
  for (const auto& part : parts) {
    REQUIRE(part.status == IntervalStatus::Stable);
    auto rep = check_stability(part.instance, part.assignment, part.user_optimal);
    INFO(rep.reason);
    REQUIRE(rep.ok);
  }

  // Simultaneous requests cannot be separated: bisection hits the one-second
  // floor and reports the standoff instead of hiding it.
  BurstFixture stuck({1754006405, 1754006405, 1754006405});
  auto floored = partition_and_stabilize<Rat>(stuck.trips, net, stuck.minutes, stuck.params);
  REQUIRE(floored.size() == 1);
  REQUIRE(floored[0].status == IntervalStatus::EmptyCoreAtFloor);
  REQUIRE(floored[0].trip_ids == std::vector<long>{1, 2, 3});
  REQUIRE(floored[0].end_seconds - floored[0].begin_seconds <= Rat(1));
  auto floor_scan = core_feasible_by_scan(floored[0].instance, floored[0].assignment);
  REQUIRE(floor_scan.has_value());
  REQUIRE_FALSE(*floor_scan);

  // A floor at least as wide as the interval is rejected.
  PipelineParams bad = burst.params;
  bad.floor_seconds = bad.interval_seconds;
  REQUIRE_THROWS_AS(partition_and_stabilize<Rat>(burst.trips, net, burst.minutes, bad),
                    ValidationError);
}

TEST_CASE("pipeline metrics fold shared and solo outcomes", "[pipeline]") {
  std::vector<int> ids = {21, 22, 23, 24};
  TripMatrix minutes = line_matrix(ids, {Rat(0), Rat(1), Rat(10), Rat(11)}, Rat(1));
  TripMatrix miles = line_matrix(ids, {Rat(0), Rat(1), Rat(10), Rat(11)}, Rat(1, 10));
  PipelineParams params;
  params.cost.value_of_time = Rat(1, 100);
  params.cost_rule = CostRule::per_mile(Rat(10));

  // Parallel overlapping trips pool onto one vehicle.
  std::vector<TripRecord> pooled = {trip(1, 21, 23, 1754006400, Rat(12)),
                                    trip(2, 22, 24, 1754006405, Rat(12), 2)};
  auto res = run_pipeline<Rat>(pooled, minutes, miles, params);
  REQUIRE(res.intervals.size() == 1);
  REQUIRE(res.intervals[0].status == IntervalStatus::Stable);
  REQUIRE(res.metrics.total_trips == 2);
  REQUIRE(res.metrics.matched_trips == 2);
  REQUIRE(res.metrics.shared_trips == 2);
  REQUIRE(res.metrics.share_rate == Rat(1));
  REQUIRE(res.metrics.single_vmt == Rat(2));
  REQUIRE(res.metrics.shared_vmt == R("1.1"));
  REQUIRE(res.metrics.prices.size() == 2);
  for (const auto& row : res.metrics.prices) {
    REQUIRE(row.user_optimal_price <= row.operator_optimal_price);
    REQUIRE(row.operator_optimal_price <= row.observed_fare);
  }
  REQUIRE(res.metrics.gaps_sorted.size() == 2);
  REQUIRE(res.metrics.gaps_sorted[0] >= res.metrics.gaps_sorted[1]);
  REQUIRE(res.metrics.mean_width_demand_weighted == Rat(60));
  REQUIRE(res.metrics.mean_width_count_weighted == Rat(60));
  REQUIRE(res.metrics.stable_intervals == 1);
  REQUIRE(res.metrics.floor_intervals == 0);

  // Opposed trips ride alone: no pooling, mileage unchanged.
  std::vector<TripRecord> opposed = {trip(1, 21, 23, 1754006400, Rat(12)),
                                     trip(2, 24, 22, 1754006405, Rat(12))};
  auto solo = run_pipeline<Rat>(opposed, minutes, miles, params);
  REQUIRE(solo.metrics.matched_trips == 2);
  REQUIRE(solo.metrics.shared_trips == 0);
  REQUIRE(solo.metrics.share_rate == Rat(0));
  REQUIRE(solo.metrics.shared_vmt == solo.metrics.single_vmt);

  // An empty trip list yields empty metrics.
  auto none = run_pipeline<Rat>({}, minutes, miles, params);
  REQUIRE(none.intervals.empty());
  REQUIRE(none.metrics.total_trips == 0);
  REQUIRE(none.metrics.prices.empty());
  REQUIRE(none.metrics.gaps_sorted.empty());
}

template <class T>
long run_city_contract(unsigned seed) {
  PipelineParams params;
  params.cost.value_of_time = Rat(1, 5);
  params.cost_rule = CostRule::per_mile(Rat(2));
  TripSetOptions opt;
  opt.count = 50;
  opt.seed = seed;
  TripSet sample = random_trip_set(opt);
  auto res = run_pipeline<T>(sample.trips, sample.minutes, sample.miles, params);
  REQUIRE(res.metrics.total_trips == 50);
  REQUIRE(res.metrics.shared_vmt <= res.metrics.single_vmt);
  for (const IntervalResult<T>& iv : res.intervals) {
    if (iv.status != IntervalStatus::Stable) continue;
    for (const auto& out : {iv.user_optimal, iv.operator_optimal}) {
      auto rep = check_stability(iv.instance, iv.assignment, out);
      INFO(rep.reason);
      REQUIRE(rep.ok);
    }
  }
  for (std::size_t i = 1; i < res.metrics.gaps_sorted.size(); ++i)
    REQUIRE(res.metrics.gaps_sorted[i - 1] >= res.metrics.gaps_sorted[i]);
  const T slack = num_traits<T>::feasibility_tol();
  for (const auto& row : res.metrics.prices)
    REQUIRE(row.user_optimal_price <= row.operator_optimal_price + slack);

  // identical inputs reproduce identical metrics
  auto again = run_pipeline<T>(sample.trips, sample.minutes, sample.miles, params);
  REQUIRE(again.metrics.share_rate == res.metrics.share_rate);
  REQUIRE(again.metrics.shared_vmt == res.metrics.shared_vmt);
  REQUIRE(again.metrics.gaps_sorted == res.metrics.gaps_sorted);
  REQUIRE(again.intervals.size() == res.intervals.size());
  return res.metrics.shared_trips;
}

TEST_CASE("seeded city samples keep the mileage and stability contracts", "[pipeline]") {
  long pooled_somewhere = 0;
  pooled_somewhere += run_city_contract<double>(11u);
  pooled_somewhere += run_city_contract<Rat>(22u);
  pooled_somewhere += run_city_contract<double>(33u);
  REQUIRE(pooled_somewhere > 0);
}
