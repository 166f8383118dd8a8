#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stablefare/allocation.hpp"
#include "stablefare/assignment.hpp"
#include "stablefare/errors.hpp"
#include "stablefare/model.hpp"

// Trip-level machinery: ingest observed trips, generate single and pairwise
// shared candidate routes, partition the horizon into intervals that admit
// stable outcomes, and fold the per-interval solutions into policy metrics.
namespace stablefare {

struct TripRecord {
  long id = 0;
  int pickup_node = 0;
  int dropoff_node = 0;
  long request_time = 0;  // epoch seconds
  Rat fare;               // observed single-ride fare, dollars
  int passengers = 1;
};

inline void validate_trips(const std::vector<TripRecord>& trips) {
  std::map<long, int> seen;
  for (const TripRecord& t : trips) {
    if (!seen.emplace(t.id, 1).second)
      throw ValidationError("duplicate trip id " + std::to_string(t.id));
    if (t.pickup_node == t.dropoff_node)
      throw ValidationError("trip " + std::to_string(t.id) + " picks up and drops off at node " +
                            std::to_string(t.pickup_node));
    if (t.fare < 0) throw ValidationError("trip " + std::to_string(t.id) + " has a negative fare");
    if (t.passengers < 1)
      throw ValidationError("trip " + std::to_string(t.id) + " carries no passengers");
    if (t.id > std::numeric_limits<int>::max() || t.id < 0)
      throw ValidationError("trip id " + std::to_string(t.id) + " out of range");
  }
}

// A square node-to-node table (minutes or miles) with explicit node ids.
class TripMatrix {
 public:
  TripMatrix() = default;
  TripMatrix(std::vector<int> node_ids, std::vector<std::vector<Rat>> values)
      : ids_(std::move(node_ids)), cell_(std::move(values)) {
    if (cell_.size() != ids_.size())
      throw ValidationError("matrix has " + std::to_string(cell_.size()) + " rows for " +
                            std::to_string(ids_.size()) + " nodes");
    for (const auto& row : cell_)
      if (row.size() != ids_.size()) throw ValidationError("matrix is not square");
    for (std::size_t i = 0; i < ids_.size(); ++i)
      if (!index_.emplace(ids_[i], static_cast<int>(i)).second)
        throw ValidationError("duplicate matrix node id " + std::to_string(ids_[i]));
  }

  const std::vector<int>& node_ids() const { return ids_; }
  bool covers(int node) const { return index_.count(node) != 0; }

  const Rat& at(int from, int to) const {
    auto f = index_.find(from), t = index_.find(to);
    if (f == index_.end() || t == index_.end())
      throw ValidationError("matrix entry missing for " + std::to_string(from) + "->" +
                            std::to_string(to));
    return cell_[f->second][t->second];
  }

 private:
  std::vector<int> ids_;
  std::vector<std::vector<Rat>> cell_;
  std::map<int, int> index_;
};

struct PipelineParams {
  CostParams cost;                               // tvot, wait weight, floors
  CostRule cost_rule = CostRule::per_mile(1);    // route operating cost
  int capacity = 3;                              // line capacity w per route
  Rat interval_seconds = 60;                     // initial interval width
  Rat floor_seconds = 1;                         // bisection floor
  MipOptions mip;
  LpOptions lp;
  long max_coalitions = kDefaultCoalitionLimit;
};

// The candidate set for one batch of trips: a direct single-rider route per
// trip plus one shared route per unordered pair. served[r] holds the local
// trip indices a route was generated for ({i, -1} for singles).
struct CandidateRoutes {
  std::vector<Route> routes;
  std::vector<std::array<int, 2>> served;
};

namespace detail {

// Drops consecutive duplicate nodes (zero-length legs of degenerate pair
// geometry). Returns an empty sequence when the collapsed route still
// repeats a node anywhere but as a closed first-equals-last tour.
inline std::vector<int> collapse_ordering(const std::vector<int>& nodes) {
  std::vector<int> out;
  for (int n : nodes)
    if (out.empty() || out.back() != n) out.push_back(n);
  if (out.size() < 2) return {};
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = i + 1; j < out.size(); ++j)
      if (out[i] == out[j] && !(i == 0 && j == out.size() - 1)) return {};
  return out;
}

inline Rat sequence_minutes(const std::vector<int>& nodes, const TripMatrix& time_matrix) {
  Rat total(0);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) total += time_matrix.at(nodes[i], nodes[i + 1]);
  return total;
}

}  // namespace detail

// One direct route per trip, then the cheapest of the four pickup/dropoff
// orderings per unordered pair (ties keep the earlier ordering; orderings
// whose collapsed node sequence cannot be driven as one path are skipped,
// and a pair with no drivable ordering yields no shared route).
inline CandidateRoutes generate_candidate_routes(const std::vector<TripRecord>& trips,
                                                 const TripMatrix& time_matrix,
                                                 const PipelineParams& params) {
  validate_trips(trips);
  for (const TripRecord& t : trips)
    for (int node : {t.pickup_node, t.dropoff_node})
      if (!time_matrix.covers(node))
        throw ValidationError("time matrix does not cover node " + std::to_string(node));
  CandidateRoutes out;
  const int n = static_cast<int>(trips.size());
  int next_id = 1;
  for (int i = 0; i < n; ++i) {
    Route r;
    r.id = next_id++;
    r.nodes = {trips[i].pickup_node, trips[i].dropoff_node};
    r.line_capacity = params.capacity;
    out.routes.push_back(std::move(r));
    out.served.push_back({i, -1});
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const int of = trips[i].pickup_node, df = trips[i].dropoff_node;
      const int og = trips[j].pickup_node, dg = trips[j].dropoff_node;
      const std::vector<std::vector<int>> orderings = {
          {of, og, df, dg}, {of, og, dg, df}, {og, of, df, dg}, {og, of, dg, df}};
      std::vector<int> best;
      Rat best_minutes;
      for (const auto& ordering : orderings) {
        std::vector<int> nodes = detail::collapse_ordering(ordering);
        if (nodes.empty()) continue;
        Rat minutes = detail::sequence_minutes(nodes, time_matrix);
        if (best.empty() || minutes < best_minutes) {
          best = std::move(nodes);
          best_minutes = minutes;
        }
      }
      if (best.empty()) continue;
      Route r;
      r.id = next_id++;
      r.nodes = std::move(best);
      r.line_capacity = params.capacity;
      out.routes.push_back(std::move(r));
      out.served.push_back({i, j});
    }
  }
  return out;
}

// Complete directed network over the matrix nodes. Both matrices must list
// the same node set.
inline Network build_trip_network(const TripMatrix& time_matrix, const TripMatrix& distance_matrix) {
  Network net;
  net.nodes = time_matrix.node_ids();
  for (int from : net.nodes) {
    if (!distance_matrix.covers(from))
      throw ValidationError("distance matrix does not cover node " + std::to_string(from));
    for (int to : net.nodes) {
      if (from == to) continue;
      net.links.push_back(
          {from, to, time_matrix.at(from, to), distance_matrix.at(from, to)});
    }
  }
  for (int node : distance_matrix.node_ids())
    if (!time_matrix.covers(node))
      throw ValidationError("time matrix does not cover node " + std::to_string(node));
  net.finalize();
  return net;
}

// Each trip is one traveler who values a ride at the observed fare plus the
// time cost of riding alone, so a solo match at the observed fare breaks
// even for the rider.
inline std::vector<UserGroup> trip_user_groups(const std::vector<TripRecord>& trips,
                                               const TripMatrix& time_matrix,
                                               const CostParams& cost) {
  std::vector<UserGroup> users;
  for (const TripRecord& t : trips) {
    UserGroup u;
    u.id = static_cast<int>(t.id);
    u.origin = t.pickup_node;
    u.destination = t.dropoff_node;
    u.demand = 1;
    u.utility = t.fare + cost.value_of_time * time_matrix.at(t.pickup_node, t.dropoff_node);
    u.observed_fare = t.fare;
    users.push_back(std::move(u));
  }
  return users;
}

enum class IntervalStatus { Stable, EmptyCoreAtFloor };

inline const char* to_string(IntervalStatus s) {
  return s == IntervalStatus::Stable ? "stable" : "empty_core_at_floor";
}

template <class T>
struct IntervalResult {
  Rat begin_seconds;  // [begin, end) in epoch seconds
  Rat end_seconds;
  std::vector<long> trip_ids;
  std::vector<int> trip_passengers;  // parallel to trip_ids
  ProblemInstance instance;
  CandidateRoutes candidates;
  AssignmentResult<T> assignment;
  AllocationOutcome<T> user_optimal;
  AllocationOutcome<T> operator_optimal;
  PriceSchedule<T> user_prices;
  PriceSchedule<T> operator_prices;
  IntervalStatus status = IntervalStatus::Stable;
  double solve_seconds = 0;  // wall clock; excluded from deterministic reports
};

namespace detail {

// Solves one interval's static problem end to end; stability means the
// profit-split system is feasible.
template <class T>
IntervalResult<T> solve_interval(const std::vector<TripRecord>& trips, const Rat& begin_s,
                                 const Rat& end_s, const Network& network,
                                 const TripMatrix& time_matrix, const PipelineParams& params) {
  auto started = std::chrono::steady_clock::now();
  IntervalResult<T> out;
  out.begin_seconds = begin_s;
  out.end_seconds = end_s;
  for (const TripRecord& t : trips) {
    out.trip_ids.push_back(t.id);
    out.trip_passengers.push_back(t.passengers);
  }
  out.candidates = generate_candidate_routes(trips, time_matrix, params);
  out.instance = validate_instance(network, out.candidates.routes,
                                   trip_user_groups(trips, time_matrix, params.cost), params.cost,
                                   params.cost_rule, WaitPolicy::FromRouteStart);
  AssignOptions assign_opts;
  assign_opts.mip = params.mip;
  out.assignment = solve_assignment<T>(out.instance, assign_opts);

  AllocationOptions<T> alloc;
  alloc.mode = StabilityMode::Decentralized;
  alloc.max_coalitions = params.max_coalitions;
  alloc.lp = params.lp;
  out.user_optimal = user_optimal_allocation(out.instance, out.assignment, alloc);
  if (out.user_optimal.status == CoreStatus::Optimal) {
    out.operator_optimal =
        operator_optimal_allocation(out.instance, out.assignment, out.user_optimal, alloc);
    out.user_prices = compute_prices(out.instance, out.assignment, out.user_optimal);
    out.operator_prices = compute_prices(out.instance, out.assignment, out.operator_optimal);
    out.status = IntervalStatus::Stable;
  } else {
    out.status = IntervalStatus::EmptyCoreAtFloor;  // final unless split further
  }
  out.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

template <class T>
void stabilize_interval(std::vector<TripRecord> trips, const Rat& begin_s, const Rat& end_s,
                        const Network& network, const TripMatrix& time_matrix,
                        const PipelineParams& params, std::vector<IntervalResult<T>>& out) {
  if (trips.empty()) return;
  IntervalResult<T> solved =
      solve_interval<T>(trips, begin_s, end_s, network, time_matrix, params);
  Rat width = end_s - begin_s;
  bool splittable = trips.size() > 1 && width > params.floor_seconds;
  if (solved.status == IntervalStatus::Stable || !splittable) {
    out.push_back(std::move(solved));
    return;
  }
  Rat mid = begin_s + width / 2;
  std::vector<TripRecord> lo, hi;
  for (const TripRecord& t : trips)
    (Rat(t.request_time) < mid ? lo : hi).push_back(t);
  stabilize_interval<T>(std::move(lo), begin_s, mid, network, time_matrix, params, out);
  stabilize_interval<T>(std::move(hi), mid, end_s, network, time_matrix, params, out);
}

}  // namespace detail

// Cuts the horizon into fixed-width intervals anchored at the first request,
// then halves any interval whose static problem admits no stable split until
// it stabilizes, holds one trip, or reaches the width floor. Only intervals
// containing trips are solved and reported, in time order.
template <class T>
std::vector<IntervalResult<T>> partition_and_stabilize(std::vector<TripRecord> trips,
                                                       const Network& network,
                                                       const TripMatrix& time_matrix,
                                                       const PipelineParams& params) {
  if (!(params.interval_seconds > params.floor_seconds && params.floor_seconds > 0))
    throw ValidationError("interval width must exceed the positive floor");
  validate_trips(trips);
  std::vector<IntervalResult<T>> out;
  if (trips.empty()) return out;
  std::sort(trips.begin(), trips.end(), [](const TripRecord& a, const TripRecord& b) {
    return a.request_time != b.request_time ? a.request_time < b.request_time : a.id < b.id;
  });
  const Rat origin(trips.front().request_time);
  std::size_t i = 0;
  while (i < trips.size()) {
    // contiguous run of trips inside one initial interval; the float guess
    // of the bucket index is corrected to the exact half-open cell
    const Rat t(trips[i].request_time);
    long bucket =
        static_cast<long>(to_double((t - origin) / params.interval_seconds));
    while (origin + Rat(bucket) * params.interval_seconds > t) --bucket;
    while (origin + Rat(bucket + 1) * params.interval_seconds <= t) ++bucket;
    Rat begin_s = origin + Rat(bucket) * params.interval_seconds;
    Rat end_s = begin_s + params.interval_seconds;
    std::vector<TripRecord> batch;
    while (i < trips.size() && Rat(trips[i].request_time) < end_s) batch.push_back(trips[i++]);
    detail::stabilize_interval<T>(std::move(batch), begin_s, end_s, network, time_matrix, params,
                                  out);
  }
  return out;
}

// One observed fare against the two core extremes for a matched traveler.
template <class T>
struct PriceTriple {
  long trip_id = 0;
  T observed_fare{};
  T user_optimal_price{};
  T operator_optimal_price{};
};

template <class T>
struct PipelineMetrics {
  long total_trips = 0;
  long matched_trips = 0;
  long shared_trips = 0;    // matched to a pair-generated route
  T share_rate{};           // shared / total
  T single_vmt{};           // every trip driven alone
  T shared_vmt{};           // miles of the routes actually run
  std::vector<PriceTriple<T>> prices;  // matched trips, interval order
  std::vector<T> gaps_sorted;          // per matched traveler, descending
  Rat mean_width_demand_weighted;      // seconds, weighted by passengers
  Rat mean_width_count_weighted;       // seconds, one weight per interval
  long stable_intervals = 0;
  long floor_intervals = 0;
};

struct PipelineTiming {
  double total_seconds = 0;
  double max_interval_seconds = 0;
  long intervals = 0;
};

template <class T>
struct PipelineResult {
  std::vector<IntervalResult<T>> intervals;
  PipelineMetrics<T> metrics;
  PipelineTiming timing;
};

// Deterministic fold over the interval results in time order. Share and
// mileage metrics describe the matching of every interval; fare metrics
// (price triples, gaps) come only from intervals with a stable split.
template <class T>
PipelineResult<T> run_pipeline(std::vector<TripRecord> trips, const TripMatrix& time_matrix,
                               const TripMatrix& distance_matrix, const PipelineParams& params) {
  Network network = build_trip_network(time_matrix, distance_matrix);
  PipelineResult<T> res;
  PipelineMetrics<T>& m = res.metrics;
  m.total_trips = static_cast<long>(trips.size());
  // Mileage is accumulated exactly and converted once, so the pooled-vs-solo
  // comparison cannot be flipped by floating-point addition order.
  Rat single_vmt_sum(0), shared_vmt_sum(0);
  for (const TripRecord& t : trips)
    single_vmt_sum += distance_matrix.at(t.pickup_node, t.dropoff_node);
  res.intervals = partition_and_stabilize<T>(std::move(trips), network, time_matrix, params);

  Rat width_demand_sum(0), width_count_sum(0);
  long passenger_total = 0;
  for (const IntervalResult<T>& iv : res.intervals) {
    res.timing.total_seconds += iv.solve_seconds;
    res.timing.max_interval_seconds = std::max(res.timing.max_interval_seconds, iv.solve_seconds);
    ++res.timing.intervals;

    const Rat width = iv.end_seconds - iv.begin_seconds;
    long passengers = 0;
    for (int p : iv.trip_passengers) passengers += p;
    width_demand_sum += width * Rat(passengers);
    passenger_total += passengers;
    width_count_sum += width;
    if (iv.status == IntervalStatus::Stable)
      ++m.stable_intervals;
    else
      ++m.floor_intervals;

    if (iv.assignment.status == LpStatus::Optimal) {
      for (int s = 0; s < iv.instance.user_count(); ++s) {
        long riders = 0;
        bool shared = false;
        for (int r = 0; r < iv.instance.route_count(); ++r) {
          if (iv.assignment.counts[s][r] == 0) continue;
          riders += iv.assignment.counts[s][r];
          if (iv.candidates.served[r][1] >= 0) shared = true;
        }
        if (riders > 0) ++m.matched_trips;
        if (shared) ++m.shared_trips;
      }
      for (int r = 0; r < iv.instance.route_count(); ++r)
        if (iv.assignment.used[r]) shared_vmt_sum += iv.instance.route_miles(r);
    }
    if (iv.status == IntervalStatus::Stable) {
      for (const PriceEntry<T>& e : iv.user_prices.entries) {
        const UserGroup& user = iv.instance.users[e.group];
        PriceTriple<T> row;
        row.trip_id = user.id;
        row.observed_fare = num_traits<T>::from_rat(user.observed_fare.value_or(Rat(0)));
        row.user_optimal_price = e.price;
        m.prices.push_back(std::move(row));
      }
      std::size_t base = m.prices.size() - iv.operator_prices.entries.size();
      for (std::size_t k = 0; k < iv.operator_prices.entries.size(); ++k)
        m.prices[base + k].operator_optimal_price = iv.operator_prices.entries[k].price;
      for (T& g : allocation_gap(iv.user_prices, iv.operator_prices))
        m.gaps_sorted.push_back(std::move(g));
    }
  }
  m.single_vmt = num_traits<T>::from_rat(single_vmt_sum);
  m.shared_vmt = num_traits<T>::from_rat(shared_vmt_sum);
  if (m.total_trips > 0)
    m.share_rate = num_traits<T>::from_rat(Rat(m.shared_trips) / Rat(m.total_trips));
  if (passenger_total > 0) m.mean_width_demand_weighted = width_demand_sum / Rat(passenger_total);
  if (!res.intervals.empty())
    m.mean_width_count_weighted = width_count_sum / Rat(static_cast<long>(res.intervals.size()));
  std::sort(m.gaps_sorted.begin(), m.gaps_sorted.end(), std::greater<T>());
  return res;
}

// ---------------------------------------------------------------------------
// Policy arithmetic
// ---------------------------------------------------------------------------

struct WalkParams {
  Rat blocks_per_mile = 20;
  Rat walk_feet_per_second = 4;
};

template <class T>
struct WalkingPolicy {
  T walk_cost{};          // dollar cost of walking D blocks
  long absorbable = 0;    // travelers whose fare gap covers the walk cost
  long remainder = 0;     // travelers who would need a transfer
  long total = 0;
  T mean_remainder_gap{};
  T required_transfer{};  // per-traveler transfer closing the remainder
};

// Prices a detour of `blocks` walked at the given speed and asks how much of
// it the fare gap between the core extremes can absorb per traveler.
template <class T>
WalkingPolicy<T> evaluate_walking_policy(const std::vector<T>& gaps, const T& blocks,
                                         const CostParams& cost, const WalkParams& walk = {}) {
  if (blocks < T(0)) throw ValidationError("cannot walk a negative distance");
  using NT = num_traits<T>;
  WalkingPolicy<T> out;
  // minutes per mile on foot, then dollars via the walking value of time
  T minutes_per_mile = NT::from_int(5280) / (NT::from_rat(walk.walk_feet_per_second) * NT::from_int(60));
  out.walk_cost = blocks / NT::from_rat(walk.blocks_per_mile) * minutes_per_mile *
                  NT::from_rat(cost.value_of_time) * NT::from_rat(cost.walk_multiplier);
  out.total = static_cast<long>(gaps.size());
  T remainder_sum{};
  for (const T& gap : gaps) {
    if (gap >= out.walk_cost) {
      ++out.absorbable;
    } else {
      ++out.remainder;
      remainder_sum += gap;
    }
  }
  if (out.remainder > 0) {
    out.mean_remainder_gap = remainder_sum / NT::from_int(out.remainder);
    out.required_transfer = (out.walk_cost - out.mean_remainder_gap) *
                            NT::from_int(out.remainder) / NT::from_int(out.total);
  }
  return out;
}

// Row counts of the assignment program over n pairwise-generated trips with
// distinct stops: one demand row per trip, one capacity row per route link
// (singles have one leg, shared routes three), one idle linkage per route.
struct ModelSize {
  long demand_rows = 0;
  long capacity_rows = 0;
  long bigm_rows = 0;
};

inline ModelSize model_size(long n) {
  if (n < 0) throw ValidationError("negative trip count");
  return {n, n * (3 * n - 1) / 2, n * (n + 1) / 2};
}

}  // namespace stablefare
