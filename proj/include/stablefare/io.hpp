#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stablefare/errors.hpp"
#include "stablefare/model.hpp"
#include "stablefare/pipeline.hpp"
#include "stablefare/variants.hpp"

namespace stablefare {

// Scenario documents are JSON with a fixed key order, so emission is
// deterministic and fixtures diff cleanly. Money fields are decimal strings
// (or "p/q"), never JSON floats, so every quantity survives a round trip
// exactly.
using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Money and small helpers
// ---------------------------------------------------------------------------

namespace detail {

inline Rat money_from_json(const Json& v, const std::string& where) {
  if (v.is_string()) return parse_decimal(v.get<std::string>());
  if (v.is_number_integer()) return Rat(v.get<long long>());
  if (v.is_number_float())
    throw ParseError(where + ": money must be a decimal string, not a binary float");
  throw ParseError(where + ": expected a decimal string");
}

inline std::string money_to_json(const Rat& v) { return format_exact(v); }

inline const Json& require_field(const Json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

inline int int_field(const Json& j, const char* key, const std::string& where) {
  const Json& v = require_field(j, key, where);
  if (!v.is_number_integer()) throw ParseError(where + ": field '" + key + "' must be an integer");
  return v.get<int>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenario document
// ---------------------------------------------------------------------------

// One self-contained problem description: the network, pricing parameters,
// and either explicit candidate routes or an operator fleet that generates
// them. Parses and emits losslessly.
struct ScenarioFile {
  Network network;
  CostParams cost;
  CostRule cost_rule;
  std::vector<Route> routes;
  std::vector<UserGroup> users;
  std::vector<OperatorFleet> operators;

  bool has_fleet() const { return !operators.empty(); }
};

namespace detail {

inline Json network_to_json(const Network& net) {
  Json j;
  j["nodes"] = net.nodes;
  Json links = Json::array();
  for (const Link& l : net.links) {
    Json e;
    e["from"] = l.from;
    e["to"] = l.to;
    e["minutes"] = money_to_json(l.minutes);
    e["miles"] = money_to_json(l.miles);
    links.push_back(std::move(e));
  }
  j["links"] = std::move(links);
  return j;
}

inline Network network_from_json(const Json& j) {
  Network net;
  const std::string where = "network";
  for (const Json& n : require_field(j, "nodes", where)) {
    if (!n.is_number_integer()) throw ParseError("network: node ids must be integers");
    net.nodes.push_back(n.get<int>());
  }
  for (const Json& e : require_field(j, "links", where)) {
    Link l;
    l.from = int_field(e, "from", "link");
    l.to = int_field(e, "to", "link");
    l.minutes = money_from_json(require_field(e, "minutes", "link"), "link.minutes");
    l.miles = money_from_json(require_field(e, "miles", "link"), "link.miles");
    net.links.push_back(std::move(l));
  }
  return net;
}

inline Json cost_to_json(const CostParams& c) {
  Json j;
  j["tvot"] = money_to_json(c.value_of_time);
  j["wait_multiplier"] = money_to_json(c.wait_multiplier);
  j["walk_multiplier"] = money_to_json(c.walk_multiplier);
  j["min_profit"] = money_to_json(c.min_profit);
  j["incompatible_cost"] = money_to_json(c.incompatible_cost);
  return j;
}

inline CostParams cost_from_json(const Json& j) {
  CostParams c;
  c.value_of_time = money_from_json(require_field(j, "tvot", "cost"), "cost.tvot");
  if (j.contains("wait_multiplier"))
    c.wait_multiplier = money_from_json(j["wait_multiplier"], "cost.wait_multiplier");
  if (j.contains("walk_multiplier"))
    c.walk_multiplier = money_from_json(j["walk_multiplier"], "cost.walk_multiplier");
  if (j.contains("min_profit")) c.min_profit = money_from_json(j["min_profit"], "cost.min_profit");
  if (j.contains("incompatible_cost"))
    c.incompatible_cost = money_from_json(j["incompatible_cost"], "cost.incompatible_cost");
  return c;
}

inline Json cost_rule_to_json(const CostRule& rule) {
  Json j;
  switch (rule.kind) {
    case CostRule::Kind::PerMile:
      j["kind"] = "per_mile";
      j["rate"] = money_to_json(rule.rate);
      break;
    case CostRule::Kind::PerLinkAffine:
      j["kind"] = "per_link_affine";
      j["base"] = money_to_json(rule.base);
      j["per_link"] = money_to_json(rule.per_link);
      break;
    case CostRule::Kind::Explicit:
      j["kind"] = "explicit";
      break;
  }
  return j;
}

inline CostRule cost_rule_from_json(const Json& j) {
  const std::string kind = require_field(j, "kind", "cost_rule").get<std::string>();
  if (kind == "per_mile")
    return CostRule::per_mile(money_from_json(require_field(j, "rate", "cost_rule"), "cost_rule.rate"));
  if (kind == "per_link_affine")
    return CostRule::per_link_affine(
        money_from_json(require_field(j, "base", "cost_rule"), "cost_rule.base"),
        money_from_json(require_field(j, "per_link", "cost_rule"), "cost_rule.per_link"));
  if (kind == "explicit") return CostRule::explicit_costs();
  throw ParseError("cost_rule: unknown kind '" + kind + "'");
}

inline Json route_to_json(const Route& r) {
  Json j;
  j["id"] = r.id;
  j["nodes"] = r.nodes;
  j["w_r"] = r.line_capacity;
  if (r.operating_cost) j["C_r"] = money_to_json(*r.operating_cost);
  if (r.min_profit) j["b_r"] = money_to_json(*r.min_profit);
  if (r.operator_id >= 0) j["operator"] = r.operator_id;
  if (r.vehicle_id >= 0) j["vehicle"] = r.vehicle_id;
  return j;
}

inline Route route_from_json(const Json& j) {
  Route r;
  const std::string where = "route";
  r.id = int_field(j, "id", where);
  for (const Json& n : require_field(j, "nodes", where)) r.nodes.push_back(n.get<int>());
  r.line_capacity = int_field(j, "w_r", where);
  if (j.contains("C_r")) r.operating_cost = money_from_json(j["C_r"], "route.C_r");
  if (j.contains("b_r")) r.min_profit = money_from_json(j["b_r"], "route.b_r");
  if (j.contains("operator")) r.operator_id = int_field(j, "operator", where);
  if (j.contains("vehicle")) r.vehicle_id = int_field(j, "vehicle", where);
  return r;
}

inline Json user_to_json(const UserGroup& u) {
  Json j;
  j["id"] = u.id;
  j["origin"] = u.origin;
  j["destination"] = u.destination;
  j["q_s"] = u.demand;
  j["U"] = money_to_json(u.utility);
  j["g_s"] = money_to_json(u.min_benefit);
  if (!u.utility_by_route.empty()) {
    Json by;
    for (const auto& [route_id, value] : u.utility_by_route)
      by[std::to_string(route_id)] = money_to_json(value);
    j["U_by_route"] = std::move(by);
  }
  if (u.observed_fare) j["observed_fare"] = money_to_json(*u.observed_fare);
  return j;
}

inline UserGroup user_from_json(const Json& j) {
  UserGroup u;
  const std::string where = "user";
  u.id = int_field(j, "id", where);
  u.origin = int_field(j, "origin", where);
  u.destination = int_field(j, "destination", where);
  u.demand = int_field(j, "q_s", where);
  u.utility = money_from_json(require_field(j, "U", where), "user.U");
  if (j.contains("g_s")) u.min_benefit = money_from_json(j["g_s"], "user.g_s");
  if (j.contains("U_by_route")) {
    for (const auto& [key, value] : j["U_by_route"].items()) {
      try {
        u.utility_by_route[std::stoi(key)] = money_from_json(value, "user.U_by_route");
      } catch (const std::invalid_argument&) {
        throw ParseError("user.U_by_route: route key '" + key + "' is not an integer");
      }
    }
  }
  if (j.contains("observed_fare"))
    u.observed_fare = money_from_json(j["observed_fare"], "user.observed_fare");
  return u;
}

inline Json fleet_to_json(const OperatorFleet& op) {
  Json j;
  j["id"] = op.id;
  j["b"] = money_to_json(op.min_profit);
  Json vehicles = Json::array();
  for (const Vehicle& v : op.vehicles) {
    Json e;
    e["id"] = v.id;
    e["start"] = v.start_node;
    e["capacity"] = v.capacity;
    e["paths"] = v.candidate_paths;
    vehicles.push_back(std::move(e));
  }
  j["vehicles"] = std::move(vehicles);
  return j;
}

inline OperatorFleet fleet_from_json(const Json& j) {
  OperatorFleet op;
  const std::string where = "operator";
  op.id = int_field(j, "id", where);
  if (j.contains("b")) op.min_profit = money_from_json(j["b"], "operator.b");
  for (const Json& e : require_field(j, "vehicles", where)) {
    Vehicle v;
    v.id = int_field(e, "id", "vehicle");
    v.start_node = int_field(e, "start", "vehicle");
    v.capacity = int_field(e, "capacity", "vehicle");
    for (const Json& path : require_field(e, "paths", "vehicle"))
      v.candidate_paths.push_back(path.get<std::vector<int>>());
    op.vehicles.push_back(std::move(v));
  }
  return op;
}

}  // namespace detail

inline std::string emit_scenario(const ScenarioFile& scn) {
  Json j;
  j["network"] = detail::network_to_json(scn.network);
  j["cost"] = detail::cost_to_json(scn.cost);
  j["cost_rule"] = detail::cost_rule_to_json(scn.cost_rule);
  if (!scn.routes.empty()) {
    Json routes = Json::array();
    for (const Route& r : scn.routes) routes.push_back(detail::route_to_json(r));
    j["routes"] = std::move(routes);
  }
  Json users = Json::array();
  for (const UserGroup& u : scn.users) users.push_back(detail::user_to_json(u));
  j["users"] = std::move(users);
  if (!scn.operators.empty()) {
    Json ops = Json::array();
    for (const OperatorFleet& op : scn.operators) ops.push_back(detail::fleet_to_json(op));
    j["operators"] = std::move(ops);
  }
  return j.dump(2) + "\n";
}

inline ScenarioFile parse_scenario(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
  }
  ScenarioFile scn;
  scn.network = detail::network_from_json(detail::require_field(j, "network", "scenario"));
  scn.cost = detail::cost_from_json(detail::require_field(j, "cost", "scenario"));
  scn.cost_rule = detail::cost_rule_from_json(detail::require_field(j, "cost_rule", "scenario"));
  if (j.contains("routes"))
    for (const Json& r : j["routes"]) scn.routes.push_back(detail::route_from_json(r));
  for (const Json& u : detail::require_field(j, "users", "scenario"))
    scn.users.push_back(detail::user_from_json(u));
  if (j.contains("operators"))
    for (const Json& op : j["operators"]) scn.operators.push_back(detail::fleet_from_json(op));
  if (scn.has_fleet() && !scn.routes.empty())
    throw ParseError("scenario: give either explicit routes or an operator fleet, not both");
  return scn;
}

// The plain-instance view of a scenario without a fleet.
inline ProblemInstance scenario_instance(const ScenarioFile& scn) {
  if (scn.has_fleet())
    throw ValidationError("fleet scenarios expand through their operators, not directly");
  return validate_instance(scn.network, scn.routes, scn.users, scn.cost, scn.cost_rule,
                           WaitPolicy::None);
}

inline FleetScenario scenario_fleet(const ScenarioFile& scn) {
  if (!scn.has_fleet()) throw ValidationError("scenario has no operator fleet");
  FleetScenario fleet;
  fleet.network = scn.network;
  fleet.operators = scn.operators;
  fleet.users = scn.users;
  fleet.params = scn.cost;
  fleet.cost_rule = scn.cost_rule;
  return fleet;
}

// ---------------------------------------------------------------------------
// Trips CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(std::move(field));
  return out;
}

inline long parse_long_field(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    long v = std::stol(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError(where + ": not an integer: '" + text + "'");
  }
}

// Days since 1970-01-01 of a proleptic Gregorian date (the standard
// days-from-civil computation); exact for the full long range, UTC only.
inline long days_from_civil(long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

inline void civil_from_days(long z, long& y, unsigned& m, unsigned& d) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

// Epoch seconds, or an ISO-8601 UTC timestamp like 2026-08-01T09:30:00Z.
inline long parse_request_time(const std::string& text) {
  if (text.find('T') == std::string::npos) return parse_long_field(text, "request_time");
  int year = 0, mon = 0, day = 0, hh = 0, mm = 0, ss = 0;
  char tail[2] = {0, 0};
  int got = std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%1s", &year, &mon, &day, &hh, &mm,
                        &ss, tail);
  bool ok = (got == 6 || (got == 7 && tail[0] == 'Z')) && mon >= 1 && mon <= 12 && day >= 1 &&
            day <= 31 && hh >= 0 && hh < 24 && mm >= 0 && mm < 60 && ss >= 0 && ss < 60;
  if (!ok)
    throw ParseError("request_time: expected epoch seconds or ISO-8601 UTC, got '" + text + "'");
  return days_from_civil(year, static_cast<unsigned>(mon), static_cast<unsigned>(day)) * 86400L +
         hh * 3600L + mm * 60L + ss;
}

inline std::string emit_request_time(long epoch) {
  if (epoch < 0) return std::to_string(epoch);
  long days = epoch / 86400, rest = epoch % 86400;
  long y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04ld-%02u-%02uT%02ld:%02ld:%02ldZ", y, m, d, rest / 3600,
                rest % 3600 / 60, rest % 60);
  return buf;
}

}  // namespace detail

inline constexpr const char* kTripsHeader = "id,pickup_node,dropoff_node,request_time,fare_usd,passengers";

inline std::vector<TripRecord> parse_trips_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || detail::split_csv_line(line) != detail::split_csv_line(kTripsHeader))
    throw ParseError(std::string("trips file must start with header '") + kTripsHeader + "'");
  std::vector<TripRecord> trips;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 6)
      throw ParseError("trips line " + std::to_string(line_no) + ": expected 6 fields, got " +
                       std::to_string(fields.size()));
    TripRecord t;
    t.id = detail::parse_long_field(fields[0], "trip id");
    t.pickup_node = static_cast<int>(detail::parse_long_field(fields[1], "pickup_node"));
    t.dropoff_node = static_cast<int>(detail::parse_long_field(fields[2], "dropoff_node"));
    t.request_time = detail::parse_request_time(fields[3]);
    t.fare = parse_decimal(fields[4]);
    t.passengers = static_cast<int>(detail::parse_long_field(fields[5], "passengers"));
    trips.push_back(std::move(t));
  }
  return trips;
}

inline std::string emit_trips_csv(const std::vector<TripRecord>& trips) {
  std::string out = std::string(kTripsHeader) + "\n";
  for (const TripRecord& t : trips) {
    out += std::to_string(t.id) + "," + std::to_string(t.pickup_node) + "," +
           std::to_string(t.dropoff_node) + "," + detail::emit_request_time(t.request_time) + "," +
           format_exact(t.fare) + "," + std::to_string(t.passengers) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix CSV (square, node ids on both axes)
// ---------------------------------------------------------------------------

inline TripMatrix parse_matrix_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("matrix file is empty");
  auto header = detail::split_csv_line(line);
  if (header.empty() || header[0] != "node")
    throw ParseError("matrix header must start with 'node'");
  std::vector<int> ids;
  for (std::size_t i = 1; i < header.size(); ++i)
    ids.push_back(static_cast<int>(detail::parse_long_field(header[i], "matrix node id")));
  std::vector<std::vector<Rat>> cells;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != ids.size() + 1)
      throw ParseError("matrix line " + std::to_string(line_no) + ": expected " +
                       std::to_string(ids.size() + 1) + " fields");
    std::size_t row = cells.size();
    if (row >= ids.size()) throw ParseError("matrix has more rows than node ids");
    if (detail::parse_long_field(fields[0], "matrix row id") != ids[row])
      throw ParseError("matrix line " + std::to_string(line_no) +
                       ": row id does not match the header order");
    std::vector<Rat> values;
    for (std::size_t i = 1; i < fields.size(); ++i) values.push_back(parse_decimal(fields[i]));
    cells.push_back(std::move(values));
  }
  return TripMatrix(std::move(ids), std::move(cells));
}

inline std::string emit_matrix_csv(const TripMatrix& matrix) {
  std::string out = "node";
  for (int id : matrix.node_ids()) out += "," + std::to_string(id);
  out += "\n";
  for (int from : matrix.node_ids()) {
    out += std::to_string(from);
    for (int to : matrix.node_ids()) out += "," + format_exact(matrix.at(from, to));
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline parameter document
// ---------------------------------------------------------------------------

inline std::string emit_pipeline_params(const PipelineParams& params) {
  Json j;
  j["cost"] = detail::cost_to_json(params.cost);
  j["cost_rule"] = detail::cost_rule_to_json(params.cost_rule);
  j["interval_seconds"] = detail::money_to_json(params.interval_seconds);
  j["floor_seconds"] = detail::money_to_json(params.floor_seconds);
  j["w_r"] = params.capacity;
  return j.dump(2) + "\n";
}

inline PipelineParams parse_pipeline_params(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("params file is not valid JSON: ") + e.what());
  }
  PipelineParams params;
  params.cost = detail::cost_from_json(detail::require_field(j, "cost", "params"));
  params.cost_rule = detail::cost_rule_from_json(detail::require_field(j, "cost_rule", "params"));
  if (j.contains("interval_seconds"))
    params.interval_seconds =
        detail::money_from_json(j["interval_seconds"], "params.interval_seconds");
  if (j.contains("floor_seconds"))
    params.floor_seconds = detail::money_from_json(j["floor_seconds"], "params.floor_seconds");
  if (j.contains("w_r")) params.capacity = detail::int_field(j, "w_r", "params");
  return params;
}

}  // namespace stablefare
