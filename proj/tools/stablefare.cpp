// stablefare command-line tool: solve, allocate, price, pipeline, bench,
// validate. Exit codes: 0 success, 2 empty core, 1 input error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stablefare/io.hpp"
#include "stablefare/report.hpp"
#include "stablefare/synthetic.hpp"
#include "stablefare/variants.hpp"

namespace sf = stablefare;

namespace {

struct CommonOpts {
  bool use_float = false;
  bool use_exact = false;
  double tol = 0;
  std::string out_dir;
  long max_coalitions = -1;  // -1: env or library default
};

// Writes each artifact to --out DIR, or prints it to stdout under a
// "== name ==" banner when no directory was given.
class ArtifactSink {
 public:
  explicit ArtifactSink(std::string dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    if (dir_.empty()) {
      std::cout << "== " << name << " ==\n" << content;
      return;
    }
    std::filesystem::create_directories(dir_);
    std::filesystem::path path = std::filesystem::path(dir_) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw sf::Error("cannot write " + path.string());
    out << content;
  }

 private:
  std::string dir_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw sf::ParseError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

long resolve_max_coalitions(const CommonOpts& opts) {
  if (opts.max_coalitions >= 0) return opts.max_coalitions;
  if (const char* env = std::getenv("STABLEFARE_MAX_COALITIONS")) {
    try {
      return std::stol(env);
    } catch (const std::exception&) {
      throw sf::ParseError("STABLEFARE_MAX_COALITIONS is not an integer: '" + std::string(env) +
                           "'");
    }
  }
  return sf::kDefaultCoalitionLimit;
}

void apply_tolerance(const CommonOpts& opts) {
  if (opts.tol > 0) {
    sf::num_traits<double>::feasibility_tolerance = opts.tol;
    sf::num_traits<double>::integrality_tolerance = opts.tol * 10;
  }
}

// One solved scenario, plain or fleet, in one scalar mode.
template <class T>
struct SolvedScenario {
  sf::ProblemInstance instance;
  sf::AssignmentResult<T> assignment;
  sf::StabilityMode mode = sf::StabilityMode::Decentralized;
};

template <class T>
SolvedScenario<T> solve_scenario_only(const sf::ScenarioFile& scn) {
  SolvedScenario<T> out;
  if (scn.has_fleet()) {
    sf::FleetModel model = sf::build_fleet_model(sf::scenario_fleet(scn));
    out.instance = std::move(model.instance);
    out.assignment = sf::solve_assignment<T>(out.instance, model.assign);
    out.mode = sf::StabilityMode::Centralized;
  } else {
    out.instance = sf::scenario_instance(scn);
    out.assignment = sf::solve_assignment<T>(out.instance);
  }
  return out;
}

template <class T>
int run_solve(const sf::ScenarioFile& scn, const CommonOpts& opts) {
  SolvedScenario<T> solved = solve_scenario_only<T>(scn);
  ArtifactSink sink(opts.out_dir);
  sink.write("assignment_summary.txt", sf::emit_assignment_summary(solved.instance, solved.assignment));
  sink.write("assignment.csv", sf::emit_assignment_csv(solved.instance, solved.assignment));
  sink.write("routes.csv", sf::emit_routes_csv(solved.instance, solved.assignment));
  return solved.assignment.status == sf::LpStatus::Optimal ? 0 : 1;
}

template <class T>
int run_allocate(const sf::ScenarioFile& scn, const CommonOpts& opts, bool price_too,
                 bool centralized) {
  SolvedScenario<T> solved = solve_scenario_only<T>(scn);
  if (solved.assignment.status != sf::LpStatus::Optimal) {
    std::cerr << "error: the assignment program is infeasible\n";
    return 1;
  }
  sf::AllocationOptions<T> alloc;
  alloc.mode = centralized ? sf::StabilityMode::Centralized : solved.mode;
  alloc.max_coalitions = resolve_max_coalitions(opts);
  ArtifactSink sink(opts.out_dir);

  auto user_opt = sf::user_optimal_allocation(solved.instance, solved.assignment, alloc);
  if (user_opt.status != sf::CoreStatus::Optimal) {
    sink.write("empty_core.txt",
               sf::emit_empty_core_report(solved.instance, solved.assignment, alloc.mode,
                                          alloc.max_coalitions));
    return 2;
  }
  auto op_opt =
      sf::operator_optimal_allocation(solved.instance, solved.assignment, user_opt, alloc);

  if (!price_too) {
    sink.write("user_optimal_summary.txt", sf::emit_outcome_summary(user_opt));
    sink.write("user_optimal.csv", sf::emit_outcome_csv(solved.instance, user_opt));
    sink.write("operator_optimal_summary.txt", sf::emit_outcome_summary(op_opt));
    sink.write("operator_optimal.csv", sf::emit_outcome_csv(solved.instance, op_opt));
    return 0;
  }
  auto user_prices = sf::compute_prices(solved.instance, solved.assignment, user_opt);
  auto op_prices = sf::compute_prices(solved.instance, solved.assignment, op_opt);
  sink.write("price_table.csv", sf::emit_price_table(solved.instance, user_prices, op_prices));
  sink.write("revenue.csv", sf::emit_revenue_csv(solved.instance, user_prices, op_prices));
  sink.write("gaps.csv", sf::emit_gap_csv(sf::allocation_gap(user_prices, op_prices)));
  return 0;
}

struct PipelineArgs {
  std::string trips_path, minutes_path, miles_path, params_path;
  bool synthetic = false;
  unsigned seed = 1;
  int count = 50;
};

template <class T>
int run_pipeline_cmd(const PipelineArgs& args, const CommonOpts& opts) {
  sf::PipelineParams params;
  if (!args.params_path.empty()) params = sf::parse_pipeline_params(read_file(args.params_path));
  params.max_coalitions = resolve_max_coalitions(opts);

  std::vector<sf::TripRecord> trips;
  sf::TripMatrix minutes, miles;
  if (args.synthetic) {
    sf::TripSetOptions gen;
    gen.count = args.count;
    gen.seed = args.seed;
    sf::TripSet sample = sf::random_trip_set(gen);
    trips = std::move(sample.trips);
    minutes = std::move(sample.minutes);
    miles = std::move(sample.miles);
    if (args.params_path.empty()) {
      params.cost.value_of_time = sf::Rat(1, 5);
      params.cost_rule = sf::CostRule::per_mile(sf::Rat(2));
    }
  } else {
    if (args.trips_path.empty() || args.minutes_path.empty() || args.miles_path.empty())
      throw sf::ParseError("pipeline needs --trips, --minutes and --miles, or --synthetic");
    trips = sf::parse_trips_csv(read_file(args.trips_path));
    minutes = sf::parse_matrix_csv(read_file(args.minutes_path));
    miles = sf::parse_matrix_csv(read_file(args.miles_path));
  }

  auto res = sf::run_pipeline<T>(trips, minutes, miles, params);
  ArtifactSink sink(opts.out_dir);
  sink.write("metrics.txt", sf::emit_pipeline_metrics(res.metrics));
  sink.write("intervals.csv", sf::emit_intervals_csv(res.intervals));
  sink.write("prices.csv", sf::emit_price_triples_csv(res.metrics));
  sink.write("gaps.csv", sf::emit_gap_csv(res.metrics.gaps_sorted));
  std::cerr << "pipeline: " << res.timing.intervals << " intervals in " << std::fixed
            << std::setprecision(2) << res.timing.total_seconds << "s (max interval "
            << res.timing.max_interval_seconds << "s)\n";
  return res.metrics.floor_intervals > 0 ? 2 : 0;
}

struct BenchArgs {
  std::string range = "2..10";
  unsigned seed = 500;
};

template <class T>
int run_bench(const BenchArgs& args, const CommonOpts& opts) {
  int lo = 0, hi = 0;
  if (std::sscanf(args.range.c_str(), "%d..%d", &lo, &hi) != 2 || lo < 1 || hi < lo)
    throw sf::ParseError("--n wants a range like 2..15, got '" + args.range + "'");

  // One seed for the whole sweep: the n-trip sample extends the smaller ones,
  // so solve effort scales with size instead of jumping between unrelated
  // instances. Each time is the best of three runs to damp scheduler noise.
  std::vector<sf::BenchRow> rows;
  for (int n = lo; n <= hi; ++n) {
    sf::TripSetOptions gen;
    gen.count = n;
    gen.seed = args.seed;
    sf::TripSet sample = sf::random_trip_set(gen);
    sf::PipelineParams params;
    params.cost.value_of_time = sf::Rat(1, 5);
    params.cost_rule = sf::CostRule::per_mile(sf::Rat(2));
    auto cand = sf::generate_candidate_routes(sample.trips, sample.minutes, params);
    sf::Network net = sf::build_trip_network(sample.minutes, sample.miles);
    sf::ProblemInstance inst = sf::validate_instance(
        net, cand.routes, sf::trip_user_groups(sample.trips, sample.minutes, params.cost),
        params.cost, params.cost_rule, sf::WaitPolicy::FromRouteStart);

    auto model = sf::build_assignment_model<T>(inst);
    sf::BenchRow row;
    row.n = n;
    row.demand_rows = model.demand_rows;
    row.capacity_rows = model.capacity_rows;
    row.bigm_rows = model.lp.row_count() - model.demand_rows - model.capacity_rows;
    row.seconds = 1e9;
    for (int rep = 0; rep < 3; ++rep) {
      auto t0 = std::chrono::steady_clock::now();
      auto res = sf::solve_assignment<T>(inst);
      row.seconds = std::min(
          row.seconds,
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      row.nodes = res.nodes;
      if (res.status != sf::LpStatus::Optimal) throw sf::Error("bench instance failed to solve");
    }
    rows.push_back(row);
  }
  ArtifactSink sink(opts.out_dir);
  sink.write("bench.csv", sf::emit_bench_table(rows));
  return 0;
}

int run_validate(const sf::ScenarioFile& scn) {
  if (scn.has_fleet()) {
    sf::FleetModel model = sf::build_fleet_model(sf::scenario_fleet(scn));
    std::cout << "ok: fleet scenario, " << model.vehicle_count << " vehicles, "
              << model.instance.route_count() << " candidate routes, "
              << model.instance.user_count() << " user groups, " << model.instance.agent_count()
              << " agents\n";
  } else {
    sf::ProblemInstance inst = sf::scenario_instance(scn);
    std::cout << "ok: " << inst.route_count() << " routes, " << inst.user_count()
              << " user groups, " << inst.agent_count() << " agents\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stablefare: stable cost sharing for capacitated traveler-to-route assignment"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string scenario_path;
  PipelineArgs pargs;
  BenchArgs bargs;
  bool centralized = false;

  auto add_common = [&](CLI::App* cmd, bool with_scenario) {
    cmd->add_flag("--float", opts.use_float, "solve in floating point");
    cmd->add_flag("--exact", opts.use_exact, "solve in exact rationals");
    cmd->add_option("--tol", opts.tol, "float-mode feasibility tolerance (default 1e-7)");
    cmd->add_option("--out", opts.out_dir, "write artifacts into this directory");
    cmd->add_option("--max-coalitions", opts.max_coalitions,
                    "cap on enumerated coalitions (or env STABLEFARE_MAX_COALITIONS)");
    if (with_scenario)
      cmd->add_option("scenario", scenario_path, "scenario JSON document")->required();
  };

  CLI::App* solve = app.add_subcommand("solve", "solve the assignment program of a scenario");
  add_common(solve, true);
  CLI::App* allocate =
      app.add_subcommand("allocate", "compute the user- and operator-optimal stable outcomes");
  add_common(allocate, true);
  allocate->add_flag("--centralized", centralized,
                     "between-operator stability only (default for fleet scenarios)");
  CLI::App* price = app.add_subcommand("price", "turn the two stable extremes into ticket prices");
  add_common(price, true);
  price->add_flag("--centralized", centralized,
                  "between-operator stability only (default for fleet scenarios)");

  CLI::App* pipeline = app.add_subcommand("pipeline", "run the trip-pooling pipeline");
  add_common(pipeline, false);
  pipeline->add_option("--trips", pargs.trips_path, "trips CSV");
  pipeline->add_option("--minutes", pargs.minutes_path, "travel-time matrix CSV");
  pipeline->add_option("--miles", pargs.miles_path, "distance matrix CSV");
  pipeline->add_option("--params", pargs.params_path, "pipeline parameter JSON");
  pipeline->add_flag("--synthetic", pargs.synthetic, "generate a seeded synthetic trip set");
  pipeline->add_option("--seed", pargs.seed, "synthetic generator seed");
  pipeline->add_option("--count", pargs.count, "synthetic trip count");

  CLI::App* bench =
      app.add_subcommand("bench", "model sizes and solve times over synthetic batches");
  add_common(bench, false);
  bench->add_option("--n", bargs.range, "batch size range, e.g. 2..15");
  bench->add_option("--seed", bargs.seed, "generator seed base");

  CLI::App* validate = app.add_subcommand("validate", "lint a scenario document");
  validate->add_option("scenario", scenario_path, "scenario JSON document")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    apply_tolerance(opts);
    if (opts.use_float && opts.use_exact)
      throw sf::ParseError("choose one of --exact and --float");
    // bench measures wall time, so it defaults to the float solver; every
    // other subcommand defaults to exact arithmetic.
    bool use_float = opts.use_float || (bench->parsed() && !opts.use_exact);

    if (validate->parsed()) return run_validate(sf::parse_scenario(read_file(scenario_path)));
    if (bench->parsed())
      return use_float ? run_bench<double>(bargs, opts) : run_bench<sf::Rat>(bargs, opts);
    if (pipeline->parsed())
      return use_float ? run_pipeline_cmd<double>(pargs, opts)
                       : run_pipeline_cmd<sf::Rat>(pargs, opts);

    sf::ScenarioFile scn = sf::parse_scenario(read_file(scenario_path));
    if (solve->parsed())
      return use_float ? run_solve<double>(scn, opts) : run_solve<sf::Rat>(scn, opts);
    bool price_too = price->parsed();
    if (allocate->parsed() || price_too) {
      if (use_float) return run_allocate<double>(scn, opts, price_too, centralized);
      return run_allocate<sf::Rat>(scn, opts, price_too, centralized);
    }
    throw sf::Error("no subcommand matched");
  } catch (const sf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
