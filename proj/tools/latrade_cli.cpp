// latrade: command-line front end for scenario generation, forecasting,
// auctions, strategy runs, benchmarks and property suites.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "latrade/auction.hpp"
#include "latrade/forecast.hpp"
#include "latrade/properties.hpp"
#include "latrade/report.hpp"
#include "latrade/scenario.hpp"
#include "latrade/strategies.hpp"

namespace fs = std::filesystem;
using namespace latrade;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitViolation = 2;

struct Globals {
  std::uint64_t seed = 1;
  std::string scenario;
  std::string out = ".";
  std::string format = "csv";
  std::size_t frames = 0;  // 0: one day at the chosen granularity
  std::string granularity = "hour";
  std::size_t servers = 30;
  std::string forecaster = "lstm";
};

double frame_hours(const Globals& g) { return g.granularity == "halfhour" ? 0.5 : 1.0; }

SyntheticOptions synthetic_options(const Globals& g) {
  SyntheticOptions o;
  o.frame_hours = frame_hours(g);
  o.horizon = g.frames > 0 ? g.frames : static_cast<std::size_t>(24.0 / o.frame_hours);
  return o;
}

Scenario load_or_generate(const Globals& g, std::uint64_t seed) {
  if (!g.scenario.empty()) {
    Scenario sc = load_scenario(g.scenario);
    if (g.frames > 0) {
      for (const auto& t : sc.traces)
        if (t.future.size() < g.frames) throw std::invalid_argument("--frames exceeds the scenario's future trace");
      sc.horizon = g.frames;
    }
    return sc;
  }
  return generate_synthetic(g.servers, seed, synthetic_options(g));
}

fs::path out_path(const Globals& g, const std::string& stem, const std::string& ext) {
  fs::create_directories(g.out);
  return fs::path(g.out) / (stem + "." + ext);
}

template <typename Fn>
void write_to(const fs::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  fn(out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
  std::cout << "wrote " << path.string() << '\n';
}

StrategyOptions strategy_options(const Globals& g, const Scenario& sc) {
  StrategyOptions o;
  o.forecaster = make_forecaster(g.forecaster, sc);
  return o;
}

int cmd_gen(const Globals& g) {
  const Scenario sc = generate_synthetic(g.servers, g.seed, synthetic_options(g));
  const fs::path p = out_path(g, "scenario", "json");
  save_scenario(sc, p);
  std::cout << "wrote " << p.string() << " (" << sc.servers.size() << " servers, horizon " << sc.horizon << ")\n";
  return 0;
}

int cmd_ingest(const Globals& g, const std::string& detectors, int clusters, double gamma_flow, double gamma_occ) {
  const DetectorIngest ing = ingest_detectors(fs::path(detectors));
  if (!ing.rejected.empty()) {
    write_to(out_path(g, "rejected", "csv"), [&](std::ostream& out) {
      out << "line,reason\n";
      for (const auto& r : ing.rejected) out << r.line << ",\"" << r.reason << "\"\n";
    });
  }
  const ClusterMap map = cluster_detectors(ing.records, clusters, g.seed);
  DemandMapping mapping;
  mapping.gamma_flow = gamma_flow;
  mapping.gamma_occ = gamma_occ;
  mapping.frame_hours = frame_hours(g);
  mapping.future_frames = g.frames > 0 ? g.frames : static_cast<std::size_t>(24.0 / mapping.frame_hours);
  std::vector<DemandTrace> traces = derive_demand_trace(map, ing.records, mapping);
  SyntheticOptions opts = synthetic_options(g);
  opts.horizon = mapping.future_frames;
  const Scenario sc = scenario_from_traces(map, std::move(traces), mapping.frame_hours, g.seed, opts);
  const fs::path p = out_path(g, "scenario", "json");
  save_scenario(sc, p);
  std::cout << "wrote " << p.string() << " (" << ing.records.size() << " records, " << ing.rejected.size()
            << " rejected, wcss " << map.wcss << ")\n";
  return 0;
}

int cmd_forecast(const Globals& g) {
  const Scenario sc = load_or_generate(g, g.seed);
  std::vector<UsageForecast> forecasts;
  if (g.forecaster == "lstm") {
    std::vector<ForecasterState> states;
    forecasts = forecast_all(sc, LstmForecaster{}, states);
    std::vector<int> ids;
    for (const auto& p : sc.servers) ids.push_back(p.id);
    write_to(out_path(g, "models", "json"),
             [&](std::ostream& out) { write_forecaster_states_json(out, ids, states); });
  } else {
    forecasts = forecast_all(sc, *make_forecaster(g.forecaster, sc));
  }
  write_to(out_path(g, "forecasts", "csv"), [&](std::ostream& out) { write_forecasts_csv(out, forecasts); });
  return 0;
}

int cmd_auction(const Globals& g) {
  const Scenario sc = load_or_generate(g, g.seed);
  const Prediction pred = predict(sc, strategy_options(g, sc));
  const RoleAssignment roles = determine_roles(pred.forecasts, sc.servers);
  const std::vector<ContractSet> sets = run_preauction(sc, pred.forecasts, roles);
  const Format fmt = parse_format(g.format);
  write_to(out_path(g, "contracts", std::string(format_name(fmt))), [&](std::ostream& out) {
    if (fmt == Format::Csv)
      write_contracts_csv(out, sets);
    else
      write_contracts_json(out, sets);
  });
  std::size_t n = 0;
  for (const auto& s : sets) n += s.contracts.size();
  std::cout << n << " contracts over " << sets.size() << " frames\n";
  return 0;
}

int cmd_run(const Globals& g, const std::string& strategy) {
  const StrategyKind kind = parse_strategy(strategy);
  const Scenario sc = load_or_generate(g, g.seed);
  const RunResult run = run_strategy(kind, sc, strategy_options(g, sc));
  const Format fmt = parse_format(g.format);
  const std::string stem(strategy_name(kind));
  const MetricsReport rep = build_report(std::span<const RunResult>(&run, 1), scenario_meta(sc));
  emit_report(rep, fmt, out_path(g, stem + "_frames", std::string(format_name(fmt))));
  write_to(out_path(g, stem + "_run", "json"), [&](std::ostream& out) { write_run_json(out, run); });
  write_to(out_path(g, stem + "_executions", "csv"),
           [&](std::ostream& out) { write_executions_csv(out, run.executions); });
  write_to(out_path(g, stem + "_contracts", "csv"), [&](std::ostream& out) { write_contracts_csv(out, run.contracts); });
  std::printf("%s: welfare %.6f res_util %.6f energy_util %.6f latency_ms %.6f\n", stem.c_str(),
              run.cumulative_welfare, run.resource_utilization, run.energy_utilization, run.latency.mean_ms);
  return 0;
}

int cmd_bench(const Globals& g, std::size_t seeds) {
  std::vector<RunResult> all;
  ScenarioMeta meta;
  for (std::size_t s = 0; s < seeds; ++s) {
    const std::uint64_t seed = g.seed + s;
    Scenario sc = load_or_generate(g, seed);
    sc.rng_seed = seed;
    meta = scenario_meta(sc);
    for (auto& r : run_all(sc, strategy_options(g, sc))) all.push_back(std::move(r));
    std::cerr << "seed " << seed << " done\n";
  }
  const Format fmt = parse_format(g.format);
  const MetricsReport rep = build_report(all, meta);
  const fs::path frames = out_path(g, "report", std::string(format_name(fmt)));
  const fs::path summary = out_path(g, "summary", std::string(format_name(fmt)));
  emit_report(rep, fmt, frames);
  emit_summary(rep, fmt, summary);
  std::cout << "wrote " << frames.string() << " and " << summary.string() << '\n';
  write_summary(std::cout, rep, Format::Csv);
  return 0;
}

int cmd_props(const Globals& g, std::size_t trials, double seller_tolerance) {
  const Scenario sc = load_or_generate(g, g.seed);
  const RunResult run = run_latrade(sc, strategy_options(g, sc));
  const IndividualRationality ir = check_individual_rationality(run, sc);
  const PropertyReport bb = check_budget_balance(run);
  const TruthfulnessReport tr = truthfulness_perturbation(
      [](std::uint64_t s) { return random_market_instance(s, 10); }, trials, g.seed);
  std::vector<const PropertyReport*> reports = ir.all();
  reports.push_back(&bb);
  reports.push_back(&tr.buyers);
  reports.push_back(&tr.sellers);
  write_to(out_path(g, "properties", "json"), [&](std::ostream& out) { write_property_reports_json(out, reports); });
  bool hard_failure = false;
  for (const PropertyReport* r : reports) {
    const char* status = "info";
    if (r->hard) {
      status = r->passed() ? "ok" : "FAIL";
      hard_failure = hard_failure || !r->passed();
    } else if (r == &tr.sellers) {
      status = r->rate() <= seller_tolerance ? "ok" : "FAIL";
    }
    std::printf("%-26s %-8s %-4s %zu/%zu (rate %.4f)\n", r->name.c_str(), r->hard ? "hard" : "measured", status,
                r->violations, r->trials, r->rate());
  }
  return hard_failure ? kExitViolation : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Look-ahead resource trading simulator for edge servers"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Base RNG seed")->capture_default_str();
  app.add_option("--scenario", g.scenario, "Scenario JSON; synthetic when omitted");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app.add_option("--frames", g.frames, "Horizon in frames (default: one day)");
  app.add_option("--granularity", g.granularity, "hour or halfhour")
      ->check(CLI::IsMember({"hour", "halfhour"}))
      ->capture_default_str();
  app.add_option("--servers", g.servers, "Synthetic server count")->check(CLI::Range(1, 100000))->capture_default_str();
  app.add_option("--forecaster", g.forecaster, "lstm, seasonal-naive, oracle or oracle-noise[:sd]")
      ->capture_default_str();

  auto* gen = app.add_subcommand("gen", "Generate a synthetic scenario");

  auto* ingest = app.add_subcommand("ingest", "Build a scenario from a detector CSV");
  std::string detectors;
  int clusters = 30;
  double gamma_flow = DemandMapping{}.gamma_flow, gamma_occ = DemandMapping{}.gamma_occ;
  ingest->add_option("detectors", detectors, "Detector CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--clusters", clusters, "Number of edge servers")->check(CLI::PositiveNumber)->capture_default_str();
  ingest->add_option("--gamma-flow", gamma_flow, "RBs per vehicle/hour")->capture_default_str();
  ingest->add_option("--gamma-occ", gamma_occ, "RBs per unit occupancy")->capture_default_str();

  auto* forecast = app.add_subcommand("forecast", "Forecast per-server demand");
  auto* auction = app.add_subcommand("auction", "Sign look-ahead contracts for the horizon");

  auto* run = app.add_subcommand("run", "Run one strategy");
  std::string strategy;
  run->add_option("strategy", strategy, "LATrade, ConAuction, DistaTrade, RanTrade or NoTrade")->required();

  auto* bench = app.add_subcommand("bench", "All strategies over consecutive seeds");
  std::size_t seeds = 5;
  bench->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber)->capture_default_str();

  auto* props = app.add_subcommand("props", "Property suites");
  std::size_t trials = 500;
  double seller_tolerance = 0.05;
  props->add_option("--trials", trials, "Truthfulness trials")->check(CLI::PositiveNumber)->capture_default_str();
  props->add_option("--seller-tolerance", seller_tolerance, "Allowed seller improvement rate")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(g);
    if (*ingest) return cmd_ingest(g, detectors, clusters, gamma_flow, gamma_occ);
    if (*forecast) return cmd_forecast(g);
    if (*auction) return cmd_auction(g);
    if (*run) return cmd_run(g, strategy);
    if (*bench) return cmd_bench(g, seeds);
    if (*props) return cmd_props(g, trials, seller_tolerance);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
