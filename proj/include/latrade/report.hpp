#pragma once

// CSV and JSON plumbing for scenarios, forecasts, contracts, executions and
// run metrics. Currency values are written with 6 decimals, energies in Wh
// with 3, RB counts as integers.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latrade/forecast.hpp"
#include "latrade/properties.hpp"
#include "latrade/scenario.hpp"
#include "latrade/strategies.hpp"

namespace latrade {

enum class Format { Csv, Json };

// "csv" or "json"; throws std::invalid_argument.
Format parse_format(std::string_view name);
std::string_view format_name(Format format);

double round_currency(double x);  // 6 decimals
double round_energy(double x);    // 3 decimals

// ---------------------------------------------------------------------------
// Metrics

struct FrameMetrics {
  std::string strategy;
  std::uint64_t seed = 0;
  std::size_t frame = 0;
  double welfare = 0.0;
  double buyer_utility = 0.0;
  double seller_utility = 0.0;
  double res_util = 0.0;
  double energy_util = 0.0;
  double latency_ms = 0.0;

  bool operator==(const FrameMetrics&) const = default;
};

struct RunSummary {
  std::string strategy;
  std::uint64_t seed = 0;
  double welfare = 0.0;
  double res_util = 0.0;
  double energy_util = 0.0;
  double latency_ms_mean = 0.0;
  double latency_ms_p50 = 0.0;
  double latency_ms_p95 = 0.0;
  double buyer_utility = 0.0;
  double seller_utility = 0.0;

  bool operator==(const RunSummary&) const = default;
};

struct ScenarioMeta {
  std::size_t servers = 0;
  std::size_t horizon = 0;
  double frame_hours = 0.0;
  double alpha = 0.0;
  double lambda = 0.0;

  bool operator==(const ScenarioMeta&) const = default;
};

struct MetricsReport {
  ScenarioMeta scenario;
  std::vector<FrameMetrics> frames;  // sorted by (strategy, seed, frame)
  std::vector<RunSummary> runs;      // sorted by (strategy, seed)

  bool operator==(const MetricsReport&) const = default;
};

// Values are rounded to the serialization precision here, so what is
// written re-reads into an equal report.
MetricsReport build_report(std::span<const RunResult> results, const ScenarioMeta& meta);
ScenarioMeta scenario_meta(const Scenario& scenario);

// Per-frame table: strategy,seed,frame,welfare,buyer_utility,seller_utility,
// res_util,energy_util,latency_ms. JSON carries the whole report.
void write_report(std::ostream& out, const MetricsReport& report, Format format);
// Per-run table: strategy,seed,welfare,res_util,energy_util,latency_ms_mean.
void write_summary(std::ostream& out, const MetricsReport& report, Format format);
// Throws std::runtime_error when the path cannot be written.
void emit_report(const MetricsReport& report, Format format, const std::filesystem::path& path);
void emit_summary(const MetricsReport& report, Format format, const std::filesystem::path& path);

std::vector<FrameMetrics> read_frame_metrics_csv(std::istream& in);
std::vector<RunSummary> read_summary_csv(std::istream& in);
MetricsReport read_report_json(std::istream& in);

// ---------------------------------------------------------------------------
// Scenario

inline constexpr std::string_view kScenarioSchema = "latrade.scenario/v1";

// Full double precision; load(save(s)) reproduces s exactly.
void write_scenario_json(std::ostream& out, const Scenario& scenario);
Scenario read_scenario_json(std::istream& in);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Forecasts and models

// es_id,frame,point,pmf_lowest,pmf_json
void write_forecasts_csv(std::ostream& out, std::span<const UsageForecast> forecasts);
void write_forecaster_states_json(std::ostream& out, std::span<const int> es_ids,
                                  std::span<const ForecasterState> states);
std::vector<ForecasterState> read_forecaster_states_json(std::istream& in);

// ---------------------------------------------------------------------------
// Contracts and executions

// frame,buyer,seller,qty,p_pair,pB,pS,qB,qS,c
void write_contracts_csv(std::ostream& out, std::span<const ContractSet> sets);
// One JSON document per frame, as an array.
void write_contracts_json(std::ostream& out, std::span<const ContractSet> sets);
// frame,es_id,role,r_act,r_tra,theta,u1,u2,u3,u4,total,active_wh,idle_wh
void write_executions_csv(std::ostream& out, std::span<const FrameExecution> executions);

void write_run_json(std::ostream& out, const RunResult& run);
void write_property_reports_json(std::ostream& out, std::span<const PropertyReport* const> reports);

}  // namespace latrade
