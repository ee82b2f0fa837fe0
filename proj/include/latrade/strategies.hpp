#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latrade/auction.hpp"
#include "latrade/forecast.hpp"
#include "latrade/metrics.hpp"
#include "latrade/scenario.hpp"
#include "latrade/settlement.hpp"

namespace latrade {

class Rng;

enum class StrategyKind { LATrade, ConAuction, DistaTrade, RanTrade, NoTrade };

inline constexpr StrategyKind kAllStrategies[] = {StrategyKind::LATrade, StrategyKind::ConAuction,
                                                  StrategyKind::DistaTrade, StrategyKind::RanTrade,
                                                  StrategyKind::NoTrade};

std::string_view strategy_name(StrategyKind kind);
// Accepts the names above case-insensitively; throws std::invalid_argument.
StrategyKind parse_strategy(std::string_view name);

struct RunResult {
  std::string strategy;
  std::uint64_t seed = 0;
  std::vector<double> frame_welfare;
  double cumulative_welfare = 0.0;
  std::vector<double> es_utility;  // cumulative, server order
  double resource_utilization = 0.0;
  double energy_utilization = 0.0;
  std::vector<Utilization> frame_utilization;
  std::vector<double> frame_latency_ms;
  LatencyStats latency;
  double stage1_ms = 0.0;  // forecasting and pre-auction, not in latency
  std::vector<ContractSet> contracts;
  std::vector<FrameExecution> executions;
  std::vector<UsageForecast> forecasts;  // prediction-based strategies only
};

struct StrategyOptions {
  std::shared_ptr<const Forecaster> forecaster;  // null: LSTM with defaults
  PricingRule distatrade_pricing = PricingRule::LosingBidAverage;
  PricingRule rantrade_pricing = PricingRule::Midpoint;
};

// Stage-1 output shared by the prediction-based strategies.
struct Prediction {
  std::vector<UsageForecast> forecasts;
  double elapsed_ms = 0.0;
};

Prediction predict(const Scenario& scenario, const StrategyOptions& options = {});

RunResult run_latrade(const Scenario& scenario, const StrategyOptions& options = {});
RunResult run_latrade(const Scenario& scenario, const Prediction& prediction);
RunResult run_conauction(const Scenario& scenario);
RunResult run_distatrade(const Scenario& scenario, const StrategyOptions& options = {});
RunResult run_distatrade(const Scenario& scenario, const Prediction& prediction,
                         PricingRule pricing = PricingRule::LosingBidAverage);
RunResult run_rantrade(const Scenario& scenario, const StrategyOptions& options = {});
RunResult run_notrade(const Scenario& scenario);

RunResult run_strategy(StrategyKind kind, const Scenario& scenario, const StrategyOptions& options = {});

// All five strategies on one scenario; forecasts are computed once.
std::vector<RunResult> run_all(const Scenario& scenario, const StrategyOptions& options = {});

// Random matching: repeatedly picks a uniformly random pair with
// bid > ask and both sides still open, trading min(deficit, surplus).
std::vector<MatchRecord> match_random(std::span<const BuyerQuote> buyers, std::span<const SellerQuote> sellers,
                                      const BidMatrix& bids, Rng& rng);

}  // namespace latrade
