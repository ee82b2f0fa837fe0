#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "latrade/auction.hpp"
#include "latrade/pmf.hpp"
#include "latrade/scenario.hpp"
#include "latrade/strategies.hpp"

namespace latrade {

struct PropertyReport {
  std::string name;
  bool hard = true;  // hard reports fail the run on any violation
  std::size_t trials = 0;
  std::size_t violations = 0;
  // Smallest slack observed; negative means violated.
  double worst_margin = std::numeric_limits<double>::infinity();
  std::vector<std::uint64_t> repro_seeds;  // one per violation
  std::vector<std::string> details;        // one per violation

  double rate() const { return trials == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(trials); }
  bool passed(double allowed_rate = 0.0) const { return hard ? violations == 0 : rate() <= allowed_rate; }
  void record(double margin, bool violated, std::uint64_t seed, const std::string& detail);
};

inline constexpr double kUtilityEpsilon = 1e-9;

struct IndividualRationality {
  PropertyReport price_bracket;           // hard: ask <= p <= bid
  PropertyReport seller_bound;            // measured: bound vs no-trade expectation
  PropertyReport negative_buyer_utility;  // measured
  PropertyReport cumulative_vs_notrade;   // measured, per server over the run

  std::vector<const PropertyReport*> all() const {
    return {&price_bracket, &seller_bound, &negative_buyer_utility, &cumulative_vs_notrade};
  }
};

IndividualRationality check_individual_rationality(const RunResult& run, const Scenario& scenario);

// Price bracket over a bare contract list.
void check_price_bracket(std::span<const LAContract> contracts, std::uint64_t seed, PropertyReport& report);

// Ledger net >= 0 on every frame and exactly 0 without defaults.
PropertyReport check_budget_balance(const RunResult& run);
void check_budget_balance(const FrameExecution& execution, std::uint64_t seed, PropertyReport& report);

// One auction frame: per-server profile, point estimate and usage pmf.
struct MarketInstance {
  std::vector<EdgeServerProfile> servers;
  std::vector<int> estimates;
  std::vector<UsagePmf> pmfs;
  double alpha = 500.0;
  double hours = 1.0;
  double lambda = 0.001;
};

using InstanceGenerator = std::function<MarketInstance(std::uint64_t seed)>;

// Synthetic profiles, estimates R_In * (1 + U[-0.4, 0.4]) and discretized
// normal pmfs with sd U[2, 8] around each estimate.
MarketInstance random_market_instance(std::uint64_t seed, std::size_t n_servers = 10);

struct TruthfulnessOptions {
  Range misreport{0.5, 2.0};  // multiplicative factor on the true value
  double epsilon = kUtilityEpsilon;
};

struct TruthfulnessReport {
  PropertyReport buyers;   // hard
  PropertyReport sellers;  // measured rate
};

TruthfulnessReport truthfulness_perturbation(const InstanceGenerator& generator, std::size_t trials,
                                             std::uint64_t rng_seed, const TruthfulnessOptions& options = {});

}  // namespace latrade
