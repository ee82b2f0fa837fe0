#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "latrade/auction.hpp"
#include "latrade/forecast.hpp"
#include "latrade/valuation.hpp"

namespace latrade {

struct PairDefault {
  int seller_id = 0;
  int defaulted = 0;
};

struct DefaultApportionment {
  int buyer_id = 0;
  int total = 0;
  std::vector<PairDefault> per_seller;  // contract order
  std::vector<std::string> notes;       // largest-remainder rounding decisions
};

// Splits a buyer's default over its contracts in proportion to the
// contracted quantities; leftover units go to the largest remainders, ties
// to the lower seller id.
DefaultApportionment apportion_defaults(int theta, std::span<const LAContract> buyer_contracts);

struct EsOutcome {
  int es_id = 0;
  Role role = Role::Inactive;
  int r_act = 0;
  int r_tra = 0;
  int theta = 0;
  int active_rb = 0;
  EnergyBreakdown energy;
  UtilityBreakdown utility;
};

struct FrameExecution {
  std::size_t frame = 0;
  std::vector<EsOutcome> outcomes;  // server order
  std::vector<DefaultApportionment> apportionments;
  FrameLedger ledger;
  double latency_ms = 0.0;

  double welfare() const;
};

// Throws std::invalid_argument when a contract names an unknown server or
// the realized demands do not line up with the profiles.
FrameExecution execute_frame(const ContractSet& contracts, std::span<const int> realized,
                             std::span<const EdgeServerProfile> profiles, double hours, double lambda);

struct HorizonExecution {
  std::vector<FrameExecution> frames;
  std::vector<double> cumulative_utility;  // per server
  double cumulative_welfare = 0.0;
};

HorizonExecution run_horizon(const Scenario& scenario, std::span<const ContractSet> contract_sets);

}  // namespace latrade
