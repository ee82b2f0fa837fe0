#pragma once

#include <span>

#include "latrade/pmf.hpp"
#include "latrade/scenario.hpp"

namespace latrade {

struct EnergyBreakdown {
  double active_wh = 0.0;
  double idle_wh = 0.0;
  double total_wh = 0.0;
};

struct UtilityBreakdown {
  double u1 = 0.0;
  double u2 = 0.0;
  double u3 = 0.0;
  double u4 = 0.0;
  double total = 0.0;
  int theta = 0;  // defaulted RBs
};

struct FrameLedger {
  double collected = 0.0;  // from defaulting buyers
  double paid = 0.0;       // to sellers whose RBs were returned
  double net = 0.0;
};

// Aggregated terms of one buyer or one seller in one frame.
struct TradeTerms {
  double price = 0.0;    // p^B or p^S
  double penalty = 0.0;  // q^B or q^S
  int traded = 0;        // R^{B,Tra} or R^{S,Tra}
};

EnergyBreakdown buyer_energy(int r_in, int r_act, double eta_use, double eta_idle, double hours);
EnergyBreakdown seller_energy(int r_in, int r_act, int r_tra, int theta, double eta_use, double eta_idle,
                              double hours);

// Defaulted RBs of a buyer: own RBs are consumed first, contracted RBs after.
int buyer_default(int r_in, int r_act, int r_tra);

// Active RBs used for utilization accounting.
int buyer_active_rb(int r_in, int r_act);
int seller_active_rb(int r_in, int r_act, int r_tra, int theta);

// The buyer's true unit valuation is profile.internal_revenue.
UtilityBreakdown buyer_realized_utility(const TradeTerms& terms, int r_act, const EdgeServerProfile& profile,
                                        double hours, double lambda);
UtilityBreakdown seller_realized_utility(const TradeTerms& terms, int r_act, int theta,
                                         const EdgeServerProfile& profile, double hours, double lambda);
// Utility of a server that trades nothing in the frame.
UtilityBreakdown no_trade_utility(int r_act, const EdgeServerProfile& profile, double hours, double lambda);

struct DefaultCharge {
  double penalty = 0.0;
  int theta = 0;
};

// Throws std::invalid_argument when buyer and seller default totals differ.
FrameLedger auctioneer_utility(std::span<const DefaultCharge> buyers, std::span<const DefaultCharge> sellers);

// Expectation of the realized buyer utility over the usage pmf.
double buyer_expected_utility(const TradeTerms& terms, const UsagePmf& usage, const EdgeServerProfile& profile,
                              double hours, double lambda);

// Worst-case (every buyer defaults) expected seller utility. Per outcome it
// never exceeds the realized utility as long as the seller price covers
// q^S plus the marginal active-energy cost lambda*hours*(eta_use - eta_idle).
double seller_expected_utility_bound(const TradeTerms& terms, const UsagePmf& usage,
                                     const EdgeServerProfile& profile, double hours, double lambda);

struct BreachRisk {
  double probability = 0.0;
  bool within_threshold = true;  // probability < xi
};

BreachRisk buyer_breach_risk(const TradeTerms& terms, const UsagePmf& usage, const EdgeServerProfile& profile,
                             double hours, double lambda, double xi);

}  // namespace latrade
