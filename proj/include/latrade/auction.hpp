#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "latrade/forecast.hpp"
#include "latrade/scenario.hpp"
#include "latrade/valuation.hpp"

namespace latrade {

struct BuyerQuote {
  int es_id = 0;
  Position position;
  double bid_prime = 0.0;  // reported valuation bid'
  double omega = 1.0;
  int deficit = 0;
};

struct SellerQuote {
  int es_id = 0;
  Position position;
  double ask = 0.0;
  double penalty = 0.0;  // q^S
  int surplus = 0;
};

struct BidMatrix {
  std::size_t buyers = 0;
  std::size_t sellers = 0;
  std::vector<double> bid_prime;  // per buyer
  std::vector<double> bids;       // [buyer * sellers + seller]
  std::vector<double> distance;   // same layout, meters

  double bid(std::size_t i, std::size_t j) const { return bids[i * sellers + j]; }
  double dist(std::size_t i, std::size_t j) const { return distance[i * sellers + j]; }
  // Transmission cost deduction c = bid' - bid.
  double cost(std::size_t i, std::size_t j) const { return bid_prime[i] - bid(i, j); }
};

// bid' (1 - exp(-alpha / (omega d))); d = 0 gives bid'.
double decayed_bid(double bid_prime, double alpha, double omega, double distance_m);

BidMatrix compute_bid_matrix(std::span<const BuyerQuote> buyers, std::span<const SellerQuote> sellers,
                             double alpha);

struct MatchRecord {
  int seller_id = 0;
  int buyer_id = 0;
  std::size_t seller_index = 0;
  std::size_t buyer_index = 0;
  int quantity = 0;
  double transmission_cost = 0.0;
  double bid = 0.0;  // winning effective bid
  double ask = 0.0;
  std::vector<double> losing_bids;  // Nbid, in buyer order
};

enum class MatchPolicy {
  HighestBid,    // greedy max-bid rule
  NearestBuyer,  // closest eligible buyer
};

std::vector<MatchRecord> match_frame(std::span<const BuyerQuote> buyers, std::span<const SellerQuote> sellers,
                                     const BidMatrix& bids, MatchPolicy policy = MatchPolicy::HighestBid);

struct LAContract {
  int seller_id = 0;
  int buyer_id = 0;
  int quantity = 0;
  double transmission_cost = 0.0;
  double pair_price = 0.0;
  double buyer_price = 0.0;
  double seller_price = 0.0;
  double buyer_penalty = 0.0;
  double seller_penalty = 0.0;
  double ask = 0.0;  // audit copies of the quotes the price was bracketed by
  double bid = 0.0;
};

enum class PricingRule {
  LosingBidAverage,  // mean of Nbid, the seller's ask when empty
  Midpoint,          // (bid + ask) / 2
};

std::vector<LAContract> settle_terms(std::span<const MatchRecord> matches, std::span<const BuyerQuote> buyers,
                                     std::span<const SellerQuote> sellers,
                                     PricingRule rule = PricingRule::LosingBidAverage);

// Full buyers x sellers table; unmatched slots carry ids and zero terms.
std::vector<LAContract> dense_contracts(std::span<const LAContract> contracts, std::span<const BuyerQuote> buyers,
                                        std::span<const SellerQuote> sellers);

TradeTerms buyer_terms(std::span<const LAContract> contracts, int buyer_id);
TradeTerms seller_terms(std::span<const LAContract> contracts, int seller_id);

struct FrameMarket {
  std::vector<BuyerQuote> buyers;
  std::vector<SellerQuote> sellers;
};

// Quotes from one frame of roles, using each server's true valuation.
FrameMarket build_market(std::span<const EdgeServerProfile> servers, std::span<const RoleEntry> roles);

struct ContractSet {
  std::size_t frame = 0;
  std::vector<RoleEntry> roles;
  std::vector<LAContract> contracts;
  double expected_welfare = 0.0;
};

struct AuctionOptions {
  MatchPolicy policy = MatchPolicy::HighestBid;
  PricingRule pricing = PricingRule::LosingBidAverage;
};

// Match and price one frame.
std::vector<LAContract> auction_frame(const FrameMarket& market, double alpha, const AuctionOptions& options = {});

// Expected welfare of a frame: buyers' expected utility plus sellers' bounds.
double expected_frame_welfare(std::span<const EdgeServerProfile> servers, std::span<const RoleEntry> roles,
                              std::span<const LAContract> contracts, std::span<const UsagePmf> pmfs, double hours,
                              double lambda);

std::vector<ContractSet> run_preauction(const Scenario& scenario, std::span<const UsageForecast> forecasts,
                                        const RoleAssignment& roles, const AuctionOptions& options = {});

}  // namespace latrade
