#include "latrade/auction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace latrade {

double decayed_bid(double bid_prime, double alpha, double omega, double d) {
  if (d <= 0.0) return bid_prime;
  if (std::isinf(d)) return 0.0;
  return bid_prime * -std::expm1(-alpha / (omega * d));
}

BidMatrix compute_bid_matrix(std::span<const BuyerQuote> buyers, std::span<const SellerQuote> sellers, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("bid matrix: alpha must be positive");
  BidMatrix m;
  m.buyers = buyers.size();
  m.sellers = sellers.size();
  m.bids.resize(m.buyers * m.sellers);
  m.distance.resize(m.buyers * m.sellers);
  for (std::size_t i = 0; i < buyers.size(); ++i) {
    const auto& b = buyers[i];
    if (!(b.omega > 0.0)) throw std::invalid_argument("bid matrix: omega must be positive");
    if (!(b.bid_prime >= 0.0)) throw std::invalid_argument("bid matrix: bid' must be non-negative");
    m.bid_prime.push_back(b.bid_prime);
    for (std::size_t j = 0; j < sellers.size(); ++j) {
      const double d = distance_m(b.position, sellers[j].position);
      m.distance[i * m.sellers + j] = d;
      m.bids[i * m.sellers + j] = decayed_bid(b.bid_prime, alpha, b.omega, d);
    }
  }
  return m;
}

std::vector<MatchRecord> match_frame(std::span<const BuyerQuote> buyers, std::span<const SellerQuote> sellers,
                                     const BidMatrix& bids, MatchPolicy policy) {
  if (bids.buyers != buyers.size() || bids.sellers != sellers.size())
    throw std::invalid_argument("match_frame: bid matrix does not fit the quotes");
  std::vector<int> deficit;
  for (const auto& b : buyers) {
    if (b.deficit < 0) throw std::invalid_argument("match_frame: negative deficit");
    deficit.push_back(b.deficit);
  }
  std::vector<std::size_t> order(sellers.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (sellers[a].ask != sellers[b].ask) return sellers[a].ask < sellers[b].ask;
    return sellers[a].es_id < sellers[b].es_id;
  });

  std::vector<MatchRecord> out;
  for (std::size_t j : order) {
    const SellerQuote& s = sellers[j];
    if (s.surplus < 0) throw std::invalid_argument("match_frame: negative surplus");
    int supply = s.surplus;
    while (supply > 0) {
      std::size_t win = buyers.size();
      for (std::size_t i = 0; i < buyers.size(); ++i) {
        if (deficit[i] <= 0 || !(bids.bid(i, j) > s.ask)) continue;
        if (win == buyers.size()) {
          win = i;
          continue;
        }
        bool better = false;
        if (policy == MatchPolicy::HighestBid) {
          better = bids.bid(i, j) > bids.bid(win, j) ||
                   (bids.bid(i, j) == bids.bid(win, j) && buyers[i].es_id < buyers[win].es_id);
        } else {
          better = bids.dist(i, j) < bids.dist(win, j) ||
                   (bids.dist(i, j) == bids.dist(win, j) && buyers[i].es_id < buyers[win].es_id);
        }
        if (better) win = i;
      }
      if (win == buyers.size()) break;

      MatchRecord r;
      r.seller_id = s.es_id;
      r.buyer_id = buyers[win].es_id;
      r.seller_index = j;
      r.buyer_index = win;
      r.bid = bids.bid(win, j);
      r.ask = s.ask;
      r.transmission_cost = bids.cost(win, j);
      for (std::size_t i = 0; i < buyers.size(); ++i) {
        if (i == win || deficit[i] <= 0) continue;
        const double b = bids.bid(i, j);
        if (b > s.ask && b < r.bid) r.losing_bids.push_back(b);
      }
      r.quantity = std::min(deficit[win], supply);
      deficit[win] -= r.quantity;
      supply -= r.quantity;
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<LAContract> settle_terms(std::span<const MatchRecord> matches, std::span<const BuyerQuote> buyers,
                                     std::span<const SellerQuote> sellers, PricingRule rule) {
  std::vector<double> pair_price;
  for (const auto& m : matches) {
    if (m.buyer_index >= buyers.size() || m.seller_index >= sellers.size())
      throw std::invalid_argument("settle_terms: match refers to an unknown participant");
    double p = m.ask;
    if (rule == PricingRule::Midpoint) {
      p = 0.5 * (m.bid + m.ask);
    } else if (!m.losing_bids.empty()) {
      double sum = 0.0;
      for (double b : m.losing_bids) sum += b;
      p = sum / static_cast<double>(m.losing_bids.size());
    }
    pair_price.push_back(p);
  }

  std::vector<double> seller_revenue(sellers.size(), 0.0), buyer_cost(buyers.size(), 0.0);
  std::vector<int> seller_traded(sellers.size(), 0), buyer_traded(buyers.size(), 0);
  std::vector<double> buyer_penalty(buyers.size(), 0.0);
  for (std::size_t k = 0; k < matches.size(); ++k) {
    const auto& m = matches[k];
    seller_revenue[m.seller_index] += pair_price[k] * m.quantity;
    seller_traded[m.seller_index] += m.quantity;
    buyer_cost[m.buyer_index] += (pair_price[k] + m.transmission_cost) * m.quantity;
    buyer_traded[m.buyer_index] += m.quantity;
    buyer_penalty[m.buyer_index] = std::max(buyer_penalty[m.buyer_index], sellers[m.seller_index].penalty);
  }

  std::vector<LAContract> out;
  for (std::size_t k = 0; k < matches.size(); ++k) {
    const auto& m = matches[k];
    LAContract c;
    c.seller_id = m.seller_id;
    c.buyer_id = m.buyer_id;
    c.quantity = m.quantity;
    c.transmission_cost = m.transmission_cost;
    c.pair_price = pair_price[k];
    c.seller_price = seller_traded[m.seller_index] > 0 ? seller_revenue[m.seller_index] / seller_traded[m.seller_index] : 0.0;
    c.buyer_price = buyer_traded[m.buyer_index] > 0 ? buyer_cost[m.buyer_index] / buyer_traded[m.buyer_index] : 0.0;
    c.buyer_penalty = buyer_penalty[m.buyer_index];
    c.seller_penalty = sellers[m.seller_index].penalty;
    c.ask = m.ask;
    c.bid = m.bid;
    out.push_back(c);
  }
  return out;
}

std::vector<LAContract> dense_contracts(std::span<const LAContract> contracts, std::span<const BuyerQuote> buyers,
                                        std::span<const SellerQuote> sellers) {
  std::vector<LAContract> out(buyers.size() * sellers.size());
  for (std::size_t i = 0; i < buyers.size(); ++i)
    for (std::size_t j = 0; j < sellers.size(); ++j) {
      out[i * sellers.size() + j].buyer_id = buyers[i].es_id;
      out[i * sellers.size() + j].seller_id = sellers[j].es_id;
    }
  for (const auto& c : contracts) {
    std::size_t i = 0, j = 0;
    while (i < buyers.size() && buyers[i].es_id != c.buyer_id) ++i;
    while (j < sellers.size() && sellers[j].es_id != c.seller_id) ++j;
    if (i == buyers.size() || j == sellers.size())
      throw std::invalid_argument("dense_contracts: contract refers to an unknown participant");
    out[i * sellers.size() + j] = c;
  }
  return out;
}

TradeTerms buyer_terms(std::span<const LAContract> contracts, int buyer_id) {
  TradeTerms t;
  for (const auto& c : contracts) {
    if (c.buyer_id != buyer_id) continue;
    t.price = c.buyer_price;
    t.penalty = c.buyer_penalty;
    t.traded += c.quantity;
  }
  return t;
}

TradeTerms seller_terms(std::span<const LAContract> contracts, int seller_id) {
  TradeTerms t;
  for (const auto& c : contracts) {
    if (c.seller_id != seller_id) continue;
    t.price = c.seller_price;
    t.penalty = c.seller_penalty;
    t.traded += c.quantity;
  }
  return t;
}

FrameMarket build_market(std::span<const EdgeServerProfile> servers, std::span<const RoleEntry> roles) {
  if (servers.size() != roles.size()) throw std::invalid_argument("build_market: one role per server required");
  FrameMarket m;
  for (std::size_t k = 0; k < servers.size(); ++k) {
    const auto& p = servers[k];
    if (roles[k].es_id != p.id) throw std::invalid_argument("build_market: role order does not follow server order");
    if (roles[k].role == Role::Buyer && roles[k].quantity > 0)
      m.buyers.push_back({p.id, p.position, p.internal_revenue, p.omega, roles[k].quantity});
    else if (roles[k].role == Role::Seller && roles[k].quantity > 0)
      m.sellers.push_back({p.id, p.position, p.true_ask, p.seller_penalty, roles[k].quantity});
  }
  return m;
}

std::vector<LAContract> auction_frame(const FrameMarket& market, double alpha, const AuctionOptions& options) {
  if (market.buyers.empty() || market.sellers.empty()) return {};
  const BidMatrix bids = compute_bid_matrix(market.buyers, market.sellers, alpha);
  const auto matches = match_frame(market.buyers, market.sellers, bids, options.policy);
  return settle_terms(matches, market.buyers, market.sellers, options.pricing);
}

double expected_frame_welfare(std::span<const EdgeServerProfile> servers, std::span<const RoleEntry> roles,
                              std::span<const LAContract> contracts, std::span<const UsagePmf> pmfs, double hours,
                              double lambda) {
  if (servers.size() != roles.size() || servers.size() != pmfs.size())
    throw std::invalid_argument("expected_frame_welfare: inputs do not line up");
  double total = 0.0;
  for (std::size_t k = 0; k < servers.size(); ++k) {
    if (roles[k].role == Role::Buyer)
      total += buyer_expected_utility(buyer_terms(contracts, servers[k].id), pmfs[k], servers[k], hours, lambda);
    else if (roles[k].role == Role::Seller)
      total += seller_expected_utility_bound(seller_terms(contracts, servers[k].id), pmfs[k], servers[k], hours, lambda);
  }
  return total;
}

std::vector<ContractSet> run_preauction(const Scenario& sc, std::span<const UsageForecast> forecasts,
                                        const RoleAssignment& roles, const AuctionOptions& options) {
  if (forecasts.size() != sc.servers.size()) throw std::invalid_argument("run_preauction: one forecast per server required");
  const std::size_t frames = roles.frames.size();
  for (const auto& f : forecasts)
    if (f.pmf.size() < frames || f.point.size() < frames)
      throw std::invalid_argument("run_preauction: forecast for server " + std::to_string(f.es_id) +
                                  " does not cover every frame");
  std::vector<ContractSet> out;
  std::vector<UsagePmf> pmfs(sc.servers.size());
  for (std::size_t n = 0; n < frames; ++n) {
    ContractSet cs;
    cs.frame = n;
    cs.roles = roles.frames[n];
    cs.contracts = auction_frame(build_market(sc.servers, cs.roles), sc.alpha, options);
    for (std::size_t k = 0; k < forecasts.size(); ++k) pmfs[k] = forecasts[k].pmf[n];
    cs.expected_welfare = expected_frame_welfare(sc.servers, cs.roles, cs.contracts, pmfs, sc.frame_hours, sc.lambda);
    out.push_back(std::move(cs));
  }
  return out;
}

}  // namespace latrade
