#include "latrade/strategies.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "latrade/rng.hpp"

namespace latrade {

std::string_view strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::LATrade:
      return "LATrade";
    case StrategyKind::ConAuction:
      return "ConAuction";
    case StrategyKind::DistaTrade:
      return "DistaTrade";
    case StrategyKind::RanTrade:
      return "RanTrade";
    case StrategyKind::NoTrade:
      break;
  }
  return "NoTrade";
}

StrategyKind parse_strategy(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  for (StrategyKind k : kAllStrategies) {
    std::string candidate;
    for (char c : strategy_name(k)) candidate.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (candidate == lower) return k;
  }
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

namespace {

void finalize(RunResult& r, const Scenario& sc) {
  const WelfareSeries w = social_welfare(r.executions);
  r.frame_welfare = w.per_frame;
  r.cumulative_welfare = w.cumulative;
  r.es_utility.assign(sc.servers.size(), 0.0);
  for (const auto& ex : r.executions)
    for (std::size_t k = 0; k < ex.outcomes.size(); ++k) r.es_utility[k] += ex.outcomes[k].utility.total;
  const Utilization u = utilization_metrics(r.executions, sc.servers);
  r.resource_utilization = u.resource;
  r.energy_utilization = u.energy;
  r.frame_utilization.clear();
  for (const auto& ex : r.executions)
    r.frame_utilization.push_back(utilization_metrics(std::span<const FrameExecution>(&ex, 1), sc.servers));
  r.frame_latency_ms.clear();
  for (const auto& ex : r.executions) r.frame_latency_ms.push_back(ex.latency_ms);
  r.latency = latency_stats(r.frame_latency_ms);
}

std::vector<RoleEntry> realized_roles(const Scenario& sc, std::span<const int> realized) {
  std::vector<RoleEntry> roles;
  roles.reserve(sc.servers.size());
  for (std::size_t k = 0; k < sc.servers.size(); ++k)
    roles.push_back(role_for(sc.servers[k].id, realized[k], sc.servers[k].inherent_rb));
  return roles;
}

// Stage 1 then stage 2 of a prediction-based strategy.
RunResult run_two_stage(const Scenario& sc, const Prediction& pred, const AuctionOptions& auction, StrategyKind kind) {
  sc.validate();
  RunResult r;
  r.strategy = std::string(strategy_name(kind));
  r.seed = sc.rng_seed;
  LatencyProbe stage1;
  const RoleAssignment roles = determine_roles(pred.forecasts, sc.servers);
  if (roles.frames.size() < sc.horizon) throw std::invalid_argument("forecasts shorter than the horizon");
  RoleAssignment horizon_roles;
  horizon_roles.frames.assign(roles.frames.begin(), roles.frames.begin() + static_cast<std::ptrdiff_t>(sc.horizon));
  r.contracts = run_preauction(sc, pred.forecasts, horizon_roles, auction);
  r.stage1_ms = pred.elapsed_ms + stage1.stop_ms();
  r.forecasts = pred.forecasts;

  for (std::size_t n = 0; n < sc.horizon; ++n) {
    const std::vector<int> realized = sc.realized(n);
    LatencyProbe probe;
    const ContractSet& set = r.contracts[n];
    FrameExecution ex = execute_frame(set, realized, sc.servers, sc.frame_hours, sc.lambda);
    ex.latency_ms = probe.stop_ms();
    r.executions.push_back(std::move(ex));
  }
  finalize(r, sc);
  return r;
}

}  // namespace

Prediction predict(const Scenario& sc, const StrategyOptions& options) {
  sc.validate();
  LatencyProbe probe;
  Prediction p;
  if (options.forecaster) {
    p.forecasts = forecast_all(sc, *options.forecaster);
  } else {
    const LstmForecaster lstm;
    p.forecasts = forecast_all(sc, lstm);
  }
  p.elapsed_ms = probe.stop_ms();
  return p;
}

RunResult run_latrade(const Scenario& sc, const StrategyOptions& options) {
  return run_latrade(sc, predict(sc, options));
}

RunResult run_latrade(const Scenario& sc, const Prediction& prediction) {
  return run_two_stage(sc, prediction, {MatchPolicy::HighestBid, PricingRule::LosingBidAverage}, StrategyKind::LATrade);
}

RunResult run_distatrade(const Scenario& sc, const StrategyOptions& options) {
  return run_distatrade(sc, predict(sc, options), options.distatrade_pricing);
}

RunResult run_distatrade(const Scenario& sc, const Prediction& prediction, PricingRule pricing) {
  return run_two_stage(sc, prediction, {MatchPolicy::NearestBuyer, pricing}, StrategyKind::DistaTrade);
}

RunResult run_conauction(const Scenario& sc) {
  sc.validate();
  RunResult r;
  r.strategy = std::string(strategy_name(StrategyKind::ConAuction));
  r.seed = sc.rng_seed;
  for (std::size_t n = 0; n < sc.horizon; ++n) {
    const std::vector<int> realized = sc.realized(n);
    LatencyProbe probe;
    ContractSet set;
    set.frame = n;
    set.roles = realized_roles(sc, realized);
    set.contracts = auction_frame(build_market(sc.servers, set.roles), sc.alpha);
    FrameExecution ex = execute_frame(set, realized, sc.servers, sc.frame_hours, sc.lambda);
    ex.latency_ms = probe.stop_ms();
    r.contracts.push_back(std::move(set));
    r.executions.push_back(std::move(ex));
  }
  finalize(r, sc);
  return r;
}

std::vector<MatchRecord> match_random(std::span<const BuyerQuote> buyers, std::span<const SellerQuote> sellers,
                                      const BidMatrix& bids, Rng& rng) {
  if (bids.buyers != buyers.size() || bids.sellers != sellers.size())
    throw std::invalid_argument("match_random: bid matrix does not fit the quotes");
  std::vector<int> deficit, supply;
  for (const auto& b : buyers) deficit.push_back(b.deficit);
  for (const auto& s : sellers) supply.push_back(s.surplus);
  std::vector<std::pair<std::size_t, std::size_t>> eligible;
  std::vector<MatchRecord> out;
  while (true) {
    eligible.clear();
    for (std::size_t i = 0; i < buyers.size(); ++i) {
      if (deficit[i] <= 0) continue;
      for (std::size_t j = 0; j < sellers.size(); ++j)
        if (supply[j] > 0 && bids.bid(i, j) > sellers[j].ask) eligible.emplace_back(i, j);
    }
    if (eligible.empty()) break;
    const auto [i, j] = eligible.size() == 1 ? eligible.front() : eligible[rng.index(eligible.size())];
    MatchRecord m;
    m.seller_id = sellers[j].es_id;
    m.buyer_id = buyers[i].es_id;
    m.seller_index = j;
    m.buyer_index = i;
    m.bid = bids.bid(i, j);
    m.ask = sellers[j].ask;
    m.transmission_cost = bids.cost(i, j);
    m.quantity = std::min(deficit[i], supply[j]);
    deficit[i] -= m.quantity;
    supply[j] -= m.quantity;
    out.push_back(std::move(m));
  }
  return out;
}

RunResult run_rantrade(const Scenario& sc, const StrategyOptions& options) {
  sc.validate();
  RunResult r;
  r.strategy = std::string(strategy_name(StrategyKind::RanTrade));
  r.seed = sc.rng_seed;
  Rng rng(derive_seed(sc.rng_seed, "rantrade"));
  for (std::size_t n = 0; n < sc.horizon; ++n) {
    const std::vector<int> realized = sc.realized(n);
    LatencyProbe probe;
    ContractSet set;
    set.frame = n;
    set.roles = realized_roles(sc, realized);
    const FrameMarket market = build_market(sc.servers, set.roles);
    if (!market.buyers.empty() && !market.sellers.empty()) {
      const BidMatrix bids = compute_bid_matrix(market.buyers, market.sellers, sc.alpha);
      const auto matches = match_random(market.buyers, market.sellers, bids, rng);
      set.contracts = settle_terms(matches, market.buyers, market.sellers, options.rantrade_pricing);
    }
    FrameExecution ex = execute_frame(set, realized, sc.servers, sc.frame_hours, sc.lambda);
    ex.latency_ms = probe.stop_ms();
    r.contracts.push_back(std::move(set));
    r.executions.push_back(std::move(ex));
  }
  finalize(r, sc);
  return r;
}

RunResult run_notrade(const Scenario& sc) {
  sc.validate();
  RunResult r;
  r.strategy = std::string(strategy_name(StrategyKind::NoTrade));
  r.seed = sc.rng_seed;
  for (std::size_t n = 0; n < sc.horizon; ++n) {
    ContractSet set;
    set.frame = n;
    FrameExecution ex = execute_frame(set, sc.realized(n), sc.servers, sc.frame_hours, sc.lambda);
    ex.latency_ms = 0.0;
    r.contracts.push_back(std::move(set));
    r.executions.push_back(std::move(ex));
  }
  finalize(r, sc);
  return r;
}

RunResult run_strategy(StrategyKind kind, const Scenario& sc, const StrategyOptions& options) {
  switch (kind) {
    case StrategyKind::LATrade:
      return run_latrade(sc, options);
    case StrategyKind::ConAuction:
      return run_conauction(sc);
    case StrategyKind::DistaTrade:
      return run_distatrade(sc, options);
    case StrategyKind::RanTrade:
      return run_rantrade(sc, options);
    case StrategyKind::NoTrade:
      break;
  }
  return run_notrade(sc);
}

std::vector<RunResult> run_all(const Scenario& sc, const StrategyOptions& options) {
  const Prediction pred = predict(sc, options);
  std::vector<RunResult> out;
  out.push_back(run_latrade(sc, pred));
  out.push_back(run_conauction(sc));
  out.push_back(run_distatrade(sc, pred, options.distatrade_pricing));
  out.push_back(run_rantrade(sc, options));
  out.push_back(run_notrade(sc));
  return out;
}

}  // namespace latrade
