#include "latrade/properties.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "latrade/forecast.hpp"
#include "latrade/parallel.hpp"
#include "latrade/rng.hpp"
#include "latrade/valuation.hpp"

namespace latrade {

void PropertyReport::record(double margin, bool violated, std::uint64_t seed, const std::string& detail) {
  ++trials;
  worst_margin = std::min(worst_margin, margin);
  if (!violated) return;
  ++violations;
  repro_seeds.push_back(seed);
  details.push_back(detail);
}

namespace {

template <typename... Args>
std::string fmt(const char* pattern, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

// Merges per-trial reports in trial order.
void merge(PropertyReport& into, const PropertyReport& part) {
  into.trials += part.trials;
  into.violations += part.violations;
  into.worst_margin = std::min(into.worst_margin, part.worst_margin);
  into.repro_seeds.insert(into.repro_seeds.end(), part.repro_seeds.begin(), part.repro_seeds.end());
  into.details.insert(into.details.end(), part.details.begin(), part.details.end());
}

double expected_no_trade(const UsagePmf& pmf, const EdgeServerProfile& p, double hours, double lambda) {
  double e = 0.0;
  const auto mass = pmf.mass();
  for (std::size_t k = 0; k < mass.size(); ++k) {
    if (mass[k] == 0.0) continue;
    e += mass[k] * no_trade_utility(pmf.lowest() + static_cast<int>(k), p, hours, lambda).total;
  }
  return e;
}

}  // namespace

void check_price_bracket(std::span<const LAContract> contracts, std::uint64_t seed, PropertyReport& report) {
  for (const auto& c : contracts) {
    if (c.quantity <= 0) continue;
    const double margin = std::min(c.pair_price - c.ask, c.bid - c.pair_price);
    report.record(margin, c.pair_price < c.ask || c.pair_price > c.bid, seed,
                  fmt("buyer %d seller %d: ask %.9g price %.9g bid %.9g", c.buyer_id, c.seller_id, c.ask,
                      c.pair_price, c.bid));
  }
}

IndividualRationality check_individual_rationality(const RunResult& run, const Scenario& sc) {
  IndividualRationality ir;
  ir.price_bracket.name = "price_bracket";
  ir.seller_bound.name = "seller_bound_vs_notrade";
  ir.seller_bound.hard = false;
  ir.negative_buyer_utility.name = "negative_buyer_utility";
  ir.negative_buyer_utility.hard = false;
  ir.cumulative_vs_notrade.name = "cumulative_vs_notrade";
  ir.cumulative_vs_notrade.hard = false;

  if (run.executions.size() != run.contracts.size())
    throw std::invalid_argument("individual rationality: contracts and executions differ in length");

  std::vector<double> notrade(sc.servers.size(), 0.0);
  for (std::size_t n = 0; n < run.executions.size(); ++n) {
    const ContractSet& set = run.contracts[n];
    const FrameExecution& ex = run.executions[n];
    if (ex.outcomes.size() != sc.servers.size())
      throw std::invalid_argument("individual rationality: execution does not cover every server");
    check_price_bracket(set.contracts, run.seed, ir.price_bracket);

    for (std::size_t k = 0; k < sc.servers.size(); ++k) {
      const EdgeServerProfile& p = sc.servers[k];
      const EsOutcome& o = ex.outcomes[k];
      notrade[k] += no_trade_utility(o.r_act, p, sc.frame_hours, sc.lambda).total;
      if (o.r_tra == 0) continue;
      if (o.role == Role::Buyer) {
        ir.negative_buyer_utility.record(o.utility.total, o.utility.total < -kUtilityEpsilon, run.seed,
                                         fmt("frame %zu buyer %d utility %.6f", n, p.id, o.utility.total));
      } else if (o.role == Role::Seller) {
        // Forecast pmf when the run has one, otherwise the realized demand.
        UsagePmf pmf = UsagePmf::point(o.r_act);
        if (k < run.forecasts.size() && n < run.forecasts[k].pmf.size()) pmf = run.forecasts[k].pmf[n];
        const TradeTerms terms = seller_terms(set.contracts, p.id);
        const double bound = seller_expected_utility_bound(terms, pmf, p, sc.frame_hours, sc.lambda);
        const double base = expected_no_trade(pmf, p, sc.frame_hours, sc.lambda);
        ir.seller_bound.record(bound - base, bound < base - kUtilityEpsilon, run.seed,
                               fmt("frame %zu seller %d bound %.6f notrade %.6f", n, p.id, bound, base));
      }
    }
  }
  if (!run.es_utility.empty()) {
    if (run.es_utility.size() != sc.servers.size())
      throw std::invalid_argument("individual rationality: per-server utilities do not match the scenario");
    for (std::size_t k = 0; k < sc.servers.size(); ++k) {
      const double margin = run.es_utility[k] - notrade[k];
      ir.cumulative_vs_notrade.record(margin, margin < -kUtilityEpsilon, run.seed,
                                      fmt("server %d cumulative %.6f notrade %.6f", sc.servers[k].id,
                                          run.es_utility[k], notrade[k]));
    }
  }
  return ir;
}

void check_budget_balance(const FrameExecution& ex, std::uint64_t seed, PropertyReport& report) {
  bool defaulted = false;
  for (const auto& a : ex.apportionments) defaulted = defaulted || a.total > 0;
  const double net = ex.ledger.net;
  if (defaulted) {
    report.record(net, net < -kUtilityEpsilon, seed, fmt("frame %zu: net %.9g with defaults", ex.frame, net));
  } else {
    report.record(-std::abs(net), net != 0.0, seed, fmt("frame %zu: net %.9g without defaults", ex.frame, net));
  }
}

PropertyReport check_budget_balance(const RunResult& run) {
  PropertyReport r;
  r.name = "budget_balance";
  for (const auto& ex : run.executions) check_budget_balance(ex, run.seed, r);
  return r;
}

MarketInstance random_market_instance(std::uint64_t seed, std::size_t n_servers) {
  SyntheticOptions opts;
  opts.history_frames = 0;
  opts.horizon = 1;
  const Scenario sc = generate_synthetic(n_servers, seed, opts);
  MarketInstance m;
  m.servers = sc.servers;
  m.alpha = sc.alpha;
  m.hours = sc.frame_hours;
  m.lambda = sc.lambda;
  Rng rng(derive_seed(seed, "market-instance"));
  for (const auto& p : m.servers) {
    const int est = std::max(0, p.inherent_rb + static_cast<int>(std::lround(rng.uniform(-0.4, 0.4) * p.inherent_rb)));
    m.estimates.push_back(est);
    m.pmfs.push_back(discretized_normal(est, rng.uniform(2.0, 8.0)));
  }
  return m;
}

namespace {

struct TrialOutcome {
  PropertyReport buyers;
  PropertyReport sellers;
};

TrialOutcome run_trial(const InstanceGenerator& generator, std::size_t trial, std::uint64_t trial_seed,
                       const TruthfulnessOptions& opt) {
  TrialOutcome out;
  const MarketInstance inst = generator(trial_seed);
  if (inst.estimates.size() != inst.servers.size() || inst.pmfs.size() != inst.servers.size())
    throw std::invalid_argument("truthfulness: instance arrays do not line up");
  std::vector<RoleEntry> roles;
  for (std::size_t k = 0; k < inst.servers.size(); ++k)
    roles.push_back(role_for(inst.servers[k].id, inst.estimates[k], inst.servers[k].inherent_rb));
  const FrameMarket truthful = build_market(inst.servers, roles);
  const auto base = auction_frame(truthful, inst.alpha);

  Rng rng(derive_seed(trial_seed, "misreport"));
  // Even trials overstate, odd trials understate.
  const bool over = trial % 2 == 0;
  const auto draw_factor = [&] {
    return over ? rng.uniform(std::max(1.0, opt.misreport.lo), std::max(1.0, opt.misreport.hi))
                : rng.uniform(std::min(1.0, opt.misreport.lo), std::min(1.0, opt.misreport.hi));
  };
  const auto profile_of = [&](int id) -> const EdgeServerProfile& {
    for (const auto& p : inst.servers)
      if (p.id == id) return p;
    throw std::invalid_argument("truthfulness: unknown server");
  };
  const auto pmf_of = [&](int id) -> const UsagePmf& {
    for (std::size_t k = 0; k < inst.servers.size(); ++k)
      if (inst.servers[k].id == id) return inst.pmfs[k];
    throw std::invalid_argument("truthfulness: unknown server");
  };

  if (!truthful.buyers.empty()) {
    const std::size_t i = rng.index(truthful.buyers.size());
    const double factor = draw_factor();
    FrameMarket lie = truthful;
    lie.buyers[i].bid_prime *= factor;
    const auto contracts = auction_frame(lie, inst.alpha);
    const int id = truthful.buyers[i].es_id;
    const EdgeServerProfile& p = profile_of(id);
    const double honest = buyer_expected_utility(buyer_terms(base, id), pmf_of(id), p, inst.hours, inst.lambda);
    const double misreport =
        buyer_expected_utility(buyer_terms(contracts, id), pmf_of(id), p, inst.hours, inst.lambda);
    out.buyers.record(honest - misreport, misreport > honest + opt.epsilon, trial_seed,
                      fmt("trial %zu buyer %d factor %.4f honest %.9g misreport %.9g", trial, id, factor, honest,
                          misreport));
  }
  if (!truthful.sellers.empty()) {
    const std::size_t j = rng.index(truthful.sellers.size());
    const double factor = draw_factor();
    FrameMarket lie = truthful;
    lie.sellers[j].ask *= factor;
    const auto contracts = auction_frame(lie, inst.alpha);
    const int id = truthful.sellers[j].es_id;
    const EdgeServerProfile& p = profile_of(id);
    const double honest =
        seller_expected_utility_bound(seller_terms(base, id), pmf_of(id), p, inst.hours, inst.lambda);
    const double misreport =
        seller_expected_utility_bound(seller_terms(contracts, id), pmf_of(id), p, inst.hours, inst.lambda);
    out.sellers.record(honest - misreport, misreport > honest + opt.epsilon, trial_seed,
                       fmt("trial %zu seller %d factor %.4f honest %.9g misreport %.9g", trial, id, factor, honest,
                           misreport));
  }
  return out;
}

}  // namespace

TruthfulnessReport truthfulness_perturbation(const InstanceGenerator& generator, std::size_t trials,
                                             std::uint64_t rng_seed, const TruthfulnessOptions& options) {
  if (trials == 0) throw std::invalid_argument("truthfulness: trials must be at least 1");
  if (!generator) throw std::invalid_argument("truthfulness: missing instance generator");
  if (!(options.misreport.lo > 0.0) || !(options.misreport.lo <= 1.0) || !(options.misreport.hi >= 1.0))
    throw std::invalid_argument("truthfulness: misreport range must bracket 1");
  std::vector<TrialOutcome> per_trial(trials);
  parallel_for(trials, [&](std::size_t t) {
    per_trial[t] = run_trial(generator, t, derive_seed(rng_seed, "truthfulness", t), options);
  });
  TruthfulnessReport r;
  r.buyers.name = "buyer_truthfulness";
  r.sellers.name = "seller_truthfulness";
  r.sellers.hard = false;
  for (const auto& t : per_trial) {
    merge(r.buyers, t.buyers);
    merge(r.sellers, t.sellers);
  }
  return r;
}

}  // namespace latrade
