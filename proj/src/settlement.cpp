#include "latrade/settlement.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace latrade {

DefaultApportionment apportion_defaults(int theta, std::span<const LAContract> contracts) {
  DefaultApportionment out;
  long long traded = 0;
  for (const auto& c : contracts) {
    if (c.quantity < 0) throw std::invalid_argument("apportion_defaults: negative contract quantity");
    if (!contracts.empty() && c.buyer_id != contracts.front().buyer_id)
      throw std::invalid_argument("apportion_defaults: contracts of different buyers");
    traded += c.quantity;
  }
  if (!contracts.empty()) out.buyer_id = contracts.front().buyer_id;
  if (theta < 0) throw std::invalid_argument("apportion_defaults: negative default");
  if (theta > traded)
    throw std::invalid_argument("apportion_defaults: default " + std::to_string(theta) + " exceeds traded " +
                                std::to_string(traded));
  out.total = theta;
  for (const auto& c : contracts) out.per_seller.push_back({c.seller_id, 0});
  if (theta == 0) return out;

  std::vector<long long> remainder(contracts.size());
  long long assigned = 0;
  for (std::size_t k = 0; k < contracts.size(); ++k) {
    const long long num = static_cast<long long>(theta) * contracts[k].quantity;
    out.per_seller[k].defaulted = static_cast<int>(num / traded);
    remainder[k] = num % traded;
    assigned += out.per_seller[k].defaulted;
  }
  std::vector<std::size_t> order(contracts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return contracts[a].seller_id < contracts[b].seller_id;
  });
  for (std::size_t k = 0; assigned < theta; ++k) {
    ++out.per_seller[order[k]].defaulted;
    ++assigned;
    out.notes.push_back("seller " + std::to_string(contracts[order[k]].seller_id) + " +1 by remainder " +
                        std::to_string(remainder[order[k]]) + "/" + std::to_string(traded));
  }
  return out;
}

double FrameExecution::welfare() const {
  double w = 0.0;
  for (const auto& o : outcomes) w += o.utility.total;
  return w;
}

FrameExecution execute_frame(const ContractSet& set, std::span<const int> realized,
                             std::span<const EdgeServerProfile> profiles, double hours, double lambda) {
  if (realized.size() != profiles.size())
    throw std::invalid_argument("execute_frame: one realized demand per server required");
  std::unordered_map<int, std::size_t> index;
  for (std::size_t k = 0; k < profiles.size(); ++k) index.emplace(profiles[k].id, k);

  FrameExecution ex;
  ex.frame = set.frame;
  ex.outcomes.resize(profiles.size());
  std::vector<TradeTerms> terms(profiles.size());
  std::vector<std::vector<LAContract>> by_buyer(profiles.size());
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    ex.outcomes[k].es_id = profiles[k].id;
    if (realized[k] < 0) throw std::invalid_argument("execute_frame: negative realized demand");
    ex.outcomes[k].r_act = realized[k];
  }
  for (const auto& r : set.roles) {
    const auto it = index.find(r.es_id);
    if (it == index.end()) throw std::invalid_argument("execute_frame: role for unknown server " + std::to_string(r.es_id));
    ex.outcomes[it->second].role = r.role;
  }

  std::vector<char> is_buyer(profiles.size(), 0), is_seller(profiles.size(), 0);
  for (const auto& c : set.contracts) {
    const auto b = index.find(c.buyer_id);
    const auto s = index.find(c.seller_id);
    if (b == index.end() || s == index.end())
      throw std::invalid_argument("execute_frame: contract references unknown server");
    is_buyer[b->second] = 1;
    is_seller[s->second] = 1;
    terms[b->second].price = c.buyer_price;
    terms[b->second].penalty = c.buyer_penalty;
    terms[b->second].traded += c.quantity;
    terms[s->second].price = c.seller_price;
    terms[s->second].penalty = c.seller_penalty;
    terms[s->second].traded += c.quantity;
    by_buyer[b->second].push_back(c);
  }

  std::vector<int> seller_theta(profiles.size(), 0);
  std::vector<DefaultCharge> buyer_charges, seller_charges;
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    if (is_buyer[k] && is_seller[k])
      throw std::invalid_argument("execute_frame: server " + std::to_string(profiles[k].id) + " both buys and sells");
    if (!is_buyer[k]) continue;
    const int theta = buyer_default(profiles[k].inherent_rb, realized[k], terms[k].traded);
    DefaultApportionment ap = apportion_defaults(theta, by_buyer[k]);
    for (const auto& pd : ap.per_seller) seller_theta[index.at(pd.seller_id)] += pd.defaulted;
    buyer_charges.push_back({terms[k].penalty, theta});
    ex.apportionments.push_back(std::move(ap));
  }

  for (std::size_t k = 0; k < profiles.size(); ++k) {
    const auto& p = profiles[k];
    EsOutcome& o = ex.outcomes[k];
    if (is_buyer[k]) {
      o.role = Role::Buyer;
      o.r_tra = terms[k].traded;
      o.utility = buyer_realized_utility(terms[k], o.r_act, p, hours, lambda);
      o.theta = o.utility.theta;
      o.energy = buyer_energy(p.inherent_rb, o.r_act, p.eta_use_w, p.eta_idle_w, hours);
      o.active_rb = buyer_active_rb(p.inherent_rb, o.r_act);
    } else if (is_seller[k]) {
      o.role = Role::Seller;
      o.r_tra = terms[k].traded;
      o.theta = seller_theta[k];
      o.utility = seller_realized_utility(terms[k], o.r_act, o.theta, p, hours, lambda);
      o.energy = seller_energy(p.inherent_rb, o.r_act, o.r_tra, o.theta, p.eta_use_w, p.eta_idle_w, hours);
      o.active_rb = seller_active_rb(p.inherent_rb, o.r_act, o.r_tra, o.theta);
      seller_charges.push_back({terms[k].penalty, o.theta});
    } else {
      o.utility = no_trade_utility(o.r_act, p, hours, lambda);
      o.energy = buyer_energy(p.inherent_rb, o.r_act, p.eta_use_w, p.eta_idle_w, hours);
      o.active_rb = buyer_active_rb(p.inherent_rb, o.r_act);
    }
  }
  ex.ledger = auctioneer_utility(buyer_charges, seller_charges);
  return ex;
}

HorizonExecution run_horizon(const Scenario& sc, std::span<const ContractSet> sets) {
  if (sets.size() != sc.horizon)
    throw std::invalid_argument("run_horizon: " + std::to_string(sets.size()) + " contract sets for a horizon of " +
                                std::to_string(sc.horizon));
  HorizonExecution out;
  out.cumulative_utility.assign(sc.servers.size(), 0.0);
  for (std::size_t n = 0; n < sets.size(); ++n) {
    const std::vector<int> realized = sc.realized(n);
    FrameExecution ex = execute_frame(sets[n], realized, sc.servers, sc.frame_hours, sc.lambda);
    for (std::size_t k = 0; k < ex.outcomes.size(); ++k) out.cumulative_utility[k] += ex.outcomes[k].utility.total;
    out.cumulative_welfare += ex.welfare();
    out.frames.push_back(std::move(ex));
  }
  return out;
}

}  // namespace latrade
