#include "latrade/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace latrade {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void check_terms(const TradeTerms& t) {
  require(std::isfinite(t.price) && t.price >= 0.0, "terms: price must be non-negative");
  require(std::isfinite(t.penalty) && t.penalty >= 0.0, "terms: penalty must be non-negative");
  require(t.traded >= 0, "terms: traded RBs must be non-negative");
}

void check_env(double hours, double lambda) {
  require(std::isfinite(hours) && hours >= 0.0, "frame duration must be non-negative");
  require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be non-negative");
}

EnergyBreakdown make_energy(double active_rb, double idle_rb, double eta_use, double eta_idle, double hours) {
  EnergyBreakdown e;
  e.active_wh = hours * active_rb * eta_use;
  e.idle_wh = hours * idle_rb * eta_idle;
  e.total_wh = e.active_wh + e.idle_wh;
  return e;
}

void finish(UtilityBreakdown& u) { u.total = u.u1 + u.u2 + u.u3 + u.u4; }

}  // namespace

EnergyBreakdown buyer_energy(int r_in, int r_act, double eta_use, double eta_idle, double hours) {
  require(r_in >= 0 && r_act >= 0, "buyer_energy: negative RB count");
  require(eta_use >= 0.0 && eta_idle >= 0.0 && hours >= 0.0, "buyer_energy: negative parameter");
  return make_energy(std::min(r_in, r_act), std::max(r_in - r_act, 0), eta_use, eta_idle, hours);
}

EnergyBreakdown seller_energy(int r_in, int r_act, int r_tra, int theta, double eta_use, double eta_idle,
                              double hours) {
  require(r_in >= 0 && r_act >= 0 && r_tra >= 0 && theta >= 0, "seller_energy: negative RB count");
  require(theta <= r_tra, "seller_energy: defaulted RBs exceed traded RBs");
  require(eta_use >= 0.0 && eta_idle >= 0.0 && hours >= 0.0, "seller_energy: negative parameter");
  const int busy = r_act + r_tra - theta;
  return make_energy(std::min(r_in, busy), std::max(r_in - busy, 0), eta_use, eta_idle, hours);
}

int buyer_default(int r_in, int r_act, int r_tra) { return std::clamp(r_tra + r_in - r_act, 0, r_tra); }

int buyer_active_rb(int r_in, int r_act) { return std::min(r_in, r_act); }

int seller_active_rb(int r_in, int r_act, int r_tra, int theta) { return std::min(r_in, r_act + r_tra - theta); }

UtilityBreakdown buyer_realized_utility(const TradeTerms& t, int r_act, const EdgeServerProfile& p, double hours,
                                        double lambda) {
  check_terms(t);
  check_env(hours, lambda);
  require(r_act >= 0, "buyer utility: negative realized usage");
  UtilityBreakdown u;
  u.theta = buyer_default(p.inherent_rb, r_act, t.traded);
  u.u1 = p.internal_revenue * std::min(r_act, p.inherent_rb + t.traded);
  u.u2 = -t.price * (t.traded - u.theta);
  u.u3 = -t.penalty * u.theta;
  u.u4 = -lambda * buyer_energy(p.inherent_rb, r_act, p.eta_use_w, p.eta_idle_w, hours).total_wh;
  finish(u);
  return u;
}

UtilityBreakdown seller_realized_utility(const TradeTerms& t, int r_act, int theta, const EdgeServerProfile& p,
                                         double hours, double lambda) {
  check_terms(t);
  check_env(hours, lambda);
  require(r_act >= 0, "seller utility: negative realized usage");
  require(theta >= 0 && theta <= t.traded, "seller utility: defaulted RBs outside [0, traded]");
  UtilityBreakdown u;
  u.theta = theta;
  u.u1 = t.price * (t.traded - theta);
  u.u2 = t.penalty * theta;
  u.u3 = -lambda * seller_energy(p.inherent_rb, r_act, t.traded, theta, p.eta_use_w, p.eta_idle_w, hours).total_wh;
  u.u4 = p.internal_revenue * std::max(0, std::min(p.inherent_rb - t.traded + theta, r_act));
  finish(u);
  return u;
}

UtilityBreakdown no_trade_utility(int r_act, const EdgeServerProfile& p, double hours, double lambda) {
  check_env(hours, lambda);
  require(r_act >= 0, "no-trade utility: negative realized usage");
  UtilityBreakdown u;
  u.u1 = p.internal_revenue * std::min(p.inherent_rb, r_act);
  u.u4 = -lambda * buyer_energy(p.inherent_rb, r_act, p.eta_use_w, p.eta_idle_w, hours).total_wh;
  finish(u);
  return u;
}

FrameLedger auctioneer_utility(std::span<const DefaultCharge> buyers, std::span<const DefaultCharge> sellers) {
  long long theta_b = 0;
  long long theta_s = 0;
  FrameLedger l;
  for (const auto& b : buyers) {
    require(b.theta >= 0 && b.penalty >= 0.0, "ledger: negative buyer default or penalty");
    theta_b += b.theta;
    l.collected += b.penalty * b.theta;
  }
  for (const auto& s : sellers) {
    require(s.theta >= 0 && s.penalty >= 0.0, "ledger: negative seller default or penalty");
    theta_s += s.theta;
    l.paid += s.penalty * s.theta;
  }
  if (theta_b != theta_s)
    throw std::invalid_argument("ledger: buyer defaults " + std::to_string(theta_b) + " != seller defaults " +
                                std::to_string(theta_s));
  l.net = l.collected - l.paid;
  return l;
}

double buyer_expected_utility(const TradeTerms& t, const UsagePmf& usage, const EdgeServerProfile& p, double hours,
                              double lambda) {
  double expected = 0.0;
  const auto mass = usage.mass();
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (mass[i] == 0.0) continue;
    const int r_act = usage.lowest() + static_cast<int>(i);
    expected += mass[i] * buyer_realized_utility(t, r_act, p, hours, lambda).total;
  }
  return expected;
}

double seller_expected_utility_bound(const TradeTerms& t, const UsagePmf& usage, const EdgeServerProfile& p,
                                     double hours, double lambda) {
  check_terms(t);
  check_env(hours, lambda);
  if (t.traded > p.inherent_rb) throw std::invalid_argument("seller bound: traded RBs exceed inherent RBs");
  const int own = p.inherent_rb - t.traded;
  double energy = 0.0;
  double service = 0.0;
  const auto mass = usage.mass();
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (mass[i] == 0.0) continue;
    const int r_act = usage.lowest() + static_cast<int>(i);
    energy += mass[i] * seller_energy(p.inherent_rb, r_act, t.traded, t.traded, p.eta_use_w, p.eta_idle_w, hours)
                            .total_wh;
    service += mass[i] * std::min(own, r_act);
  }
  return t.traded * t.penalty - lambda * energy + p.internal_revenue * service;
}

BreachRisk buyer_breach_risk(const TradeTerms& t, const UsagePmf& usage, const EdgeServerProfile& p, double hours,
                             double lambda, double xi) {
  require(std::isfinite(xi) && xi > 0.0, "breach risk: xi must be positive");
  BreachRisk r;
  const auto mass = usage.mass();
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (mass[i] == 0.0) continue;
    const int r_act = usage.lowest() + static_cast<int>(i);
    if (buyer_realized_utility(t, r_act, p, hours, lambda).total < 0.0) r.probability += mass[i];
  }
  r.within_threshold = r.probability < xi;
  return r;
}

}  // namespace latrade
