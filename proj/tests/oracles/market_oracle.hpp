#pragma once

// Hand-rolled reference for matching, pricing and per-outcome utilities.
// Written from the mechanism rules directly; shares no code with src/.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

namespace oracle {

struct Buyer {
  int id;
  std::vector<double> bid;  // effective bid toward each seller (seller index order)
  std::vector<double> cost; // transmission deduction toward each seller
  int deficit;
};

struct Seller {
  int id;
  double ask;
  double penalty;
  int supply;
};

struct Match {
  int seller;
  int buyer;
  int qty;
  double win_bid;
  std::vector<double> nbid;
};

struct Terms {
  int buyer;
  int seller;
  int qty;
  double p_pair;
  double p_buyer;
  double p_seller;
  double q_buyer;
  double q_seller;
  double c;
};

inline std::vector<Match> match(const std::vector<Buyer>& buyers, const std::vector<Seller>& sellers) {
  std::vector<int> seller_order;
  for (int j = 0; j < static_cast<int>(sellers.size()); ++j) seller_order.push_back(j);
  // plain insertion sort by (ask, id)
  for (std::size_t a = 1; a < seller_order.size(); ++a) {
    for (std::size_t b = a; b > 0; --b) {
      const Seller& x = sellers[seller_order[b - 1]];
      const Seller& y = sellers[seller_order[b]];
      if (y.ask < x.ask || (y.ask == x.ask && y.id < x.id))
        std::swap(seller_order[b - 1], seller_order[b]);
      else
        break;
    }
  }
  std::vector<int> left;
  for (const auto& b : buyers) left.push_back(b.deficit);

  std::vector<Match> out;
  for (int j : seller_order) {
    const Seller& s = sellers[j];
    int supply = s.supply;
    while (supply > 0) {
      int best = -1;
      for (int i = 0; i < static_cast<int>(buyers.size()); ++i) {
        if (left[i] == 0) continue;
        const double b = buyers[i].bid[j];
        if (!(b > s.ask)) continue;
        if (best < 0) {
          best = i;
        } else {
          const double bb = buyers[best].bid[j];
          if (b > bb || (b == bb && buyers[i].id < buyers[best].id)) best = i;
        }
      }
      if (best < 0) break;
      Match m{s.id, buyers[best].id, 0, buyers[best].bid[j], {}};
      for (int i = 0; i < static_cast<int>(buyers.size()); ++i) {
        if (i == best || left[i] == 0) continue;
        const double b = buyers[i].bid[j];
        if (s.ask < b && b < m.win_bid) m.nbid.push_back(b);
      }
      m.qty = left[best] < supply ? left[best] : supply;
      left[best] -= m.qty;
      supply -= m.qty;
      out.push_back(m);
    }
  }
  return out;
}

inline std::vector<Terms> price(const std::vector<Match>& matches, const std::vector<Buyer>& buyers,
                                const std::vector<Seller>& sellers) {
  std::map<int, const Buyer*> by_buyer;
  for (const auto& b : buyers) by_buyer[b.id] = &b;
  std::map<int, int> seller_index;
  for (int j = 0; j < static_cast<int>(sellers.size()); ++j) seller_index[sellers[j].id] = j;

  std::vector<double> pair(matches.size());
  for (std::size_t k = 0; k < matches.size(); ++k) {
    const Match& m = matches[k];
    if (m.nbid.empty()) {
      pair[k] = sellers[seller_index[m.seller]].ask;
    } else {
      double sum = 0.0;
      for (double b : m.nbid) sum += b;
      pair[k] = sum / static_cast<double>(m.nbid.size());
    }
  }
  std::vector<Terms> out;
  for (std::size_t k = 0; k < matches.size(); ++k) {
    const Match& m = matches[k];
    const int j = seller_index[m.seller];
    double s_num = 0.0;
    int s_den = 0;
    double b_num = 0.0;
    int b_den = 0;
    double q_max = 0.0;
    for (std::size_t r = 0; r < matches.size(); ++r) {
      const Match& o = matches[r];
      if (o.seller == m.seller) {
        s_num += pair[r] * o.qty;
        s_den += o.qty;
      }
      if (o.buyer == m.buyer) {
        const int jo = seller_index[o.seller];
        b_num += (pair[r] + by_buyer[o.buyer]->cost[jo]) * o.qty;
        b_den += o.qty;
        q_max = std::max(q_max, sellers[jo].penalty);
      }
    }
    out.push_back({m.buyer, m.seller, m.qty, pair[k], b_num / b_den, s_num / s_den, q_max, sellers[j].penalty,
                   by_buyer[m.buyer]->cost[j]});
  }
  return out;
}

// Realized buyer utility written out term by term.
inline double buyer_utility(double v, double p_b, double q_b, int r_in, int r_tra, int r_act, double eta_use,
                            double eta_idle, double hours, double lambda) {
  int theta = r_tra + r_in - r_act;
  if (theta < 0) theta = 0;
  if (theta > r_tra) theta = r_tra;
  const double served = std::min<double>(r_act, r_in + r_tra);
  const double active = hours * std::min(r_in, r_act) * eta_use;
  const double idle = hours * std::max(r_in - r_act, 0) * eta_idle;
  return v * served - p_b * (r_tra - theta) - q_b * theta - lambda * (active + idle);
}

inline double seller_utility(double v, double p_s, double q_s, int r_in, int r_tra, int theta, int r_act,
                             double eta_use, double eta_idle, double hours, double lambda) {
  const double active = hours * std::min(r_in, r_act + r_tra - theta) * eta_use;
  const double idle = hours * std::max(r_in - r_act - r_tra + theta, 0) * eta_idle;
  return p_s * (r_tra - theta) + q_s * theta - lambda * (active + idle) +
         v * std::min(r_in - r_tra + theta, r_act);
}

}  // namespace oracle
