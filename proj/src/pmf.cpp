#include "latrade/pmf.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace latrade {

UsagePmf::UsagePmf(int lowest, std::vector<double> mass, double tol) : lowest_(lowest), mass_(std::move(mass)) {
  if (lowest_ < 0) throw std::invalid_argument("pmf: support below zero");
  if (mass_.empty()) throw std::invalid_argument("pmf: empty support");
  for (double p : mass_)
    if (!std::isfinite(p) || p < 0.0) throw std::invalid_argument("pmf: invalid probability");
  const double t = total();
  if (std::abs(t - 1.0) > tol) throw std::invalid_argument("pmf: total mass " + std::to_string(t) + " is not 1");
}

UsagePmf UsagePmf::point(int value) { return UsagePmf(value, {1.0}); }

double UsagePmf::at(int usage) const {
  if (usage < lowest_ || usage > highest()) return 0.0;
  return mass_[static_cast<std::size_t>(usage - lowest_)];
}

double UsagePmf::total() const {
  double t = 0.0;
  for (double p : mass_) t += p;
  return t;
}

double UsagePmf::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < mass_.size(); ++i) m += mass_[i] * (lowest_ + static_cast<double>(i));
  return m;
}

}  // namespace latrade
