#pragma once

#include <span>
#include <vector>

namespace latrade {

// Probability mass over a contiguous range of non-negative integer usages.
class UsagePmf {
 public:
  UsagePmf() : lowest_(0), mass_{1.0} {}
  // Throws std::invalid_argument on negative support, negative or
  // non-finite mass, or a total further than tol from 1.
  UsagePmf(int lowest, std::vector<double> mass, double tol = 1e-9);

  static UsagePmf point(int value);

  int lowest() const { return lowest_; }
  int highest() const { return lowest_ + static_cast<int>(mass_.size()) - 1; }
  double at(int usage) const;
  std::span<const double> mass() const { return mass_; }
  double total() const;
  double mean() const;

 private:
  int lowest_;
  std::vector<double> mass_;
};

}  // namespace latrade
