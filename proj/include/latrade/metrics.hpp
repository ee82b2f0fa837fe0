#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <vector>

#include "latrade/scenario.hpp"
#include "latrade/settlement.hpp"

namespace latrade {

struct WelfareSeries {
  std::vector<double> per_frame;
  double cumulative = 0.0;
};

WelfareSeries social_welfare(std::span<const FrameExecution> executions);

struct Utilization {
  double resource = 0.0;  // active RBs over inherent RBs
  double energy = 0.0;    // active Wh over total Wh
};

// Throws std::invalid_argument when the total capacity is zero.
Utilization utilization_metrics(std::span<const FrameExecution> executions,
                                std::span<const EdgeServerProfile> profiles);

struct LatencyStats {
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  std::size_t samples = 0;
};

// Percentiles interpolate linearly between order statistics.
LatencyStats latency_stats(std::span<const double> samples_ms);

class LatencyProbe {
 public:
  void start() { begin_ = std::chrono::steady_clock::now(); }
  double stop_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - begin_).count();
  }

 private:
  std::chrono::steady_clock::time_point begin_ = std::chrono::steady_clock::now();
};

}  // namespace latrade
