#include "latrade/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace latrade {

WelfareSeries social_welfare(std::span<const FrameExecution> executions) {
  WelfareSeries w;
  for (const auto& ex : executions) {
    w.per_frame.push_back(ex.welfare());
    w.cumulative += w.per_frame.back();
  }
  return w;
}

Utilization utilization_metrics(std::span<const FrameExecution> executions,
                                std::span<const EdgeServerProfile> profiles) {
  long long capacity = 0;
  long long active = 0;
  double active_wh = 0.0;
  double total_wh = 0.0;
  for (const auto& ex : executions) {
    if (ex.outcomes.size() != profiles.size())
      throw std::invalid_argument("utilization: execution does not cover every server");
    for (std::size_t k = 0; k < profiles.size(); ++k) {
      capacity += profiles[k].inherent_rb;
      active += ex.outcomes[k].active_rb;
      active_wh += ex.outcomes[k].energy.active_wh;
      total_wh += ex.outcomes[k].energy.total_wh;
    }
  }
  if (capacity <= 0 || !(total_wh > 0.0)) throw std::invalid_argument("utilization: zero total capacity");
  return {static_cast<double>(active) / static_cast<double>(capacity), active_wh / total_wh};
}

LatencyStats latency_stats(std::span<const double> samples) {
  LatencyStats s;
  s.samples = samples.size();
  if (samples.empty()) return s;
  std::vector<double> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean_ms = sum / static_cast<double>(v.size());
  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  s.p50_ms = quantile(0.5);
  s.p95_ms = quantile(0.95);
  return s;
}

}  // namespace latrade
