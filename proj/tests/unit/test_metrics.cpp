#include <gtest/gtest.h>

#include <chrono>
#include <stdexcept>
#include <thread>
#include <vector>

#include "latrade/metrics.hpp"

using namespace latrade;

namespace {

EdgeServerProfile server(int id, int r_in) {
  EdgeServerProfile p;
  p.id = id;
  p.inherent_rb = r_in;
  p.eta_use_w = 100.0;
  p.eta_idle_w = 10.0;
  return p;
}

EsOutcome outcome(int id, int active_rb, EnergyBreakdown e, double utility = 0.0) {
  EsOutcome o;
  o.es_id = id;
  o.active_rb = active_rb;
  o.energy = e;
  o.utility.total = utility;
  return o;
}

}  // namespace

TEST(Welfare, EmptyMarket) {
  std::vector<FrameExecution> none;
  EXPECT_EQ(social_welfare(none).cumulative, 0.0);
  std::vector<FrameExecution> one(1);
  EXPECT_EQ(social_welfare(one).per_frame.at(0), 0.0);
}

TEST(Welfare, SingleServerFrame) {
  const EdgeServerProfile p = server(1, 10);
  FrameExecution f;
  f.outcomes.push_back(outcome(1, 4, buyer_energy(10, 4, 100, 10, 1), no_trade_utility(4, p, 1, 0.001).total));
  std::vector<FrameExecution> fs = {f, f};
  const WelfareSeries w = social_welfare(fs);
  EXPECT_DOUBLE_EQ(w.per_frame[0], no_trade_utility(4, p, 1, 0.001).total);
  EXPECT_DOUBLE_EQ(w.cumulative, 2 * w.per_frame[0]);
}

TEST(Utilization, FullyIdle) {
  std::vector<EdgeServerProfile> ps = {server(1, 10), server(2, 5)};
  FrameExecution f;
  f.outcomes = {outcome(1, 0, buyer_energy(10, 0, 100, 10, 1)), outcome(2, 0, buyer_energy(5, 0, 100, 10, 1))};
  std::vector<FrameExecution> fs = {f};
  const Utilization u = utilization_metrics(fs, ps);
  EXPECT_EQ(u.resource, 0.0);
  EXPECT_EQ(u.energy, 0.0);
}

TEST(Utilization, FullyBusy) {
  std::vector<EdgeServerProfile> ps = {server(1, 10)};
  FrameExecution f;
  f.outcomes = {outcome(1, 10, buyer_energy(10, 12, 100, 10, 1))};
  std::vector<FrameExecution> fs = {f};
  const Utilization u = utilization_metrics(fs, ps);
  EXPECT_DOUBLE_EQ(u.resource, 1.0);
  EXPECT_DOUBLE_EQ(u.energy, 1.0);
}

TEST(Utilization, SellerWorkedFrame) {
  std::vector<EdgeServerProfile> ps = {server(1, 10)};
  FrameExecution f;
  f.outcomes = {outcome(1, seller_active_rb(10, 3, 5, 1), seller_energy(10, 3, 5, 1, 100, 10, 1))};
  std::vector<FrameExecution> fs = {f};
  const Utilization u = utilization_metrics(fs, ps);
  EXPECT_DOUBLE_EQ(u.energy, 700.0 / 730.0);
  EXPECT_DOUBLE_EQ(u.resource, 7.0 / 10.0);
}

TEST(Utilization, ZeroCapacityRejected) {
  std::vector<EdgeServerProfile> ps = {server(1, 0)};
  FrameExecution f;
  f.outcomes = {outcome(1, 0, {})};
  std::vector<FrameExecution> fs = {f};
  EXPECT_THROW(utilization_metrics(fs, ps), std::invalid_argument);
}

TEST(Latency, StatsInterpolate) {
  const std::vector<double> xs = {4, 1, 3, 2, 5};
  const LatencyStats s = latency_stats(xs);
  EXPECT_EQ(s.samples, 5u);
  EXPECT_DOUBLE_EQ(s.mean_ms, 3.0);
  EXPECT_DOUBLE_EQ(s.p50_ms, 3.0);
  EXPECT_DOUBLE_EQ(s.p95_ms, 4.8);
  const std::vector<double> none;
  EXPECT_EQ(latency_stats(none).samples, 0u);
  EXPECT_EQ(latency_stats(none).mean_ms, 0.0);
}

TEST(Latency, ProbeMeasuresElapsedTime) {
  LatencyProbe p;
  p.start();
  std::this_thread::sleep_for(std::chrono::milliseconds(5));
  EXPECT_GE(p.stop_ms(), 4.5);
}

TEST(Latency, MedianStableAcrossRepeats) {
  // fixed workload probed twice
  auto measure = [] {
    std::vector<double> samples;
    for (int r = 0; r < 41; ++r) {
      LatencyProbe p;
      p.start();
      volatile double acc = 0;
      for (int i = 0; i < 200000; ++i) acc = acc + i * 1e-9;
      samples.push_back(p.stop_ms());
    }
    return latency_stats(samples).p50_ms;
  };
  const double a = measure();
  const double b = measure();
  ASSERT_GT(a, 0.0);
  EXPECT_LE(std::abs(a - b), 0.5 * std::max(a, b));
}
