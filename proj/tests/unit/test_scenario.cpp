#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "../oracles/kmeans_oracle.hpp"
#include "latrade/report.hpp"
#include "latrade/scenario.hpp"

using namespace latrade;

namespace {

const char* kHeader = "detector_id,lat,lon,timestamp_iso8601,flow,occupancy,lanes\n";

std::string scenario_text(const Scenario& sc) {
  std::ostringstream os;
  write_scenario_json(os, sc);
  return os.str();
}

DetectorRecord rec(std::string id, double lat, double lon, std::int64_t ts, double flow, double occ, int lanes = 1) {
  DetectorRecord r;
  r.detector_id = std::move(id);
  r.latitude = lat;
  r.longitude = lon;
  r.timestamp = ts;
  r.flow = flow;
  r.occupancy = occ;
  r.lanes = lanes;
  return r;
}

}  // namespace

TEST(Synthetic, DefaultSupports) {
  const Scenario sc = generate_synthetic(30, 3);
  ASSERT_EQ(sc.servers.size(), 30u);
  for (const auto& s : sc.servers) {
    EXPECT_GE(s.inherent_rb, 50);
    EXPECT_LE(s.inherent_rb, 200);
    EXPECT_GE(s.internal_revenue, 50.0);
    EXPECT_LE(s.internal_revenue, 100.0);
    EXPECT_GE(s.coverage_radius_m, 200.0);
    EXPECT_LE(s.coverage_radius_m, 700.0);
    // idle loss per RB-hour recovered through lambda
    EXPECT_GE(s.eta_idle_w * sc.lambda, 5.0 - 1e-9);
    EXPECT_LE(s.eta_idle_w * sc.lambda, 15.0 + 1e-9);
    EXPECT_GT(s.eta_use_w, s.eta_idle_w);
  }
  EXPECT_NO_THROW(sc.validate());
}

TEST(Synthetic, SupportsOverManyDraws) {
  // 10,000 servers across several seeds
  int lo = 1000, hi = -1;
  double vlo = 1e9, vhi = -1e9;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    SyntheticOptions o;
    o.history_frames = 0;
    o.horizon = 1;
    const Scenario sc = generate_synthetic(50, seed, o);
    for (const auto& s : sc.servers) {
      lo = std::min(lo, s.inherent_rb);
      hi = std::max(hi, s.inherent_rb);
      vlo = std::min(vlo, s.internal_revenue);
      vhi = std::max(vhi, s.internal_revenue);
    }
  }
  EXPECT_GE(lo, 50);
  EXPECT_LE(hi, 200);
  EXPECT_GE(vlo, 50.0);
  EXPECT_LE(vhi, 100.0);
}

TEST(Synthetic, PlacementInsideInterpolatedSquare) {
  EXPECT_DOUBLE_EQ(synthetic_area_km2(10, {}), 1.0);
  EXPECT_DOUBLE_EQ(synthetic_area_km2(50, {}), 6.5);
  EXPECT_DOUBLE_EQ(synthetic_area_km2(30, {}), 3.75);
  const Scenario sc = generate_synthetic(30, 5);
  const double side = std::sqrt(3.75) * 1000.0;
  for (const auto& s : sc.servers) {
    EXPECT_GE(s.position.x_m, 0.0);
    EXPECT_LE(s.position.x_m, side);
    EXPECT_GE(s.position.y_m, 0.0);
    EXPECT_LE(s.position.y_m, side);
  }
}

TEST(Synthetic, SameSeedByteIdentical) {
  EXPECT_EQ(scenario_text(generate_synthetic(12, 99)), scenario_text(generate_synthetic(12, 99)));
  EXPECT_NE(scenario_text(generate_synthetic(12, 99)), scenario_text(generate_synthetic(12, 100)));
}

TEST(Synthetic, ZeroVarianceGivesInherentDemand) {
  SyntheticOptions o;
  o.demand_variance = {0.0, 0.0};
  o.diurnal_amplitude = 0.0;
  const Scenario sc = generate_synthetic(15, 8, o);
  for (std::size_t k = 0; k < sc.servers.size(); ++k) {
    ASSERT_EQ(sc.traces[k].future.size(), o.horizon);
    for (int v : sc.traces[k].future) EXPECT_EQ(v, sc.servers[k].inherent_rb);
    for (int v : sc.traces[k].history) EXPECT_EQ(v, sc.servers[k].inherent_rb);
  }
}

TEST(Synthetic, DemandNonNegativeAndSized) {
  const Scenario sc = generate_synthetic(20, 4);
  for (const auto& t : sc.traces) {
    EXPECT_EQ(t.history.size(), 192u);
    EXPECT_EQ(t.future.size(), 24u);
    for (int v : t.history) EXPECT_GE(v, 0);
  }
}

TEST(Synthetic, HalfHourlyGranularity) {
  SyntheticOptions o;
  o.frame_hours = 0.5;
  o.horizon = 48;
  const Scenario sc = generate_synthetic(5, 2, o);
  EXPECT_EQ(sc.frames_per_day(), 48);
  EXPECT_EQ(sc.traces[0].future.size(), 48u);
}

TEST(Synthetic, RejectsBadArguments) {
  EXPECT_THROW(generate_synthetic(0, 1), std::invalid_argument);
  SyntheticOptions o;
  o.revenue = {100.0, 50.0};
  EXPECT_THROW(generate_synthetic(5, 1, o), std::invalid_argument);
  o = {};
  o.frame_hours = 0.0;
  EXPECT_THROW(generate_synthetic(5, 1, o), std::invalid_argument);
}

TEST(Synthetic, ValidateNamesField) {
  Scenario sc = generate_synthetic(3, 1);
  sc.servers[1].omega = -1.0;
  try {
    sc.validate();
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("omega"), std::string::npos);
  }
}

// ---------------------------------------------------------------------------

TEST(Ingest, ThreeValidRows) {
  std::istringstream in(std::string(kHeader) +
                        "d1,52.37,4.89,2017-05-01T00:00:00Z,120,0.10,2\n"
                        "d2,52.38,4.90,2017-05-01T00:00:00Z,80,0.05,1\n"
                        "d1,52.37,4.89,2017-05-01T01:00:00Z,100,0.20,2\n");
  const auto r = ingest_detectors(in);
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_TRUE(r.rejected.empty());
  EXPECT_EQ(r.records[1].detector_id, "d2");
  EXPECT_DOUBLE_EQ(r.records[2].flow, 100.0);
  EXPECT_EQ(r.records[2].lanes, 2);
  EXPECT_EQ(r.records[2].timestamp - r.records[0].timestamp, 3600);
}

TEST(Ingest, OccupancyAboveOneRejected) {
  std::istringstream in(std::string(kHeader) +
                        "d1,52.37,4.89,2017-05-01T00:00:00Z,120,1.2,2\n"
                        "d2,52.38,4.90,2017-05-01T00:00:00Z,80,0.05,1\n");
  const auto r = ingest_detectors(in);
  EXPECT_EQ(r.records.size(), 1u);
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_NE(r.rejected[0].reason.find("occupancy"), std::string::npos);
}

TEST(Ingest, EmptyFileGivesEmptyList) {
  std::istringstream in("");
  const auto r = ingest_detectors(in);
  EXPECT_TRUE(r.records.empty());
  EXPECT_TRUE(r.rejected.empty());
}

TEST(Ingest, MissingColumnIsFatal) {
  std::istringstream in("detector_id,lat,lon,timestamp_iso8601,flow,lanes\nd1,1,2,2017-05-01T00:00:00Z,3,1\n");
  EXPECT_THROW(ingest_detectors(in), std::runtime_error);
}

TEST(Ingest, Iso8601Variants) {
  const std::int64_t t = parse_iso8601("2017-05-01T13:15:00Z");
  EXPECT_EQ(t, 1493644500);
  EXPECT_EQ(parse_iso8601("2017-05-01T13:15:00"), t);
  EXPECT_EQ(parse_iso8601("2017-05-01 13:15:00"), t);
  EXPECT_EQ(parse_iso8601("2017-05-01T15:15:00+02:00"), t);
  EXPECT_EQ(format_iso8601(t), "2017-05-01T13:15:00Z");
  EXPECT_THROW(parse_iso8601("yesterday"), std::invalid_argument);
}

// ---------------------------------------------------------------------------

TEST(KMeans, SeparatedPairs) {
  std::vector<DetectorRecord> rs = {
      rec("a", 52.000, 4.000, 0, 1, 0), rec("b", 52.0001, 4.0001, 0, 1, 0),
      rec("c", 52.100, 4.200, 0, 1, 0), rec("d", 52.1001, 4.2001, 0, 1, 0)};
  const ClusterMap m = cluster_detectors(rs, 2, 17);
  EXPECT_EQ(m.assignment.at("a"), m.assignment.at("b"));
  EXPECT_EQ(m.assignment.at("c"), m.assignment.at("d"));
  EXPECT_NE(m.assignment.at("a"), m.assignment.at("c"));
}

TEST(KMeans, OneClusterPerPoint) {
  std::vector<Position> pts = {{0, 0}, {5, 1}, {9, 9}, {-3, 4}, {2, -7}};
  const auto r = kmeans_lloyd(pts, 5, 3);
  EXPECT_NEAR(r.wcss, 0.0, 1e-12);
  std::set<int> used(r.assignment.begin(), r.assignment.end());
  EXPECT_EQ(used.size(), 5u);
}

TEST(KMeans, ObjectiveNonIncreasing) {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  std::vector<Position> pts;
  for (int i = 0; i < 300; ++i) pts.push_back({u(gen), u(gen)});
  const auto r = kmeans_lloyd(pts, 12, 9);
  ASSERT_FALSE(r.objective_trace.empty());
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
    EXPECT_LE(r.objective_trace[i], r.objective_trace[i - 1] + 1e-9);
}

TEST(KMeans, MatchesReferenceOnRandomPoints) {
  std::mt19937 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  std::vector<Position> pts;
  std::vector<std::pair<double, double>> raw;
  for (int i = 0; i < 200; ++i) {
    const double x = u(gen), y = u(gen);
    pts.push_back({x, y});
    raw.emplace_back(x, y);
  }
  double best = 1e300;
  for (std::uint64_t r = 0; r < 10; ++r) best = std::min(best, kmeans_lloyd(pts, 30, 100 + r).wcss);
  const double ref = oracle::kmeans_wcss(raw, 30, 77, 10);
  EXPECT_LE(best, ref * (1.0 + 1e-9));
}

TEST(KMeans, RejectsBadK) {
  std::vector<DetectorRecord> rs = {rec("a", 52.0, 4.0, 0, 1, 0), rec("b", 52.0, 4.0, 0, 1, 0)};
  EXPECT_THROW(cluster_detectors(rs, 0, 1), std::invalid_argument);
  // two detectors, one distinct position
  EXPECT_THROW(cluster_detectors(rs, 2, 1), std::invalid_argument);
}

// ---------------------------------------------------------------------------

TEST(Demand, ZeroCoefficientsZeroTrace) {
  std::vector<DetectorRecord> rs = {rec("a", 52, 4, 0, 50, 0.3, 2), rec("a", 52, 4, 3600, 70, 0.1, 2)};
  const ClusterMap m = cluster_detectors(rs, 1, 1);
  DemandMapping dm;
  dm.gamma_flow = 0.0;
  dm.gamma_occ = 0.0;
  const auto tr = derive_demand_trace(m, rs, dm);
  ASSERT_EQ(tr.size(), 1u);
  EXPECT_EQ(tr[0].history, (std::vector<int>{0, 0}));
}

TEST(Demand, SingleRecordFlowOnly) {
  std::vector<DetectorRecord> rs = {rec("a", 52, 4, 7200, 10, 0.4, 3)};
  const ClusterMap m = cluster_detectors(rs, 1, 1);
  DemandMapping dm;
  dm.gamma_flow = 0.5;
  dm.gamma_occ = 0.0;
  const auto tr = derive_demand_trace(m, rs, dm);
  ASSERT_EQ(tr[0].history.size(), 1u);
  EXPECT_EQ(tr[0].history[0], 5);
}

TEST(Demand, LinearInFlowCoefficient) {
  std::vector<DetectorRecord> rs = {rec("a", 52, 4, 0, 13, 0.2, 2), rec("b", 52.1, 4.1, 0, 7, 0.5, 1),
                                    rec("a", 52, 4, 1800, 9, 0.1, 2), rec("b", 52.1, 4.1, 1800, 21, 0.0, 1)};
  const ClusterMap m = cluster_detectors(rs, 2, 1);
  DemandMapping a;
  a.gamma_flow = 0.3;
  a.gamma_occ = 0.0;
  a.frame_hours = 0.5;
  DemandMapping b = a;
  b.gamma_flow = 0.6;
  const auto la = derive_demand_load(m, rs, a);
  const auto lb = derive_demand_load(m, rs, b);
  ASSERT_EQ(la.size(), 2u);
  for (std::size_t c = 0; c < 2; ++c) {
    ASSERT_EQ(la[c].size(), 2u);
    for (std::size_t f = 0; f < 2; ++f) EXPECT_DOUBLE_EQ(lb[c][f], 2.0 * la[c][f]);
  }
}

TEST(Demand, GapNamesFirstMissingFrame) {
  const std::int64_t t0 = parse_iso8601("2017-05-01T00:00:00Z");
  std::vector<DetectorRecord> rs = {rec("a", 52, 4, t0, 1, 0), rec("a", 52, 4, t0 + 3 * 3600, 1, 0)};
  const ClusterMap m = cluster_detectors(rs, 1, 1);
  try {
    derive_demand_trace(m, rs, {});
    FAIL() << "expected a gap error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("2017-05-01T01:00:00Z"), std::string::npos) << e.what();
  }
}

TEST(Demand, FutureFramesSplitOff) {
  std::vector<DetectorRecord> rs;
  for (int f = 0; f < 30; ++f) rs.push_back(rec("a", 52, 4, f * 3600, 20 * f, 0));
  const ClusterMap m = cluster_detectors(rs, 1, 1);
  DemandMapping dm;
  dm.gamma_flow = 1.0;
  dm.future_frames = 6;
  auto tr = derive_demand_trace(m, rs, dm);
  EXPECT_EQ(tr[0].history.size(), 24u);
  ASSERT_EQ(tr[0].future.size(), 6u);
  EXPECT_EQ(tr[0].future.back(), 580);
  const Scenario sc = scenario_from_traces(m, tr, 1.0, 3);
  EXPECT_EQ(sc.horizon, 6u);
  EXPECT_EQ(sc.servers[0].inherent_rb, 230);
}
