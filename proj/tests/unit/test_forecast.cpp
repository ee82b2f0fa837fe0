#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "latrade/forecast.hpp"
#include "latrade/rng.hpp"

using namespace latrade;

namespace {

// Central differences over every parameter.
double max_relative_gradient_error(LstmModel model, std::span<const double> window, double h) {
  const LstmGradient g = lstm_gradients(model, window);
  auto p = model.parameters();
  double worst = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double saved = p[k];
    p[k] = saved + h;
    const double up = lstm_loss(model, window);
    p[k] = saved - h;
    const double down = lstm_loss(model, window);
    p[k] = saved;
    const double num = (up - down) / (2 * h);
    const double denom = std::max({std::abs(num), std::abs(g.grad[k]), 1e-6});
    worst = std::max(worst, std::abs(num - g.grad[k]) / denom);
  }
  return worst;
}

std::vector<int> noisy_sinusoid(std::size_t n, double sd, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> out;
  for (std::size_t t = 0; t < n; ++t) {
    const double v = 100.0 + 40.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 24.0);
    out.push_back(static_cast<int>(std::lround(std::max(0.0, v + (sd > 0 ? rng.normal(0.0, sd) : 0.0)))));
  }
  return out;
}

LstmHyperparams small_hp() {
  LstmHyperparams hp;
  hp.hidden = 8;
  hp.window = 48;
  hp.stride = 6;
  hp.epochs = 150;
  return hp;
}

}  // namespace

TEST(Lstm, ZeroWeightsZeroOutput) {
  LstmModel m(5);
  for (double& w : m.parameters()) w = 0.0;
  const LstmStep s = lstm_step(m, 0.0, LstmCarry::zero(5));
  EXPECT_EQ(s.output, 0.0);
  for (double v : s.carry.h) EXPECT_EQ(v, 0.0);
}

TEST(Lstm, RejectsNonFiniteInput) {
  LstmModel m(3);
  EXPECT_THROW(lstm_step(m, NAN, LstmCarry::zero(3)), std::invalid_argument);
}

TEST(Lstm, GradientMatchesFiniteDifferences) {
  Rng rng(31);
  LstmModel m(4);
  m.initialize(rng);
  std::vector<double> window;
  for (int t = 0; t < 9; ++t) window.push_back(rng.uniform(-1.5, 1.5));
  EXPECT_LE(max_relative_gradient_error(m, window, 1e-5), 1e-4);
}

TEST(Lstm, CarryRoundTrip) {
  Rng rng(4);
  LstmModel m(6);
  m.initialize(rng);
  const LstmStep a = lstm_step(m, 0.3, LstmCarry::zero(6));
  const LstmStep b = lstm_step(m, -0.7, a.carry);
  LstmCarry carry = LstmCarry::zero(6);
  const std::vector<double> seq = {0.3, -0.7};
  const std::vector<double> out = lstm_run(m, seq, carry);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], a.output);
  EXPECT_EQ(out[1], b.output);
  EXPECT_EQ(carry.h, b.carry.h);
  EXPECT_EQ(carry.c, b.carry.c);
}

TEST(Train, ConstantHistoryLearnsConstant) {
  const std::vector<int> hist(120, 73);
  const ForecasterState st = train(hist, small_hp(), 5);
  EXPECT_LE(st.final_mse, 1e-3);
  const PointForecast one = predict_horizon(st, hist, 1);
  EXPECT_NEAR(one.point[0], 73, 1);
}

TEST(Train, CheckpointLossesNonIncreasing) {
  const auto hist = noisy_sinusoid(168, 3.0, 2);
  const ForecasterState st = train(hist, small_hp(), 9);
  ASSERT_GE(st.checkpoint_losses.size(), 3u);
  // Adam is not monotone step to step; checkpoints may wobble by a few percent
  for (std::size_t i = 1; i < st.checkpoint_losses.size(); ++i)
    EXPECT_LE(st.checkpoint_losses[i], st.checkpoint_losses[i - 1] * 1.05 + 1e-6);
  EXPECT_LT(st.checkpoint_losses.back(), st.checkpoint_losses.front());
}

TEST(Train, BeatsSeasonalNaiveOnSinusoid) {
  // Seven days of a 24-period sinusoid. Without noise the lag-24 naive
  // predictor is exact, so a small jitter is added to give both a floor.
  const auto hist = noisy_sinusoid(168, 4.0, 13);
  LstmHyperparams hp = small_hp();
  hp.epochs = 200;
  const ForecasterState st = train(hist, hp, 3);
  const std::vector<double> res = in_sample_residuals(st, hist);
  // residuals[r] is the error on target t = burn_in + r + 1
  double lstm = 0.0, naive = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < res.size(); ++r) {
    const std::size_t t = hp.residual_burn_in + r + 1;
    if (t < 24) continue;
    lstm += res[r] * res[r];
    const double e = hist[t] - hist[t - 24];
    naive += e * e;
    ++n;
  }
  ASSERT_GT(n, 100u);
  EXPECT_LT(lstm / n, naive / n);
}

TEST(Train, SameSeedSameWeights) {
  const auto hist = noisy_sinusoid(100, 2.0, 1);
  LstmHyperparams hp = small_hp();
  hp.epochs = 20;
  const ForecasterState a = train(hist, hp, 42);
  const ForecasterState b = train(hist, hp, 42);
  const auto pa = a.model.parameters(), pb = b.model.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  EXPECT_TRUE(std::equal(pa.begin(), pa.end(), pb.begin()));
}

TEST(Train, ShortHistoryRejected) {
  const std::vector<int> hist(48, 1);
  EXPECT_THROW(train(hist, small_hp(), 1), std::invalid_argument);
}

TEST(Predict, ShapeAndClamp) {
  const auto hist = noisy_sinusoid(100, 2.0, 1);
  LstmHyperparams hp = small_hp();
  hp.epochs = 10;
  const ForecasterState st = train(hist, hp, 1);
  const PointForecast pf = predict_horizon(st, hist, 3);
  EXPECT_EQ(pf.point.size(), 3u);
  EXPECT_EQ(pf.raw.size(), 3u);
  EXPECT_THROW(predict_horizon(st, hist, 0), std::invalid_argument);
}

TEST(Predict, ZeroHistoryZeroForecast) {
  const std::vector<int> hist(80, 0);
  const ForecasterState st = train(hist, small_hp(), 2);
  const PointForecast pf = predict_horizon(st, hist, 5);
  for (int v : pf.point) EXPECT_EQ(v, 0);
}

// ---------------------------------------------------------------------------

TEST(ResidualPmf, ZeroResidualsPointMass) {
  const std::vector<double> res(30, 0.0);
  const ResidualPmf r = residual_pmf(res, 17);
  EXPECT_FALSE(r.fallback);
  EXPECT_EQ(r.pmf.lowest(), 17);
  EXPECT_EQ(r.pmf.highest(), 17);
}

TEST(ResidualPmf, EqualThirds) {
  std::vector<double> res;
  for (int k = 0; k < 10; ++k) res.insert(res.end(), {-1.0, 0.0, 1.0});
  const ResidualPmf r = residual_pmf(res, 10);
  EXPECT_NEAR(r.pmf.at(9), 1.0 / 3, 1e-12);
  EXPECT_NEAR(r.pmf.at(10), 1.0 / 3, 1e-12);
  EXPECT_NEAR(r.pmf.at(11), 1.0 / 3, 1e-12);
  EXPECT_NEAR(r.pmf.total(), 1.0, 1e-9);
}

TEST(ResidualPmf, NegativeMassFoldsIntoZero) {
  std::vector<double> res;
  for (int k = 0; k < 10; ++k) res.insert(res.end(), {-1.0, 0.0, 1.0});
  const ResidualPmf r = residual_pmf(res, 0);
  EXPECT_EQ(r.pmf.lowest(), 0);
  EXPECT_EQ(r.pmf.highest(), 1);
  EXPECT_NEAR(r.pmf.at(0), 2.0 / 3, 1e-12);
  EXPECT_NEAR(r.pmf.total(), 1.0, 1e-9);
}

TEST(ResidualPmf, FallbackBelowMinimum) {
  const std::vector<double> res(kMinResiduals - 1, 2.0);
  const ResidualPmf r = residual_pmf(res, 8);
  EXPECT_TRUE(r.fallback);
  EXPECT_EQ(r.pmf.lowest(), 8);
  EXPECT_EQ(r.pmf.highest(), 8);
}

TEST(DiscretizedNormal, SumsToOneAndFolds) {
  const UsagePmf p = discretized_normal(3, 4.0);
  EXPECT_EQ(p.lowest(), 0);
  EXPECT_NEAR(p.total(), 1.0, 1e-9);
  EXPECT_GT(p.mean(), 3.0);  // folding pushes mass up
  const UsagePmf q = discretized_normal(5, 0.0);
  EXPECT_EQ(q.lowest(), 5);
  EXPECT_EQ(q.highest(), 5);
}

// ---------------------------------------------------------------------------

TEST(Roles, BuyerSellerInactive) {
  const RoleEntry b = role_for(1, 120, 100);
  EXPECT_EQ(b.role, Role::Buyer);
  EXPECT_EQ(b.quantity, 20);
  const RoleEntry s = role_for(2, 80, 100);
  EXPECT_EQ(s.role, Role::Seller);
  EXPECT_EQ(s.quantity, 20);
  const RoleEntry i = role_for(3, 100, 100);
  EXPECT_EQ(i.role, Role::Inactive);
  EXPECT_EQ(i.quantity, 0);
}

TEST(Roles, DetermineRolesPerFrame) {
  std::vector<EdgeServerProfile> prof(2);
  prof[0].id = 4;
  prof[0].inherent_rb = 50;
  prof[1].id = 9;
  prof[1].inherent_rb = 60;
  std::vector<UsageForecast> fc(2);
  fc[0].es_id = 4;
  fc[0].point = {55, 50};
  fc[1].es_id = 9;
  fc[1].point = {40, 61};
  const RoleAssignment ra = determine_roles(fc, prof);
  ASSERT_EQ(ra.frames.size(), 2u);
  EXPECT_EQ(ra.frames[0][0].role, Role::Buyer);
  EXPECT_EQ(ra.frames[0][1].role, Role::Seller);
  EXPECT_EQ(ra.frames[1][0].role, Role::Inactive);
  EXPECT_EQ(ra.frames[1][1].quantity, 1);
  std::swap(fc[0], fc[1]);
  EXPECT_THROW(determine_roles(fc, prof), std::invalid_argument);
}

// ---------------------------------------------------------------------------

TEST(Forecasters, SeasonalNaiveRepeatsLastDay) {
  std::vector<int> hist;
  for (int t = 0; t < 48; ++t) hist.push_back(t);
  const auto f = seasonal_naive(hist, 24, 30);
  EXPECT_EQ(f[0], 24);
  EXPECT_EQ(f[23], 47);
  EXPECT_EQ(f[24], 24);
}

TEST(Forecasters, OracleIsExact) {
  DemandTrace tr;
  tr.es_id = 1;
  tr.history = {1, 2, 3};
  tr.future = {7, 8, 9};
  const UsageForecast f = OracleForecaster().forecast(tr, 3, 0);
  EXPECT_EQ(f.point, tr.future);
  for (std::size_t n = 0; n < 3; ++n) EXPECT_DOUBLE_EQ(f.pmf[n].at(tr.future[n]), 1.0);
}

TEST(Forecasters, FactoryNames) {
  const Scenario sc = generate_synthetic(2, 1);
  EXPECT_EQ(make_forecaster("lstm", sc)->name(), "lstm");
  EXPECT_EQ(make_forecaster("seasonal-naive", sc)->name(), "seasonal-naive");
  EXPECT_EQ(make_forecaster("oracle", sc)->name(), "oracle");
  EXPECT_EQ(make_forecaster("oracle-noise:3", sc)->name(), "oracle-noise");
  EXPECT_THROW(make_forecaster("arima", sc), std::invalid_argument);
}

TEST(Forecasters, LstmForecastIsWellFormed) {
  SyntheticOptions o;
  o.history_frames = 96;
  o.horizon = 6;
  const Scenario sc = generate_synthetic(1, 6, o);
  LstmHyperparams hp = small_hp();
  hp.epochs = 30;
  const UsageForecast f = LstmForecaster(hp).forecast(sc.traces[0], 6, 1);
  ASSERT_EQ(f.point.size(), 6u);
  ASSERT_EQ(f.pmf.size(), 6u);
  for (std::size_t n = 0; n < 6; ++n) {
    EXPECT_GE(f.point[n], 0);
    EXPECT_NEAR(f.pmf[n].total(), 1.0, 1e-9);
    EXPECT_GE(f.pmf[n].lowest(), 0);
  }
}
