#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latrade/pmf.hpp"
#include "latrade/scenario.hpp"

namespace latrade {

class Rng;

// ---------------------------------------------------------------------------
// LSTM cell with a linear readout. Parameters live in one flat vector:
//   W  [4H x (1+H)] row-major, rows ordered i, f, g, o; column 0 is the input
//   b  [4H]
//   w_out [H], b_out [1]

class LstmModel {
 public:
  explicit LstmModel(int hidden = 16);

  int hidden() const { return hidden_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::size_t gate_weight_offset() const { return 0; }
  std::size_t gate_bias_offset() const { return 4 * static_cast<std::size_t>(hidden_) * (1 + hidden_); }
  std::size_t readout_offset() const { return gate_bias_offset() + 4 * static_cast<std::size_t>(hidden_); }
  std::size_t readout_bias_offset() const { return readout_offset() + hidden_; }

  // Uniform(-1/sqrt(H), 1/sqrt(H)) weights, forget-gate bias 1, zero readout bias.
  void initialize(Rng& rng);

 private:
  int hidden_;
  std::vector<double> params_;
};

struct LstmCarry {
  std::vector<double> h;
  std::vector<double> c;
  static LstmCarry zero(int hidden);
};

struct LstmStep {
  double output = 0.0;
  LstmCarry carry;
};

// One recurrence step. Throws std::invalid_argument for a non-finite input.
LstmStep lstm_step(const LstmModel& model, double input, const LstmCarry& carry);

// Runs a sequence, updating carry in place; returns one output per input.
std::vector<double> lstm_run(const LstmModel& model, std::span<const double> inputs, LstmCarry& carry);

// Window of W+1 values: inputs are the first W, targets the last W.
// Loss is the mean squared one-step error from a zero carry.
double lstm_loss(const LstmModel& model, std::span<const double> window);

struct LstmGradient {
  double loss = 0.0;
  std::vector<double> grad;  // same layout as LstmModel::parameters()
};

LstmGradient lstm_gradients(const LstmModel& model, std::span<const double> window);

// ---------------------------------------------------------------------------
// Training and prediction

struct LstmHyperparams {
  int hidden = 16;
  std::size_t window = 168;
  std::size_t epochs = 200;
  double learning_rate = 1e-2;
  double clip_norm = 1.0;
  std::size_t stride = 24;            // offset between training windows
  std::size_t checkpoint_every = 20;  // epochs between recorded losses
  std::size_t residual_burn_in = 24;  // steps skipped before collecting residuals

  void validate() const;
};

struct ForecasterState {
  LstmModel model;
  LstmHyperparams hyperparams;
  double norm_mean = 0.0;
  double norm_scale = 1.0;
  std::uint64_t seed = 0;
  std::vector<double> checkpoint_losses;  // normalized-scale MSE
  double final_mse = 0.0;                 // original-scale MSE over training windows
};

// Adam over sliding windows with global-norm clipping. Throws
// std::invalid_argument when the history is shorter than window + 1 and
// std::runtime_error if the loss becomes non-finite.
ForecasterState train(std::span<const int> history, const LstmHyperparams& hp, std::uint64_t seed);

struct PointForecast {
  std::vector<int> point;   // clamped at 0 and rounded
  std::vector<double> raw;  // unclamped model output
};

PointForecast predict_horizon(const ForecasterState& state, std::span<const int> history, std::size_t n);

// actual - predicted one-step residuals over the history, after burn-in.
std::vector<double> in_sample_residuals(const ForecasterState& state, std::span<const int> history);

inline constexpr std::size_t kMinResiduals = 20;

struct ResidualPmf {
  UsagePmf pmf;
  bool fallback = false;  // too few residuals, point mass used
};

// Histogram of rounded residuals shifted by the estimate. Mass that would
// land below zero is folded into zero.
ResidualPmf residual_pmf(std::span<const double> residuals, int estimate);
ResidualPmf residual_pmf(const ForecasterState& state, std::span<const int> history, int estimate);

// ---------------------------------------------------------------------------
// Roles

enum class Role { Inactive, Buyer, Seller };

std::string_view role_name(Role role);

struct RoleEntry {
  int es_id = 0;
  Role role = Role::Inactive;
  int quantity = 0;  // deficit for buyers, surplus for sellers
};

struct RoleAssignment {
  std::vector<std::vector<RoleEntry>> frames;  // [frame][server]
};

RoleEntry role_for(int es_id, int estimate, int inherent_rb);

struct UsageForecast {
  int es_id = 0;
  std::vector<int> point;
  std::vector<double> raw;
  std::vector<UsagePmf> pmf;
  bool pmf_fallback = false;
};

// Throws std::invalid_argument when forecasts and profiles do not line up.
RoleAssignment determine_roles(std::span<const UsageForecast> forecasts,
                               std::span<const EdgeServerProfile> profiles);

// ---------------------------------------------------------------------------
// Forecaster interface

class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::string name() const = 0;
  // Only the oracle variants look at trace.future.
  virtual UsageForecast forecast(const DemandTrace& trace, std::size_t horizon, std::uint64_t seed) const = 0;
};

class LstmForecaster final : public Forecaster {
 public:
  explicit LstmForecaster(LstmHyperparams hp = {}) : hp_(hp) {}
  std::string name() const override { return "lstm"; }
  UsageForecast forecast(const DemandTrace& trace, std::size_t horizon, std::uint64_t seed) const override;
  // Same as forecast() and also hands back the trained model.
  UsageForecast forecast(const DemandTrace& trace, std::size_t horizon, std::uint64_t seed,
                         ForecasterState& state) const;
  const LstmHyperparams& hyperparams() const { return hp_; }

 private:
  LstmHyperparams hp_;
};

class SeasonalNaiveForecaster final : public Forecaster {
 public:
  explicit SeasonalNaiveForecaster(int period = 24);
  std::string name() const override { return "seasonal-naive"; }
  UsageForecast forecast(const DemandTrace& trace, std::size_t horizon, std::uint64_t seed) const override;

 private:
  int period_;
};

// Perfect foresight, optionally blurred by rounded Gaussian noise. The pmf is
// the discretized noise distribution around the noisy point.
class OracleForecaster final : public Forecaster {
 public:
  explicit OracleForecaster(double noise_sd = 0.0);
  std::string name() const override { return noise_sd_ > 0.0 ? "oracle-noise" : "oracle"; }
  UsageForecast forecast(const DemandTrace& trace, std::size_t horizon, std::uint64_t seed) const override;

 private:
  double noise_sd_;
};

// N(center, sd) rounded to integers and folded at zero; a point mass when
// sd is zero.
UsagePmf discretized_normal(int center, double sd);

// Seasonal-naive point forecast for frames 1..n after the history.
std::vector<int> seasonal_naive(std::span<const int> history, int period, std::size_t n);

// Per-server forecasts in server order, seeds derived from the scenario seed.
std::vector<UsageForecast> forecast_all(const Scenario& scenario, const Forecaster& forecaster);
// LSTM variant that keeps the trained models, one per server.
std::vector<UsageForecast> forecast_all(const Scenario& scenario, const LstmForecaster& forecaster,
                                        std::vector<ForecasterState>& states);

std::unique_ptr<Forecaster> make_forecaster(std::string_view name, const Scenario& scenario);

}  // namespace latrade
