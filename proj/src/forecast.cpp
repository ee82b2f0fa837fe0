#include "latrade/forecast.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <stdexcept>

#include "latrade/parallel.hpp"
#include "latrade/rng.hpp"

namespace latrade {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Activations of one window, stored step-major ([t * H + k]).
struct Trace {
  std::size_t steps = 0;
  int hidden = 0;
  std::vector<double> x, i, f, g, o, c, tc, h, y;

  void resize(std::size_t t, int hdim) {
    steps = t;
    hidden = hdim;
    const std::size_t n = t * static_cast<std::size_t>(hdim);
    x.assign(t, 0.0);
    y.assign(t, 0.0);
    for (auto* v : {&i, &f, &g, &o, &c, &tc, &h}) v->assign(n, 0.0);
  }
};

// z = W [x; h_prev] + b, then the gate nonlinearities and state update.
void cell_forward(const double* p, int H, double x, const double* h_prev, const double* c_prev, double* gi,
                  double* gf, double* gg, double* go, double* c, double* tc, double* h, double* z) {
  const std::size_t cols = 1 + static_cast<std::size_t>(H);
  const double* w = p;
  const double* b = p + 4 * static_cast<std::size_t>(H) * cols;
  for (std::size_t r = 0; r < 4 * static_cast<std::size_t>(H); ++r) {
    const double* row = w + r * cols;
    double acc = b[r] + row[0] * x;
    for (int k = 0; k < H; ++k) acc += row[1 + k] * h_prev[k];
    z[r] = acc;
  }
  for (int k = 0; k < H; ++k) {
    gi[k] = sigmoid(z[k]);
    gf[k] = sigmoid(z[H + k]);
    gg[k] = std::tanh(z[2 * H + k]);
    go[k] = sigmoid(z[3 * H + k]);
    c[k] = gf[k] * c_prev[k] + gi[k] * gg[k];
    tc[k] = std::tanh(c[k]);
    h[k] = go[k] * tc[k];
  }
}

double readout(const double* p, std::size_t off, int H, const double* h) {
  double y = p[off + H];
  for (int k = 0; k < H; ++k) y += p[off + k] * h[k];
  return y;
}

void check_window(std::span<const double> window) {
  if (window.size() < 2) throw std::invalid_argument("lstm: window needs at least two values");
  for (double v : window)
    if (!std::isfinite(v)) throw std::invalid_argument("lstm: non-finite input");
}

double forward_window(const LstmModel& m, std::span<const double> window, Trace& tr) {
  const int H = m.hidden();
  const std::size_t T = window.size() - 1;
  tr.resize(T, H);
  const double* p = m.parameters().data();
  const std::vector<double> zeros(H, 0.0);
  std::vector<double> z(4 * static_cast<std::size_t>(H));
  double loss = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t o = t * H;
    const double* hp = t == 0 ? zeros.data() : &tr.h[o - H];
    const double* cp = t == 0 ? zeros.data() : &tr.c[o - H];
    tr.x[t] = window[t];
    cell_forward(p, H, window[t], hp, cp, &tr.i[o], &tr.f[o], &tr.g[o], &tr.o[o], &tr.c[o], &tr.tc[o], &tr.h[o],
                 z.data());
    tr.y[t] = readout(p, m.readout_offset(), H, &tr.h[o]);
    const double e = tr.y[t] - window[t + 1];
    loss += e * e;
  }
  return loss / static_cast<double>(T);
}

}  // namespace

LstmModel::LstmModel(int hidden) : hidden_(hidden) {
  if (hidden < 1) throw std::invalid_argument("lstm: hidden size must be at least 1");
  const auto H = static_cast<std::size_t>(hidden);
  params_.assign(4 * H * (1 + H) + 4 * H + H + 1, 0.0);
}

void LstmModel::initialize(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_));
  for (std::size_t k = 0; k < gate_bias_offset(); ++k) params_[k] = rng.uniform(-bound, bound);
  for (int k = 0; k < 4 * hidden_; ++k) params_[gate_bias_offset() + k] = k >= hidden_ && k < 2 * hidden_ ? 1.0 : 0.0;
  for (int k = 0; k < hidden_; ++k) params_[readout_offset() + k] = rng.uniform(-bound, bound);
  params_[readout_bias_offset()] = 0.0;
}

LstmCarry LstmCarry::zero(int hidden) {
  return {std::vector<double>(hidden, 0.0), std::vector<double>(hidden, 0.0)};
}

LstmStep lstm_step(const LstmModel& m, double input, const LstmCarry& carry) {
  if (!std::isfinite(input)) throw std::invalid_argument("lstm: non-finite input");
  const int H = m.hidden();
  if (carry.h.size() != static_cast<std::size_t>(H) || carry.c.size() != static_cast<std::size_t>(H))
    throw std::invalid_argument("lstm: carry size does not match the hidden size");
  std::vector<double> gi(H), gf(H), gg(H), go(H), tc(H), z(4 * static_cast<std::size_t>(H));
  LstmStep out;
  out.carry = LstmCarry::zero(H);
  const double* p = m.parameters().data();
  cell_forward(p, H, input, carry.h.data(), carry.c.data(), gi.data(), gf.data(), gg.data(), go.data(),
               out.carry.c.data(), tc.data(), out.carry.h.data(), z.data());
  out.output = readout(p, m.readout_offset(), H, out.carry.h.data());
  return out;
}

std::vector<double> lstm_run(const LstmModel& m, std::span<const double> inputs, LstmCarry& carry) {
  std::vector<double> out;
  out.reserve(inputs.size());
  for (double x : inputs) {
    LstmStep s = lstm_step(m, x, carry);
    out.push_back(s.output);
    carry = std::move(s.carry);
  }
  return out;
}

double lstm_loss(const LstmModel& m, std::span<const double> window) {
  check_window(window);
  Trace tr;
  return forward_window(m, window, tr);
}

LstmGradient lstm_gradients(const LstmModel& m, std::span<const double> window) {
  check_window(window);
  const int H = m.hidden();
  const auto Hs = static_cast<std::size_t>(H);
  const std::size_t cols = 1 + Hs;
  Trace tr;
  LstmGradient out;
  out.loss = forward_window(m, window, tr);
  out.grad.assign(m.parameter_count(), 0.0);

  const double* p = m.parameters().data();
  double* gw = out.grad.data();
  double* gb = gw + m.gate_bias_offset();
  double* gout = gw + m.readout_offset();
  const double* wout = p + m.readout_offset();
  const std::size_t T = tr.steps;
  const double scale = 2.0 / static_cast<double>(T);

  std::vector<double> dh_next(Hs, 0.0), dc_next(Hs, 0.0), dh(Hs), dz(4 * Hs);
  const std::vector<double> zeros(Hs, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    const std::size_t o = t * Hs;
    const double dy = scale * (tr.y[t] - window[t + 1]);
    gw[m.readout_bias_offset()] += dy;
    for (std::size_t k = 0; k < Hs; ++k) {
      gout[k] += dy * tr.h[o + k];
      dh[k] = dy * wout[k] + dh_next[k];
    }
    const double* c_prev = t == 0 ? zeros.data() : &tr.c[o - Hs];
    const double* h_prev = t == 0 ? zeros.data() : &tr.h[o - Hs];
    for (std::size_t k = 0; k < Hs; ++k) {
      const double i = tr.i[o + k], f = tr.f[o + k], g = tr.g[o + k], og = tr.o[o + k], tc = tr.tc[o + k];
      const double dc = dh[k] * og * (1.0 - tc * tc) + dc_next[k];
      dz[k] = dc * g * i * (1.0 - i);
      dz[Hs + k] = dc * c_prev[k] * f * (1.0 - f);
      dz[2 * Hs + k] = dc * i * (1.0 - g * g);
      dz[3 * Hs + k] = dh[k] * tc * og * (1.0 - og);
      dc_next[k] = dc * f;
    }
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    for (std::size_t r = 0; r < 4 * Hs; ++r) {
      const double d = dz[r];
      if (d == 0.0) continue;
      gb[r] += d;
      double* grow = gw + r * cols;
      const double* wrow = p + r * cols;
      grow[0] += d * tr.x[t];
      for (std::size_t k = 0; k < Hs; ++k) {
        grow[1 + k] += d * h_prev[k];
        dh_next[k] += d * wrow[1 + k];
      }
    }
  }
  return out;
}

void LstmHyperparams::validate() const {
  if (hidden < 1) throw std::invalid_argument("lstm: hidden size must be at least 1");
  if (window < 1) throw std::invalid_argument("lstm: window must be at least 1");
  if (stride < 1) throw std::invalid_argument("lstm: stride must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("lstm: learning rate must be positive");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("lstm: clip norm must be positive");
  if (checkpoint_every < 1) throw std::invalid_argument("lstm: checkpoint interval must be at least 1");
}

namespace {

std::vector<double> normalize(std::span<const int> history, double mean, double scale) {
  std::vector<double> z(history.size());
  for (std::size_t t = 0; t < history.size(); ++t) z[t] = (history[t] - mean) / scale;
  return z;
}

}  // namespace

ForecasterState train(std::span<const int> history, const LstmHyperparams& hp, std::uint64_t seed) {
  hp.validate();
  if (history.size() < hp.window + 1)
    throw std::invalid_argument("train: history of " + std::to_string(history.size()) +
                                " frames is shorter than window + 1 = " + std::to_string(hp.window + 1));
  ForecasterState st{LstmModel(hp.hidden), hp, 0.0, 1.0, seed, {}, 0.0};
  double mean = 0.0;
  for (int v : history) mean += v;
  mean /= static_cast<double>(history.size());
  double var = 0.0;
  for (int v : history) var += (v - mean) * (v - mean);
  var /= static_cast<double>(history.size());
  st.norm_mean = mean;
  st.norm_scale = var > 1e-12 ? std::sqrt(var) : 1.0;
  const std::vector<double> z = normalize(history, st.norm_mean, st.norm_scale);

  // Windows anchored at the end so the most recent data is always used.
  std::vector<std::size_t> starts;
  for (std::size_t s = history.size() - (hp.window + 1);; s -= hp.stride) {
    starts.push_back(s);
    if (s < hp.stride) break;
  }
  std::reverse(starts.begin(), starts.end());

  Rng rng(derive_seed(seed, "lstm-init"));
  st.model.initialize(rng);
  auto params = st.model.parameters();
  const std::size_t n = params.size();
  std::vector<double> m1(n, 0.0), m2(n, 0.0);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::size_t step = 0;

  auto window_at = [&](std::size_t s) { return std::span<const double>(z).subspan(s, hp.window + 1); };
  auto full_loss = [&] {
    double total = 0.0;
    for (std::size_t s : starts) total += lstm_loss(st.model, window_at(s));
    const double l = total / static_cast<double>(starts.size());
    if (!std::isfinite(l)) throw std::runtime_error("train: loss became non-finite");
    return l;
  };
  st.checkpoint_losses.push_back(full_loss());

  std::vector<std::size_t> order(starts.size());
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.index(k)]);
    for (std::size_t idx : order) {
      LstmGradient g = lstm_gradients(st.model, window_at(starts[idx]));
      if (!std::isfinite(g.loss))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
      double norm = 0.0;
      for (double v : g.grad) norm += v * v;
      norm = std::sqrt(norm);
      if (!std::isfinite(norm)) throw std::runtime_error("train: non-finite gradient at epoch " + std::to_string(epoch));
      const double clip = norm > hp.clip_norm ? hp.clip_norm / norm : 1.0;
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t k = 0; k < n; ++k) {
        const double gk = g.grad[k] * clip;
        m1[k] = kBeta1 * m1[k] + (1.0 - kBeta1) * gk;
        m2[k] = kBeta2 * m2[k] + (1.0 - kBeta2) * gk * gk;
        params[k] -= hp.learning_rate * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + kEps);
      }
    }
    if ((epoch + 1) % hp.checkpoint_every == 0 || epoch + 1 == hp.epochs) st.checkpoint_losses.push_back(full_loss());
  }
  for (double w : st.model.parameters())
    if (!std::isfinite(w)) throw std::runtime_error("train: non-finite weight after training");
  st.final_mse = st.checkpoint_losses.back() * st.norm_scale * st.norm_scale;
  return st;
}

PointForecast predict_horizon(const ForecasterState& st, std::span<const int> history, std::size_t n) {
  if (n == 0) throw std::invalid_argument("predict_horizon: N must be at least 1");
  if (history.empty()) throw std::invalid_argument("predict_horizon: empty history");
  const std::size_t warm = std::min(st.hyperparams.window, history.size());
  const auto recent = history.subspan(history.size() - warm);
  const std::vector<double> z = normalize(recent, st.norm_mean, st.norm_scale);
  LstmCarry carry = LstmCarry::zero(st.model.hidden());
  double next = lstm_run(st.model, z, carry).back();
  PointForecast out;
  for (std::size_t k = 0; k < n; ++k) {
    const double raw = next * st.norm_scale + st.norm_mean;
    out.raw.push_back(raw);
    out.point.push_back(static_cast<int>(std::lround(std::max(raw, 0.0))));
    if (k + 1 < n) {
      LstmStep s = lstm_step(st.model, next, carry);
      next = s.output;
      carry = std::move(s.carry);
    }
  }
  return out;
}

std::vector<double> in_sample_residuals(const ForecasterState& st, std::span<const int> history) {
  std::vector<double> out;
  if (history.size() < 2) return out;
  const std::vector<double> z = normalize(history, st.norm_mean, st.norm_scale);
  LstmCarry carry = LstmCarry::zero(st.model.hidden());
  const std::vector<double> y = lstm_run(st.model, std::span<const double>(z).first(z.size() - 1), carry);
  for (std::size_t t = st.hyperparams.residual_burn_in; t < y.size(); ++t)
    out.push_back(history[t + 1] - (y[t] * st.norm_scale + st.norm_mean));
  return out;
}

ResidualPmf residual_pmf(std::span<const double> residuals, int estimate) {
  estimate = std::max(estimate, 0);
  if (residuals.size() < kMinResiduals) return {UsagePmf::point(estimate), true};
  std::map<int, std::size_t> counts;
  for (double r : residuals) {
    if (!std::isfinite(r)) throw std::invalid_argument("residual_pmf: non-finite residual");
    const long long v = static_cast<long long>(estimate) + std::llround(r);
    ++counts[static_cast<int>(std::max(v, 0LL))];
  }
  const int lo = counts.begin()->first;
  const int hi = counts.rbegin()->first;
  std::vector<double> mass(static_cast<std::size_t>(hi - lo + 1), 0.0);
  const double n = static_cast<double>(residuals.size());
  for (const auto& [v, c] : counts) mass[static_cast<std::size_t>(v - lo)] = static_cast<double>(c) / n;
  return {UsagePmf(lo, std::move(mass)), false};
}

ResidualPmf residual_pmf(const ForecasterState& st, std::span<const int> history, int estimate) {
  const std::vector<double> res = in_sample_residuals(st, history);
  return residual_pmf(res, estimate);
}

// ---------------------------------------------------------------------------

std::string_view role_name(Role role) {
  switch (role) {
    case Role::Buyer:
      return "buyer";
    case Role::Seller:
      return "seller";
    case Role::Inactive:
      break;
  }
  return "inactive";
}

RoleEntry role_for(int es_id, int estimate, int inherent_rb) {
  if (estimate > inherent_rb) return {es_id, Role::Buyer, estimate - inherent_rb};
  if (estimate < inherent_rb) return {es_id, Role::Seller, inherent_rb - estimate};
  return {es_id, Role::Inactive, 0};
}

RoleAssignment determine_roles(std::span<const UsageForecast> forecasts, std::span<const EdgeServerProfile> profiles) {
  if (forecasts.size() != profiles.size())
    throw std::invalid_argument("determine_roles: one forecast per profile required");
  RoleAssignment out;
  if (forecasts.empty()) return out;
  const std::size_t n = forecasts.front().point.size();
  out.frames.assign(n, {});
  for (std::size_t k = 0; k < forecasts.size(); ++k) {
    if (forecasts[k].es_id != profiles[k].id)
      throw std::invalid_argument("determine_roles: forecast order does not follow profile order");
    if (forecasts[k].point.size() != n)
      throw std::invalid_argument("determine_roles: forecasts cover different horizons");
    for (std::size_t f = 0; f < n; ++f)
      out.frames[f].push_back(role_for(profiles[k].id, forecasts[k].point[f], profiles[k].inherent_rb));
  }
  return out;
}

// ---------------------------------------------------------------------------

UsageForecast LstmForecaster::forecast(const DemandTrace& trace, std::size_t horizon, std::uint64_t seed) const {
  ForecasterState st;
  return forecast(trace, horizon, seed, st);
}

UsageForecast LstmForecaster::forecast(const DemandTrace& trace, std::size_t horizon, std::uint64_t seed,
                                       ForecasterState& st) const {
  st = train(trace.history, hp_, seed);
  const PointForecast pf = predict_horizon(st, trace.history, horizon);
  const std::vector<double> res = in_sample_residuals(st, trace.history);
  UsageForecast out{trace.es_id, pf.point, pf.raw, {}, false};
  for (int est : pf.point) {
    ResidualPmf r = residual_pmf(res, est);
    out.pmf_fallback = out.pmf_fallback || r.fallback;
    out.pmf.push_back(std::move(r.pmf));
  }
  return out;
}

std::vector<int> seasonal_naive(std::span<const int> history, int period, std::size_t n) {
  if (period < 1) throw std::invalid_argument("seasonal_naive: period must be at least 1");
  const auto p = static_cast<std::size_t>(period);
  if (history.size() < p) throw std::invalid_argument("seasonal_naive: history shorter than one period");
  std::vector<int> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(history[history.size() - p + k % p]);
  return out;
}

SeasonalNaiveForecaster::SeasonalNaiveForecaster(int period) : period_(period) {
  if (period < 1) throw std::invalid_argument("seasonal-naive: period must be at least 1");
}

UsageForecast SeasonalNaiveForecaster::forecast(const DemandTrace& trace, std::size_t horizon, std::uint64_t) const {
  if (horizon == 0) throw std::invalid_argument("forecast: horizon must be at least 1");
  UsageForecast out;
  out.es_id = trace.es_id;
  out.point = seasonal_naive(trace.history, period_, horizon);
  out.raw.assign(out.point.begin(), out.point.end());
  std::vector<double> res;
  for (std::size_t t = static_cast<std::size_t>(period_); t < trace.history.size(); ++t)
    res.push_back(trace.history[t] - trace.history[t - period_]);
  for (int est : out.point) {
    ResidualPmf r = residual_pmf(res, est);
    out.pmf_fallback = out.pmf_fallback || r.fallback;
    out.pmf.push_back(std::move(r.pmf));
  }
  return out;
}

UsagePmf discretized_normal(int center, double sd) {
  if (!std::isfinite(sd) || sd < 0.0) throw std::invalid_argument("discretized_normal: sd must be non-negative");
  center = std::max(center, 0);
  if (sd == 0.0) return UsagePmf::point(center);
  const int reach = static_cast<int>(std::ceil(4.0 * sd));
  const auto cdf = [&](double x) { return 0.5 * std::erfc(-x / (sd * std::sqrt(2.0))); };
  std::map<int, double> folded;
  double total = 0.0;
  for (int r = -reach; r <= reach; ++r) {
    const double p = cdf(r + 0.5) - cdf(r - 0.5);
    folded[std::max(center + r, 0)] += p;
    total += p;
  }
  const int lo = folded.begin()->first;
  std::vector<double> mass(static_cast<std::size_t>(folded.rbegin()->first - lo + 1), 0.0);
  for (const auto& [v, p] : folded) mass[static_cast<std::size_t>(v - lo)] = p / total;
  return UsagePmf(lo, std::move(mass));
}

OracleForecaster::OracleForecaster(double noise_sd) : noise_sd_(noise_sd) {
  if (!std::isfinite(noise_sd) || noise_sd < 0.0) throw std::invalid_argument("oracle: noise sd must be non-negative");
}

UsageForecast OracleForecaster::forecast(const DemandTrace& trace, std::size_t horizon, std::uint64_t seed) const {
  if (horizon == 0) throw std::invalid_argument("forecast: horizon must be at least 1");
  if (trace.future.size() < horizon) throw std::invalid_argument("oracle: trace future shorter than the horizon");
  Rng rng(derive_seed(seed, "oracle-noise"));
  UsageForecast out;
  out.es_id = trace.es_id;
  for (std::size_t k = 0; k < horizon; ++k) {
    double raw = trace.future[k];
    if (noise_sd_ > 0.0) raw += rng.normal(0.0, noise_sd_);
    const int est = static_cast<int>(std::lround(std::max(raw, 0.0)));
    out.raw.push_back(raw);
    out.point.push_back(est);
    out.pmf.push_back(discretized_normal(est, noise_sd_));
  }
  return out;
}

std::vector<UsageForecast> forecast_all(const Scenario& sc, const Forecaster& forecaster) {
  std::vector<UsageForecast> out(sc.traces.size());
  parallel_for(sc.traces.size(), [&](std::size_t k) {
    out[k] = forecaster.forecast(sc.traces[k], sc.horizon, derive_seed(sc.rng_seed, "forecast", k));
  });
  return out;
}

std::vector<UsageForecast> forecast_all(const Scenario& sc, const LstmForecaster& forecaster,
                                        std::vector<ForecasterState>& states) {
  std::vector<UsageForecast> out(sc.traces.size());
  states.assign(sc.traces.size(), ForecasterState{});
  parallel_for(sc.traces.size(), [&](std::size_t k) {
    out[k] = forecaster.forecast(sc.traces[k], sc.horizon, derive_seed(sc.rng_seed, "forecast", k), states[k]);
  });
  return out;
}

std::unique_ptr<Forecaster> make_forecaster(std::string_view name, const Scenario& sc) {
  if (name == "lstm") return std::make_unique<LstmForecaster>();
  if (name == "seasonal-naive") return std::make_unique<SeasonalNaiveForecaster>(sc.frames_per_day());
  if (name == "oracle") return std::make_unique<OracleForecaster>(0.0);
  if (name.rfind("oracle-noise", 0) == 0) {
    double sd = 2.0;
    if (name.size() > 12) {
      if (name[12] != ':') throw std::invalid_argument("unknown forecaster '" + std::string(name) + "'");
      const auto tail = name.substr(13);
      const auto res = std::from_chars(tail.data(), tail.data() + tail.size(), sd);
      if (res.ec != std::errc() || res.ptr != tail.data() + tail.size())
        throw std::invalid_argument("bad oracle noise in '" + std::string(name) + "'");
    }
    return std::make_unique<OracleForecaster>(sd);
  }
  throw std::invalid_argument("unknown forecaster '" + std::string(name) + "'");
}

}  // namespace latrade
