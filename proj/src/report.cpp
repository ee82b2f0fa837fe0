#include "latrade/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <tuple>

#include "json.hpp"
#include "latrade/metrics.hpp"

namespace latrade {

using nlohmann::json;

Format parse_format(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "csv") return Format::Csv;
  if (lower == "json") return Format::Json;
  throw std::invalid_argument("unknown format '" + std::string(name) + "' (expected csv or json)");
}

std::string_view format_name(Format format) { return format == Format::Csv ? "csv" : "json"; }

namespace {

double round_to(double x, double scale) {
  if (!std::isfinite(x)) return x;
  const double r = std::round(x * scale) / scale;
  return r == 0.0 ? 0.0 : r;  // no negative zero in the output
}

std::string fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x == 0.0 ? 0.0 : x);
  return buf;
}

std::string cur(double x) { return fixed(round_currency(x), 6); }
std::string wh(double x) { return fixed(round_energy(x), 3); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  out.push_back(cell);
  return out;
}

double to_double(const std::string& s, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw std::runtime_error(std::string("bad ") + what + " value '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s, const char* what) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw std::runtime_error(std::string("bad ") + what + " value '" + s + "'");
  return v;
}

// Reads a header and the data rows of a table with the given columns.
std::vector<std::vector<std::string>> read_table(std::istream& in, const std::vector<std::string>& columns) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty table");
  if (split_csv_line(line) != columns) throw std::runtime_error("unexpected header '" + line + "'");
  std::vector<std::vector<std::string>> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != columns.size())
      throw std::runtime_error("line " + std::to_string(n) + ": expected " + std::to_string(columns.size()) +
                               " fields");
    rows.push_back(std::move(cells));
  }
  return rows;
}

const std::vector<std::string> kFrameColumns = {"strategy",       "seed",     "frame",       "welfare",
                                                "buyer_utility",  "seller_utility", "res_util", "energy_util",
                                                "latency_ms"};
const std::vector<std::string> kSummaryColumns = {"strategy", "seed", "welfare", "res_util", "energy_util",
                                                  "latency_ms_mean"};

template <typename Fn>
void write_file(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  fn(out);
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

json frame_json(const FrameMetrics& f) {
  return {{"strategy", f.strategy},         {"seed", f.seed},
          {"frame", f.frame},               {"welfare", f.welfare},
          {"buyer_utility", f.buyer_utility}, {"seller_utility", f.seller_utility},
          {"res_util", f.res_util},         {"energy_util", f.energy_util},
          {"latency_ms", f.latency_ms}};
}

json run_summary_json(const RunSummary& r) {
  return {{"strategy", r.strategy},
          {"seed", r.seed},
          {"welfare", r.welfare},
          {"res_util", r.res_util},
          {"energy_util", r.energy_util},
          {"latency_ms_mean", r.latency_ms_mean},
          {"latency_ms_p50", r.latency_ms_p50},
          {"latency_ms_p95", r.latency_ms_p95},
          {"buyer_utility", r.buyer_utility},
          {"seller_utility", r.seller_utility}};
}

}  // namespace

double round_currency(double x) { return round_to(x, 1e6); }
double round_energy(double x) { return round_to(x, 1e3); }

ScenarioMeta scenario_meta(const Scenario& sc) {
  return {sc.servers.size(), sc.horizon, sc.frame_hours, sc.alpha, sc.lambda};
}

MetricsReport build_report(std::span<const RunResult> results, const ScenarioMeta& meta) {
  MetricsReport rep;
  rep.scenario = meta;
  for (const auto& run : results) {
    RunSummary s;
    s.strategy = run.strategy;
    s.seed = run.seed;
    s.welfare = round_currency(run.cumulative_welfare);
    s.res_util = round_currency(run.resource_utilization);
    s.energy_util = round_currency(run.energy_utilization);
    s.latency_ms_mean = round_currency(run.latency.mean_ms);
    s.latency_ms_p50 = round_currency(run.latency.p50_ms);
    s.latency_ms_p95 = round_currency(run.latency.p95_ms);
    double buyers = 0.0, sellers = 0.0;
    for (std::size_t n = 0; n < run.executions.size(); ++n) {
      const FrameExecution& ex = run.executions[n];
      FrameMetrics f;
      f.strategy = run.strategy;
      f.seed = run.seed;
      f.frame = ex.frame;
      double b = 0.0, sl = 0.0, total = 0.0;
      for (const auto& o : ex.outcomes) {
        total += o.utility.total;
        if (o.role == Role::Buyer) b += o.utility.total;
        if (o.role == Role::Seller) sl += o.utility.total;
      }
      f.welfare = round_currency(n < run.frame_welfare.size() ? run.frame_welfare[n] : total);
      f.buyer_utility = round_currency(b);
      f.seller_utility = round_currency(sl);
      if (n < run.frame_utilization.size()) {
        f.res_util = round_currency(run.frame_utilization[n].resource);
        f.energy_util = round_currency(run.frame_utilization[n].energy);
      }
      f.latency_ms = round_currency(n < run.frame_latency_ms.size() ? run.frame_latency_ms[n] : ex.latency_ms);
      buyers += b;
      sellers += sl;
      rep.frames.push_back(std::move(f));
    }
    s.buyer_utility = round_currency(buyers);
    s.seller_utility = round_currency(sellers);
    rep.runs.push_back(s);
  }
  const auto frame_key = [](const FrameMetrics& f) { return std::tie(f.strategy, f.seed, f.frame); };
  std::stable_sort(rep.frames.begin(), rep.frames.end(),
                   [&](const FrameMetrics& a, const FrameMetrics& b) { return frame_key(a) < frame_key(b); });
  std::stable_sort(rep.runs.begin(), rep.runs.end(), [](const RunSummary& a, const RunSummary& b) {
    return std::tie(a.strategy, a.seed) < std::tie(b.strategy, b.seed);
  });
  return rep;
}

void write_report(std::ostream& out, const MetricsReport& rep, Format format) {
  if (format == Format::Json) {
    json frames = json::array();
    for (const auto& f : rep.frames) frames.push_back(frame_json(f));
    json runs = json::array();
    for (const auto& r : rep.runs) runs.push_back(run_summary_json(r));
    const json doc = {{"schema", "latrade.metrics/v1"},
                      {"scenario",
                       {{"servers", rep.scenario.servers},
                        {"horizon", rep.scenario.horizon},
                        {"frame_hours", rep.scenario.frame_hours},
                        {"alpha", rep.scenario.alpha},
                        {"lambda", rep.scenario.lambda}}},
                      {"frames", frames},
                      {"runs", runs}};
    out << doc.dump(2) << '\n';
    return;
  }
  out << "strategy,seed,frame,welfare,buyer_utility,seller_utility,res_util,energy_util,latency_ms\n";
  for (const auto& f : rep.frames)
    out << f.strategy << ',' << f.seed << ',' << f.frame << ',' << cur(f.welfare) << ',' << cur(f.buyer_utility)
        << ',' << cur(f.seller_utility) << ',' << cur(f.res_util) << ',' << cur(f.energy_util) << ','
        << cur(f.latency_ms) << '\n';
}

void write_summary(std::ostream& out, const MetricsReport& rep, Format format) {
  if (format == Format::Json) {
    json runs = json::array();
    for (const auto& r : rep.runs) runs.push_back(run_summary_json(r));
    out << runs.dump(2) << '\n';
    return;
  }
  out << "strategy,seed,welfare,res_util,energy_util,latency_ms_mean\n";
  for (const auto& r : rep.runs)
    out << r.strategy << ',' << r.seed << ',' << cur(r.welfare) << ',' << cur(r.res_util) << ','
        << cur(r.energy_util) << ',' << cur(r.latency_ms_mean) << '\n';
}

void emit_report(const MetricsReport& rep, Format format, const std::filesystem::path& path) {
  write_file(path, [&](std::ostream& out) { write_report(out, rep, format); });
}

void emit_summary(const MetricsReport& rep, Format format, const std::filesystem::path& path) {
  write_file(path, [&](std::ostream& out) { write_summary(out, rep, format); });
}

std::vector<FrameMetrics> read_frame_metrics_csv(std::istream& in) {
  std::vector<FrameMetrics> out;
  for (const auto& c : read_table(in, kFrameColumns)) {
    FrameMetrics f;
    f.strategy = c[0];
    f.seed = to_u64(c[1], "seed");
    f.frame = static_cast<std::size_t>(to_u64(c[2], "frame"));
    f.welfare = to_double(c[3], "welfare");
    f.buyer_utility = to_double(c[4], "buyer_utility");
    f.seller_utility = to_double(c[5], "seller_utility");
    f.res_util = to_double(c[6], "res_util");
    f.energy_util = to_double(c[7], "energy_util");
    f.latency_ms = to_double(c[8], "latency_ms");
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<RunSummary> read_summary_csv(std::istream& in) {
  std::vector<RunSummary> out;
  for (const auto& c : read_table(in, kSummaryColumns)) {
    RunSummary r;
    r.strategy = c[0];
    r.seed = to_u64(c[1], "seed");
    r.welfare = to_double(c[2], "welfare");
    r.res_util = to_double(c[3], "res_util");
    r.energy_util = to_double(c[4], "energy_util");
    r.latency_ms_mean = to_double(c[5], "latency_ms_mean");
    out.push_back(std::move(r));
  }
  return out;
}

MetricsReport read_report_json(std::istream& in) {
  try {
    const json doc = json::parse(in);
    if (doc.at("schema") != "latrade.metrics/v1") throw std::runtime_error("unexpected metrics schema");
    MetricsReport rep;
    const json& m = doc.at("scenario");
    rep.scenario = {m.at("servers").get<std::size_t>(), m.at("horizon").get<std::size_t>(),
                    m.at("frame_hours").get<double>(), m.at("alpha").get<double>(), m.at("lambda").get<double>()};
    for (const json& f : doc.at("frames")) {
      rep.frames.push_back({f.at("strategy").get<std::string>(), f.at("seed").get<std::uint64_t>(),
                            f.at("frame").get<std::size_t>(), f.at("welfare").get<double>(),
                            f.at("buyer_utility").get<double>(), f.at("seller_utility").get<double>(),
                            f.at("res_util").get<double>(), f.at("energy_util").get<double>(),
                            f.at("latency_ms").get<double>()});
    }
    for (const json& r : doc.at("runs")) {
      rep.runs.push_back({r.at("strategy").get<std::string>(), r.at("seed").get<std::uint64_t>(),
                          r.at("welfare").get<double>(), r.at("res_util").get<double>(),
                          r.at("energy_util").get<double>(), r.at("latency_ms_mean").get<double>(),
                          r.at("latency_ms_p50").get<double>(), r.at("latency_ms_p95").get<double>(),
                          r.at("buyer_utility").get<double>(), r.at("seller_utility").get<double>()});
    }
    return rep;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("metrics json: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

void write_scenario_json(std::ostream& out, const Scenario& sc) {
  json servers = json::array();
  for (const auto& p : sc.servers) {
    servers.push_back({{"id", p.id},
                       {"x_m", p.position.x_m},
                       {"y_m", p.position.y_m},
                       {"coverage_radius_m", p.coverage_radius_m},
                       {"inherent_rb", p.inherent_rb},
                       {"eta_use_w", p.eta_use_w},
                       {"eta_idle_w", p.eta_idle_w},
                       {"omega", p.omega},
                       {"internal_revenue", p.internal_revenue},
                       {"seller_penalty", p.seller_penalty},
                       {"true_ask", p.true_ask}});
  }
  json traces = json::array();
  for (const auto& t : sc.traces) traces.push_back({{"es_id", t.es_id}, {"history", t.history}, {"future", t.future}});
  const json doc = {{"schema", kScenarioSchema},  {"frame_hours", sc.frame_hours}, {"horizon", sc.horizon},
                    {"alpha", sc.alpha},          {"lambda", sc.lambda},           {"rng_seed", sc.rng_seed},
                    {"servers", servers},         {"traces", traces}};
  out << doc.dump(1) << '\n';
}

Scenario read_scenario_json(std::istream& in) {
  Scenario sc;
  try {
    const json doc = json::parse(in);
    if (doc.at("schema") != kScenarioSchema) throw std::runtime_error("unexpected scenario schema");
    sc.frame_hours = doc.at("frame_hours").get<double>();
    sc.horizon = doc.at("horizon").get<std::size_t>();
    sc.alpha = doc.at("alpha").get<double>();
    sc.lambda = doc.at("lambda").get<double>();
    sc.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
    for (const json& s : doc.at("servers")) {
      EdgeServerProfile p;
      p.id = s.at("id").get<int>();
      p.position = {s.at("x_m").get<double>(), s.at("y_m").get<double>()};
      p.coverage_radius_m = s.at("coverage_radius_m").get<double>();
      p.inherent_rb = s.at("inherent_rb").get<int>();
      p.eta_use_w = s.at("eta_use_w").get<double>();
      p.eta_idle_w = s.at("eta_idle_w").get<double>();
      p.omega = s.at("omega").get<double>();
      p.internal_revenue = s.at("internal_revenue").get<double>();
      p.seller_penalty = s.at("seller_penalty").get<double>();
      p.true_ask = s.at("true_ask").get<double>();
      sc.servers.push_back(p);
    }
    for (const json& t : doc.at("traces")) {
      sc.traces.push_back({t.at("es_id").get<int>(), t.at("history").get<std::vector<int>>(),
                           t.at("future").get<std::vector<int>>()});
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("scenario json: ") + e.what());
  }
  sc.validate();
  return sc;
}

void save_scenario(const Scenario& sc, const std::filesystem::path& path) {
  write_file(path, [&](std::ostream& out) { write_scenario_json(out, sc); });
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_scenario_json(in);
}

// ---------------------------------------------------------------------------

void write_forecasts_csv(std::ostream& out, std::span<const UsageForecast> forecasts) {
  out << "es_id,frame,point,pmf_lowest,pmf_json\n";
  for (const auto& f : forecasts) {
    for (std::size_t n = 0; n < f.point.size(); ++n) {
      out << f.es_id << ',' << n << ',' << f.point[n] << ',';
      if (n < f.pmf.size()) {
        json a = json::array();
        for (double m : f.pmf[n].mass()) a.push_back(round_currency(m));
        out << f.pmf[n].lowest() << ",\"" << a.dump() << '"';
      } else {
        out << ",";
      }
      out << '\n';
    }
  }
}

void write_forecaster_states_json(std::ostream& out, std::span<const int> es_ids,
                                  std::span<const ForecasterState> states) {
  if (es_ids.size() != states.size()) throw std::invalid_argument("forecaster states: one id per state required");
  json arr = json::array();
  for (std::size_t k = 0; k < states.size(); ++k) {
    const ForecasterState& st = states[k];
    const LstmHyperparams& hp = st.hyperparams;
    arr.push_back({{"es_id", es_ids[k]},
                   {"hidden", hp.hidden},
                   {"window", hp.window},
                   {"epochs", hp.epochs},
                   {"learning_rate", hp.learning_rate},
                   {"clip_norm", hp.clip_norm},
                   {"stride", hp.stride},
                   {"checkpoint_every", hp.checkpoint_every},
                   {"residual_burn_in", hp.residual_burn_in},
                   {"norm_mean", st.norm_mean},
                   {"norm_scale", st.norm_scale},
                   {"seed", st.seed},
                   {"checkpoint_losses", st.checkpoint_losses},
                   {"final_mse", st.final_mse},
                   {"parameters", std::vector<double>(st.model.parameters().begin(), st.model.parameters().end())}});
  }
  out << json{{"schema", "latrade.lstm/v1"}, {"models", arr}}.dump(1) << '\n';
}

std::vector<ForecasterState> read_forecaster_states_json(std::istream& in) {
  std::vector<ForecasterState> out;
  try {
    const json doc = json::parse(in);
    if (doc.at("schema") != "latrade.lstm/v1") throw std::runtime_error("unexpected model schema");
    for (const json& m : doc.at("models")) {
      ForecasterState st;
      LstmHyperparams& hp = st.hyperparams;
      hp.hidden = m.at("hidden").get<int>();
      hp.window = m.at("window").get<std::size_t>();
      hp.epochs = m.at("epochs").get<std::size_t>();
      hp.learning_rate = m.at("learning_rate").get<double>();
      hp.clip_norm = m.at("clip_norm").get<double>();
      hp.stride = m.at("stride").get<std::size_t>();
      hp.checkpoint_every = m.at("checkpoint_every").get<std::size_t>();
      hp.residual_burn_in = m.at("residual_burn_in").get<std::size_t>();
      hp.validate();
      st.model = LstmModel(hp.hidden);
      const auto params = m.at("parameters").get<std::vector<double>>();
      if (params.size() != st.model.parameter_count())
        throw std::runtime_error("model parameter count does not match the hidden size");
      std::copy(params.begin(), params.end(), st.model.parameters().begin());
      st.norm_mean = m.at("norm_mean").get<double>();
      st.norm_scale = m.at("norm_scale").get<double>();
      st.seed = m.at("seed").get<std::uint64_t>();
      st.checkpoint_losses = m.at("checkpoint_losses").get<std::vector<double>>();
      st.final_mse = m.at("final_mse").get<double>();
      out.push_back(std::move(st));
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model json: ") + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_contracts_csv(std::ostream& out, std::span<const ContractSet> sets) {
  out << "frame,buyer,seller,qty,p_pair,pB,pS,qB,qS,c\n";
  for (const auto& set : sets)
    for (const auto& c : set.contracts)
      out << set.frame << ',' << c.buyer_id << ',' << c.seller_id << ',' << c.quantity << ',' << cur(c.pair_price)
          << ',' << cur(c.buyer_price) << ',' << cur(c.seller_price) << ',' << cur(c.buyer_penalty) << ','
          << cur(c.seller_penalty) << ',' << cur(c.transmission_cost) << '\n';
}

void write_contracts_json(std::ostream& out, std::span<const ContractSet> sets) {
  json docs = json::array();
  for (const auto& set : sets) {
    json contracts = json::array();
    for (const auto& c : set.contracts) {
      contracts.push_back({{"buyer", c.buyer_id},
                           {"seller", c.seller_id},
                           {"qty", c.quantity},
                           {"p_pair", round_currency(c.pair_price)},
                           {"pB", round_currency(c.buyer_price)},
                           {"pS", round_currency(c.seller_price)},
                           {"qB", round_currency(c.buyer_penalty)},
                           {"qS", round_currency(c.seller_penalty)},
                           {"c", round_currency(c.transmission_cost)},
                           {"ask", round_currency(c.ask)},
                           {"bid", round_currency(c.bid)}});
    }
    json roles = json::array();
    for (const auto& r : set.roles)
      roles.push_back({{"es_id", r.es_id}, {"role", std::string(role_name(r.role))}, {"quantity", r.quantity}});
    docs.push_back({{"frame", set.frame},
                    {"expected_welfare", round_currency(set.expected_welfare)},
                    {"roles", roles},
                    {"contracts", contracts}});
  }
  out << docs.dump(1) << '\n';
}

void write_executions_csv(std::ostream& out, std::span<const FrameExecution> executions) {
  out << "frame,es_id,role,r_act,r_tra,theta,u1,u2,u3,u4,total,active_wh,idle_wh\n";
  for (const auto& ex : executions)
    for (const auto& o : ex.outcomes)
      out << ex.frame << ',' << o.es_id << ',' << role_name(o.role) << ',' << o.r_act << ',' << o.r_tra << ','
          << o.theta << ',' << cur(o.utility.u1) << ',' << cur(o.utility.u2) << ',' << cur(o.utility.u3) << ','
          << cur(o.utility.u4) << ',' << cur(o.utility.total) << ',' << wh(o.energy.active_wh) << ','
          << wh(o.energy.idle_wh) << '\n';
}

void write_run_json(std::ostream& out, const RunResult& run) {
  std::vector<double> welfare, utility, latency;
  for (double w : run.frame_welfare) welfare.push_back(round_currency(w));
  for (double u : run.es_utility) utility.push_back(round_currency(u));
  for (double l : run.frame_latency_ms) latency.push_back(round_currency(l));
  const json doc = {{"strategy", run.strategy},
                    {"seed", run.seed},
                    {"cumulative_welfare", round_currency(run.cumulative_welfare)},
                    {"frame_welfare", welfare},
                    {"es_utility", utility},
                    {"resource_utilization", round_currency(run.resource_utilization)},
                    {"energy_utilization", round_currency(run.energy_utilization)},
                    {"latency_ms",
                     {{"mean", round_currency(run.latency.mean_ms)},
                      {"p50", round_currency(run.latency.p50_ms)},
                      {"p95", round_currency(run.latency.p95_ms)},
                      {"samples", run.latency.samples}}},
                    {"frame_latency_ms", latency},
                    {"stage1_ms", round_currency(run.stage1_ms)}};
  out << doc.dump(2) << '\n';
}

void write_property_reports_json(std::ostream& out, std::span<const PropertyReport* const> reports) {
  json arr = json::array();
  for (const PropertyReport* r : reports) {
    arr.push_back({{"name", r->name},
                   {"hard", r->hard},
                   {"trials", r->trials},
                   {"violations", r->violations},
                   {"rate", round_currency(r->rate())},
                   {"worst_margin", std::isfinite(r->worst_margin) ? json(round_currency(r->worst_margin)) : json()},
                   {"repro_seeds", r->repro_seeds},
                   {"details", r->details}});
  }
  out << arr.dump(2) << '\n';
}

}  // namespace latrade
