#include "latrade/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

#include "latrade/rng.hpp"

namespace latrade {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

void check_range(const Range& r, const char* name, bool allow_zero_lo = true) {
  require(std::isfinite(r.lo) && std::isfinite(r.hi), std::string(name) + ": non-finite bound");
  require(r.lo <= r.hi, std::string(name) + ": lo > hi");
  require(allow_zero_lo ? r.lo >= 0.0 : r.lo > 0.0,
          std::string(name) + (allow_zero_lo ? ": negative bound" : ": bound must be positive"));
}

// Monetary and power parameters shared by the synthetic and detector paths.
struct Economics {
  double revenue;
  double eta_idle;
  double eta_use;
  double omega;
  double seller_penalty;
  double true_ask;
};

Economics sample_economics(Rng& rng, const SyntheticOptions& o, std::size_t n_servers,
                           double frame_hours) {
  const Range omega = o.omega.value_or(n_servers <= 40 ? Range{0.2, 0.3} : Range{0.1, 0.2});
  // Idle loss is quoted in currency per idle RB-hour and mapped into watts
  // through lambda, so lambda * eta_idle reproduces it.
  const double lambda_ref = o.lambda > 0.0 ? o.lambda : 0.001;
  Economics e{};
  e.revenue = rng.uniform(o.revenue.lo, o.revenue.hi);
  const double idle_loss = rng.uniform(o.idle_loss.lo, o.idle_loss.hi);
  const double ratio = rng.uniform(o.active_power_ratio.lo, o.active_power_ratio.hi);
  const double markup = rng.uniform(o.ask_markup.lo, o.ask_markup.hi);
  e.omega = rng.uniform(omega.lo, omega.hi);
  e.eta_idle = idle_loss / lambda_ref;
  e.eta_use = e.eta_idle * ratio;
  e.seller_penalty = idle_loss * frame_hours;
  e.true_ask = idle_loss * ratio * markup * frame_hours;
  return e;
}

int truncated_normal_rb(Rng& rng, double mean, double variance) {
  if (variance <= 0.0) return static_cast<int>(std::lround(std::max(mean, 0.0)));
  const double sd = std::sqrt(variance);
  double x = rng.normal(mean, sd);
  while (x < 0.0) x = rng.normal(mean, sd);
  return static_cast<int>(std::lround(x));
}

}  // namespace

double distance_m(const Position& a, const Position& b) {
  return std::hypot(a.x_m - b.x_m, a.y_m - b.y_m);
}

void EdgeServerProfile::validate() const {
  const std::string tag = "server " + std::to_string(id) + ": ";
  require(std::isfinite(position.x_m) && std::isfinite(position.y_m), tag + "position not finite");
  require(std::isfinite(coverage_radius_m) && coverage_radius_m > 0.0,
          tag + "coverage_radius must be positive");
  require(inherent_rb >= 0, tag + "inherent_rb must be non-negative");
  require(finite_nonneg(eta_idle_w), tag + "eta_idle must be non-negative");
  require(std::isfinite(eta_use_w) && eta_use_w > eta_idle_w, tag + "eta_use must exceed eta_idle");
  require(std::isfinite(omega) && omega > 0.0, tag + "omega must be positive");
  require(finite_nonneg(internal_revenue), tag + "internal_revenue must be non-negative");
  require(finite_nonneg(seller_penalty), tag + "seller_penalty must be non-negative");
  require(finite_nonneg(true_ask), tag + "true_ask must be non-negative");
}

void DemandTrace::validate() const {
  const std::string tag = "trace " + std::to_string(es_id) + ": ";
  for (int v : history) require(v >= 0, tag + "negative history entry");
  for (int v : future) require(v >= 0, tag + "negative future entry");
}

void Scenario::validate() const {
  require(traces.size() == servers.size(), "scenario: one trace per server required");
  require(horizon >= 1, "scenario: horizon must be at least 1");
  require(std::isfinite(frame_hours) && frame_hours > 0.0, "scenario: frame duration must be positive");
  require(std::isfinite(alpha) && alpha > 0.0, "scenario: alpha must be positive");
  require(std::isfinite(lambda) && lambda >= 0.0, "scenario: lambda must be non-negative");
  std::set<int> ids;
  for (std::size_t k = 0; k < servers.size(); ++k) {
    servers[k].validate();
    require(ids.insert(servers[k].id).second, "scenario: duplicate server id " + std::to_string(servers[k].id));
    require(traces[k].es_id == servers[k].id, "scenario: trace order does not follow server order");
    traces[k].validate();
    require(traces[k].future.size() >= horizon,
            "scenario: trace " + std::to_string(traces[k].es_id) + " shorter than the horizon");
  }
}

int Scenario::frames_per_day() const {
  return std::max(1, static_cast<int>(std::lround(24.0 / frame_hours)));
}

std::vector<int> Scenario::realized(std::size_t frame) const {
  std::vector<int> out;
  out.reserve(traces.size());
  for (const auto& t : traces) out.push_back(t.future.at(frame));
  return out;
}

std::size_t Scenario::index_of(int es_id) const {
  for (std::size_t k = 0; k < servers.size(); ++k)
    if (servers[k].id == es_id) return k;
  throw std::invalid_argument("unknown server id " + std::to_string(es_id));
}

void SyntheticOptions::validate() const {
  require(std::isfinite(area_km2_at_10) && area_km2_at_10 > 0.0, "area_km2_at_10 must be positive");
  require(std::isfinite(area_km2_at_50) && area_km2_at_50 > 0.0, "area_km2_at_50 must be positive");
  check_range(radius_m, "radius_m", false);
  require(r_in_min >= 0 && r_in_min <= r_in_max, "r_in range invalid");
  check_range(demand_variance, "demand_variance");
  check_range(revenue, "revenue");
  check_range(idle_loss, "idle_loss", false);
  check_range(active_power_ratio, "active_power_ratio", false);
  require(active_power_ratio.lo > 1.0, "active_power_ratio must exceed 1");
  check_range(ask_markup, "ask_markup");
  if (omega) check_range(*omega, "omega", false);
  require(std::isfinite(diurnal_amplitude) && diurnal_amplitude >= 0.0 && diurnal_amplitude <= 1.0,
          "diurnal_amplitude must lie in [0, 1]");
  require(std::isfinite(phase_spread) && phase_spread >= 0.0 && phase_spread <= 1.0,
          "phase_spread must lie in [0, 1]");
  require(horizon >= 1, "horizon must be at least 1");
  require(std::isfinite(frame_hours) && frame_hours > 0.0, "frame_hours must be positive");
  require(std::isfinite(alpha) && alpha > 0.0, "alpha must be positive");
  require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be non-negative");
}

double synthetic_area_km2(std::size_t n_servers, const SyntheticOptions& o) {
  const double n = std::clamp(static_cast<double>(n_servers), 10.0, 50.0);
  return o.area_km2_at_10 + (o.area_km2_at_50 - o.area_km2_at_10) * (n - 10.0) / 40.0;
}

double synthetic_mean_demand(int inherent_rb, double amplitude, double phase, int period,
                             std::size_t t) {
  const double angle = 2.0 * std::numbers::pi * (static_cast<double>(t) + phase) / period;
  return inherent_rb * (1.0 + amplitude * std::sin(angle));
}

Scenario generate_synthetic(std::size_t n_servers, std::uint64_t rng_seed, const SyntheticOptions& o) {
  require(n_servers >= 1, "generate_synthetic: n_servers must be at least 1");
  o.validate();

  Scenario sc;
  sc.frame_hours = o.frame_hours;
  sc.horizon = o.horizon;
  sc.alpha = o.alpha;
  sc.lambda = o.lambda;
  sc.rng_seed = rng_seed;
  const int period = sc.frames_per_day();
  const double side_m = std::sqrt(synthetic_area_km2(n_servers, o)) * 1000.0;

  Rng rng(derive_seed(rng_seed, "profiles"));
  std::vector<double> variance(n_servers);
  std::vector<double> phase(n_servers);
  for (std::size_t k = 0; k < n_servers; ++k) {
    EdgeServerProfile p;
    p.id = static_cast<int>(k);
    p.position = {rng.uniform(0.0, side_m), rng.uniform(0.0, side_m)};
    p.coverage_radius_m = rng.uniform(o.radius_m.lo, o.radius_m.hi);
    p.inherent_rb = static_cast<int>(rng.uniform_int(o.r_in_min, o.r_in_max));
    variance[k] = rng.uniform(o.demand_variance.lo, o.demand_variance.hi);
    phase[k] = rng.uniform(0.0, o.phase_spread * period);
    const Economics e = sample_economics(rng, o, n_servers, o.frame_hours);
    p.internal_revenue = e.revenue;
    p.eta_idle_w = e.eta_idle;
    p.eta_use_w = e.eta_use;
    p.omega = e.omega;
    p.seller_penalty = e.seller_penalty;
    p.true_ask = e.true_ask;
    sc.servers.push_back(p);
  }

  const std::size_t total = o.history_frames + o.horizon;
  for (std::size_t k = 0; k < n_servers; ++k) {
    Rng demand_rng(derive_seed(rng_seed, "demand", k));
    DemandTrace tr;
    tr.es_id = sc.servers[k].id;
    tr.history.reserve(o.history_frames);
    tr.future.reserve(o.horizon);
    for (std::size_t t = 0; t < total; ++t) {
      const double mean =
          synthetic_mean_demand(sc.servers[k].inherent_rb, o.diurnal_amplitude, phase[k], period, t);
      const int rb = truncated_normal_rb(demand_rng, mean, variance[k]);
      (t < o.history_frames ? tr.history : tr.future).push_back(rb);
    }
    sc.traces.push_back(std::move(tr));
  }
  sc.validate();
  return sc;
}

// ---------------------------------------------------------------------------
// Detector CSV

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, long long& out) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

bool is_leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

}  // namespace

std::int64_t parse_iso8601(const std::string& text) {
  const std::string_view s = trim(text);
  auto fail = [&]() -> std::int64_t {
    throw std::invalid_argument("malformed timestamp '" + std::string(s) + "'");
  };
  auto digits = [&](std::size_t pos, std::size_t n, int& out) {
    if (pos + n > s.size()) return false;
    out = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
      if (s[i] < '0' || s[i] > '9') return false;
      out = out * 10 + (s[i] - '0');
    }
    return true;
  };
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (!digits(0, 4, year) || s.size() < 10 || s[4] != '-' || !digits(5, 2, month) || s[7] != '-' ||
      !digits(8, 2, day))
    return fail();
  std::size_t pos = 10;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != ' ') return fail();
    if (!digits(pos + 1, 2, hour) || pos + 3 >= s.size() || s[pos + 3] != ':' || !digits(pos + 4, 2, minute))
      return fail();
    pos += 6;
    if (pos < s.size() && s[pos] == ':') {
      if (!digits(pos + 1, 2, second)) return fail();
      pos += 3;
      if (pos < s.size() && s[pos] == '.') {
        ++pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
      }
    }
  }
  std::int64_t offset = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) {
      pos += 1;
    } else if (s[pos] == '+' || s[pos] == '-') {
      int oh = 0, om = 0;
      if (!digits(pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' || !digits(pos + 4, 2, om) ||
          pos + 6 != s.size())
        return fail();
      offset = (s[pos] == '+' ? 1 : -1) * (oh * 3600 + om * 60);
      pos = s.size();
    } else {
      return fail();
    }
  }
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month < 1 || month > 12) return fail();
  const int mdays = kDays[month - 1] + (month == 2 && is_leap(year) ? 1 : 0);
  if (day < 1 || day > mdays || hour > 23 || minute > 59 || second > 60) return fail();
  return days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)) * 86400 +
         hour * 3600 + minute * 60 + second - offset;
}

std::string format_iso8601(std::int64_t ts) {
  std::int64_t days = ts >= 0 ? ts / 86400 : -((-ts + 86399) / 86400);
  std::int64_t secs = ts - days * 86400;
  std::int64_t y = 0;
  unsigned m = 0, d = 0;
  civil_from_days(days, y, m, d);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<long long>(y), m, d,
                static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                static_cast<long long>(secs % 60));
  return buf;
}

DetectorIngest ingest_detectors(std::istream& in) {
  DetectorIngest out;
  std::string line;
  std::size_t line_no = 0;
  // Skip leading blank lines; an empty source is an empty list.
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      have_header = true;
      break;
    }
  }
  if (!have_header) return out;

  static constexpr std::string_view kColumns[] = {"detector_id", "lat",       "lon",  "timestamp_iso8601",
                                                  "flow",        "occupancy", "lanes"};
  std::string header = line;
  if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0) header.erase(0, 3);
  const auto names = split_csv(header);
  std::size_t col[7];
  for (std::size_t c = 0; c < 7; ++c) {
    const auto it = std::find(names.begin(), names.end(), kColumns[c]);
    if (it == names.end())
      throw std::runtime_error("detector CSV: missing column '" + std::string(kColumns[c]) + "'");
    col[c] = static_cast<std::size_t>(it - names.begin());
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    auto reject = [&](std::string reason) { out.rejected.push_back({line_no, std::move(reason)}); };
    if (f.size() != names.size()) {
      reject("expected " + std::to_string(names.size()) + " fields, found " + std::to_string(f.size()));
      continue;
    }
    DetectorRecord r;
    r.detector_id = std::string(f[col[0]]);
    if (r.detector_id.empty()) {
      reject("empty detector_id");
      continue;
    }
    if (!parse_double(f[col[1]], r.latitude) || r.latitude < -90.0 || r.latitude > 90.0) {
      reject("invalid lat '" + std::string(f[col[1]]) + "'");
      continue;
    }
    if (!parse_double(f[col[2]], r.longitude) || r.longitude < -180.0 || r.longitude > 180.0) {
      reject("invalid lon '" + std::string(f[col[2]]) + "'");
      continue;
    }
    try {
      r.timestamp = parse_iso8601(std::string(f[col[3]]));
    } catch (const std::invalid_argument& e) {
      reject(e.what());
      continue;
    }
    if (!parse_double(f[col[4]], r.flow) || r.flow < 0.0) {
      reject("invalid flow '" + std::string(f[col[4]]) + "'");
      continue;
    }
    if (!parse_double(f[col[5]], r.occupancy) || r.occupancy < 0.0 || r.occupancy > 1.0) {
      reject("occupancy outside [0,1]: '" + std::string(f[col[5]]) + "'");
      continue;
    }
    long long lanes = 0;
    if (!parse_int(f[col[6]], lanes) || lanes < 1 || lanes > 1000) {
      reject("invalid lanes '" + std::string(f[col[6]]) + "'");
      continue;
    }
    r.lanes = static_cast<int>(lanes);
    out.records.push_back(std::move(r));
  }
  return out;
}

DetectorIngest ingest_detectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open detector CSV " + path.string());
  return ingest_detectors(in);
}

// ---------------------------------------------------------------------------
// Clustering

Position project_equirectangular(double lat, double lon, double origin_lat, double origin_lon) {
  constexpr double kEarthRadiusM = 6371000.0;
  constexpr double kDeg = std::numbers::pi / 180.0;
  return {kEarthRadiusM * (lon - origin_lon) * kDeg * std::cos(origin_lat * kDeg),
          kEarthRadiusM * (lat - origin_lat) * kDeg};
}

namespace {

double sq_dist(const Position& a, const Position& b) {
  const double dx = a.x_m - b.x_m;
  const double dy = a.y_m - b.y_m;
  return dx * dx + dy * dy;
}

int nearest(const Position& p, const std::vector<Position>& centroids) {
  int best = 0;
  double best_d = sq_dist(p, centroids[0]);
  for (std::size_t c = 1; c < centroids.size(); ++c) {
    const double d = sq_dist(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

double objective(std::span<const Position> pts, const std::vector<int>& assign,
                 const std::vector<Position>& centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) total += sq_dist(pts[i], centroids[assign[i]]);
  return total;
}

}  // namespace

KMeansResult kmeans_lloyd(std::span<const Position> pts, int k, std::uint64_t seed, int max_iterations) {
  require(k >= 1, "k-means: k must be at least 1");
  require(static_cast<std::size_t>(k) <= pts.size(), "k-means: k exceeds the number of points");
  Rng rng(seed);
  const std::size_t n = pts.size();

  std::vector<Position> centroids;
  centroids.push_back(pts[rng.index(n)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(pts[i], centroids[0]);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (double v : d2) total += v;
    if (!(total > 0.0)) throw std::invalid_argument("k-means: k exceeds the number of distinct points");
    double target = rng.uniform() * total;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      pick = i;
      target -= d2[i];
      if (target < 0.0) break;
    }
    centroids.push_back(pts[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(pts[i], centroids.back()));
  }

  KMeansResult res;
  res.assignment.assign(n, -1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = nearest(pts[i], centroids);
      if (c != res.assignment[i]) {
        res.assignment[i] = c;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<double> sx(k, 0.0), sy(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sx[res.assignment[i]] += pts[i].x_m;
      sy[res.assignment[i]] += pts[i].y_m;
      ++count[res.assignment[i]];
    }
    // An emptied cluster keeps its previous centroid.
    for (int c = 0; c < k; ++c)
      if (count[c] > 0) centroids[c] = {sx[c] / count[c], sy[c] / count[c]};
    res.iterations = iter + 1;
    res.objective_trace.push_back(objective(pts, res.assignment, centroids));
  }
  res.centroids = std::move(centroids);
  res.wcss = objective(pts, res.assignment, res.centroids);
  return res;
}

ClusterMap cluster_detectors(std::span<const DetectorRecord> records, int k, std::uint64_t rng_seed,
                             int restarts) {
  require(k >= 1, "cluster_detectors: k must be at least 1");
  require(restarts >= 1, "cluster_detectors: restarts must be at least 1");
  std::vector<std::string> ids;
  std::vector<std::pair<double, double>> latlon;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (seen.insert(r.detector_id).second) {
      ids.push_back(r.detector_id);
      latlon.emplace_back(r.latitude, r.longitude);
    }
  }
  const std::set<std::pair<double, double>> distinct(latlon.begin(), latlon.end());
  require(static_cast<std::size_t>(k) <= distinct.size(),
          "cluster_detectors: k = " + std::to_string(k) + " exceeds " + std::to_string(distinct.size()) +
              " distinct detector positions");

  ClusterMap map;
  for (const auto& [lat, lon] : latlon) {
    map.origin_lat += lat;
    map.origin_lon += lon;
  }
  map.origin_lat /= static_cast<double>(latlon.size());
  map.origin_lon /= static_cast<double>(latlon.size());
  std::vector<Position> pts;
  pts.reserve(latlon.size());
  for (const auto& [lat, lon] : latlon)
    pts.push_back(project_equirectangular(lat, lon, map.origin_lat, map.origin_lon));

  KMeansResult best;
  for (int r = 0; r < restarts; ++r) {
    KMeansResult run = kmeans_lloyd(pts, k, derive_seed(rng_seed, "kmeans", static_cast<std::uint64_t>(r)));
    if (r == 0 || run.wcss < best.wcss) best = std::move(run);
  }
  for (std::size_t i = 0; i < ids.size(); ++i) map.assignment[ids[i]] = best.assignment[i];
  map.centroids = best.centroids;
  map.radius_m.assign(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const int c = best.assignment[i];
    map.radius_m[c] = std::max(map.radius_m[c], distance_m(pts[i], map.centroids[c]));
  }
  map.wcss = best.wcss;
  map.objective_trace = best.objective_trace;
  return map;
}

// ---------------------------------------------------------------------------
// Demand mapping

std::vector<std::vector<double>> derive_demand_load(const ClusterMap& clusters,
                                                    std::span<const DetectorRecord> records,
                                                    const DemandMapping& m) {
  require(std::isfinite(m.gamma_flow) && std::isfinite(m.gamma_occ), "demand mapping: non-finite gamma");
  require(std::isfinite(m.frame_hours) && m.frame_hours > 0.0, "demand mapping: frame_hours must be positive");
  const std::size_t k = clusters.centroids.size();
  if (records.empty()) return std::vector<std::vector<double>>(k);

  const auto frame_s = static_cast<std::int64_t>(std::llround(m.frame_hours * 3600.0));
  require(frame_s > 0, "demand mapping: frame shorter than one second");
  auto floor_div = [](std::int64_t a, std::int64_t b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  std::int64_t first = std::numeric_limits<std::int64_t>::max();
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  for (const auto& r : records) {
    const std::int64_t f = floor_div(r.timestamp, frame_s);
    first = std::min(first, f);
    last = std::max(last, f);
  }
  const auto frames = static_cast<std::size_t>(last - first + 1);
  std::vector<bool> covered(frames, false);
  std::vector<std::vector<double>> load(k, std::vector<double>(frames, 0.0));
  for (const auto& r : records) {
    const auto it = clusters.assignment.find(r.detector_id);
    if (it == clusters.assignment.end())
      throw std::invalid_argument("demand mapping: detector '" + r.detector_id + "' is not clustered");
    const auto f = static_cast<std::size_t>(floor_div(r.timestamp, frame_s) - first);
    covered[f] = true;
    load[it->second][f] += m.gamma_flow * r.flow + m.gamma_occ * r.occupancy * r.lanes;
  }
  for (std::size_t f = 0; f < frames; ++f)
    if (!covered[f])
      throw std::invalid_argument("demand mapping: no records for frame " + std::to_string(f) + " starting " +
                                  format_iso8601((first + static_cast<std::int64_t>(f)) * frame_s));
  return load;
}

std::vector<DemandTrace> derive_demand_trace(const ClusterMap& clusters, std::span<const DetectorRecord> records,
                                             const DemandMapping& m) {
  const auto load = derive_demand_load(clusters, records, m);
  std::vector<DemandTrace> out;
  for (std::size_t c = 0; c < load.size(); ++c) {
    const std::size_t frames = load[c].size();
    require(m.future_frames <= frames, "demand mapping: fewer frames than requested future frames");
    DemandTrace tr;
    tr.es_id = static_cast<int>(c);
    for (std::size_t f = 0; f < frames; ++f) {
      const int rb = static_cast<int>(std::lround(std::max(load[c][f], 0.0)));
      (f + m.future_frames < frames ? tr.history : tr.future).push_back(rb);
    }
    out.push_back(std::move(tr));
  }
  return out;
}

Scenario scenario_from_traces(const ClusterMap& clusters, std::vector<DemandTrace> traces, double frame_hours,
                              std::uint64_t rng_seed, const SyntheticOptions& o) {
  require(traces.size() == clusters.centroids.size(), "scenario_from_traces: one trace per cluster required");
  require(!traces.empty(), "scenario_from_traces: no clusters");
  Scenario sc;
  sc.frame_hours = frame_hours;
  sc.horizon = traces.front().future.size();
  sc.alpha = o.alpha;
  sc.lambda = o.lambda;
  sc.rng_seed = rng_seed;
  Rng rng(derive_seed(rng_seed, "economics"));
  for (std::size_t c = 0; c < traces.size(); ++c) {
    const auto& tr = traces[c];
    require(!tr.history.empty(), "scenario_from_traces: empty history");
    double mean = 0.0;
    for (int v : tr.history) mean += v;
    mean /= static_cast<double>(tr.history.size());
    EdgeServerProfile p;
    p.id = tr.es_id;
    p.position = clusters.centroids[c];
    p.coverage_radius_m = std::max(clusters.radius_m.empty() ? 0.0 : clusters.radius_m[c], 50.0);
    p.inherent_rb = static_cast<int>(std::lround(mean));
    const Economics e = sample_economics(rng, o, traces.size(), frame_hours);
    p.internal_revenue = e.revenue;
    p.eta_idle_w = e.eta_idle;
    p.eta_use_w = e.eta_use;
    p.omega = e.omega;
    p.seller_penalty = e.seller_penalty;
    p.true_ask = e.true_ask;
    sc.servers.push_back(p);
  }
  sc.traces = std::move(traces);
  sc.validate();
  return sc;
}

}  // namespace latrade
