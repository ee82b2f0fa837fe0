#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace latrade {

struct Position {
  double x_m = 0.0;
  double y_m = 0.0;
};

double distance_m(const Position& a, const Position& b);

struct EdgeServerProfile {
  int id = 0;
  Position position;
  double coverage_radius_m = 1.0;
  int inherent_rb = 0;           // R_In
  double eta_use_w = 1.0;        // watts per active RB
  double eta_idle_w = 0.0;       // watts per idle RB
  double omega = 1.0;            // transmission cost coefficient
  double internal_revenue = 0.0; // v, also the buyer's true bid'
  double seller_penalty = 0.0;   // q_S
  double true_ask = 0.0;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct DemandTrace {
  int es_id = 0;
  std::vector<int> history;
  std::vector<int> future;

  void validate() const;
};

struct Scenario {
  std::vector<EdgeServerProfile> servers;
  std::vector<DemandTrace> traces;  // traces[k] belongs to servers[k]
  double frame_hours = 1.0;
  std::size_t horizon = 24;
  double alpha = 500.0;
  double lambda = 0.001;
  std::uint64_t rng_seed = 0;

  void validate() const;
  // Frames in one day at this granularity (24 hourly, 48 half-hourly).
  int frames_per_day() const;
  // Realized demand of every server at a horizon frame, in server order.
  std::vector<int> realized(std::size_t frame) const;
  std::size_t index_of(int es_id) const;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Every distribution parameter of the synthetic generator. Defaults are the
// reference configuration; callers override any field.
struct SyntheticOptions {
  double area_km2_at_10 = 1.0;
  double area_km2_at_50 = 6.5;
  Range radius_m{200.0, 700.0};
  int r_in_min = 50;
  int r_in_max = 200;
  Range demand_variance{10.0, 60.0};
  Range revenue{50.0, 100.0};
  Range idle_loss{5.0, 15.0};          // currency per idle RB-hour
  Range active_power_ratio{1.5, 2.5};  // eta_use / eta_idle
  Range ask_markup{1.0, 1.5};          // true_ask over active energy cost
  std::optional<Range> omega;          // unset: picked by market scale
  double diurnal_amplitude = 0.6;      // relative swing of the mean demand
  double phase_spread = 0.5;           // fraction of a day over which peaks are spread
  std::size_t history_frames = 192;
  std::size_t horizon = 24;
  double frame_hours = 1.0;
  double alpha = 500.0;
  double lambda = 0.001;

  void validate() const;
};

// Area of the square deployment region for a market of n servers.
double synthetic_area_km2(std::size_t n_servers, const SyntheticOptions& options);

Scenario generate_synthetic(std::size_t n_servers, std::uint64_t rng_seed,
                            const SyntheticOptions& options = {});

// Mean demand of server k at absolute frame t (history frames first).
double synthetic_mean_demand(int inherent_rb, double amplitude, double phase, int period,
                             std::size_t t);

// ---------------------------------------------------------------------------
// Detector traces

struct DetectorRecord {
  std::string detector_id;
  double latitude = 0.0;
  double longitude = 0.0;
  std::int64_t timestamp = 0;  // seconds since the Unix epoch, UTC
  double flow = 0.0;
  double occupancy = 0.0;
  int lanes = 1;
};

struct RejectedRow {
  std::size_t line = 0;
  std::string reason;
};

struct DetectorIngest {
  std::vector<DetectorRecord> records;
  std::vector<RejectedRow> rejected;
};

// Parses the detector CSV. A missing column throws; bad rows are collected.
DetectorIngest ingest_detectors(std::istream& csv);
DetectorIngest ingest_detectors(const std::filesystem::path& csv_path);

// "2017-05-01T13:15:00Z", "2017-05-01T13:15:00", "2017-05-01 13:15:00" or
// with a +hh:mm offset. Throws std::invalid_argument.
std::int64_t parse_iso8601(const std::string& text);
std::string format_iso8601(std::int64_t timestamp);

struct ClusterMap {
  std::map<std::string, int> assignment;  // detector_id -> cluster
  std::vector<Position> centroids;        // planar meters around the origin
  double origin_lat = 0.0;
  double origin_lon = 0.0;
  std::vector<double> radius_m;           // farthest member from each centroid
  double wcss = 0.0;                      // within-cluster sum of squares
  std::vector<double> objective_trace;    // objective per Lloyd iteration, best restart
};

Position project_equirectangular(double lat, double lon, double origin_lat, double origin_lon);

struct KMeansResult {
  std::vector<int> assignment;
  std::vector<Position> centroids;
  double wcss = 0.0;
  std::vector<double> objective_trace;
  int iterations = 0;
};

// One k-means++ seeded Lloyd run over planar points.
KMeansResult kmeans_lloyd(std::span<const Position> points, int k, std::uint64_t seed,
                          int max_iterations = 100);

ClusterMap cluster_detectors(std::span<const DetectorRecord> records, int k,
                             std::uint64_t rng_seed, int restarts = 10);

struct DemandMapping {
  double gamma_flow = 0.05;
  double gamma_occ = 20.0;
  double frame_hours = 1.0;
  std::size_t future_frames = 0;  // trailing frames moved to DemandTrace::future
};

// Pre-rounding demand per cluster (outer) and frame (inner).
std::vector<std::vector<double>> derive_demand_load(const ClusterMap& clusters,
                                                    std::span<const DetectorRecord> records,
                                                    const DemandMapping& mapping);

std::vector<DemandTrace> derive_demand_trace(const ClusterMap& clusters,
                                             std::span<const DetectorRecord> records,
                                             const DemandMapping& mapping);

// Build a complete scenario from clustered detector traces. Economics are
// sampled like the synthetic generator; R_In is the rounded history mean.
Scenario scenario_from_traces(const ClusterMap& clusters, std::vector<DemandTrace> traces,
                              double frame_hours, std::uint64_t rng_seed,
                              const SyntheticOptions& options = {});

}  // namespace latrade
