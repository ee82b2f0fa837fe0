#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace latrade {

// Name and version of the generator. Streams are reproducible across
// platforms because every transform below is implemented here rather than
// delegated to the std distributions (whose output is implementation defined).
inline constexpr std::string_view kRngName = "mt19937_64/v1";

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  // Uniform in [lo, hi); returns lo when lo == hi.
  double uniform(double lo, double hi);
  // Uniform integer in the closed range [lo, hi], rejection sampled.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Uniform index in [0, n). n must be positive.
  std::size_t index(std::size_t n);
  // Normal variate (Marsaglia polar method, spare value cached).
  double normal(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Derive an independent sub-seed for a named stream (per ES, per trial, ...).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t stream = 0);

}  // namespace latrade
