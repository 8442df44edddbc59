#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace sslus {

/// Seeded random stream. Every randomized operation takes one of these
/// explicitly; nothing in the library touches a global generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 42) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  /// Uniform integer in [lo, hi] (inclusive).
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }
  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return engine_; }

  std::string state() const;
  void restore(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

/// Mixes its arguments into a 64-bit seed (splitmix64 finalizer). Used to
/// derive independent per-sample streams as hash(seed, epoch, sample).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);
std::uint64_t hash_string(std::string_view s);

inline Rng derive_stream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t sample) {
  return Rng(mix_seed(seed, epoch, sample));
}

}  // namespace sslus
