#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bvl {

// Deterministic RNG with labeled sub-streams.
//
// All stochastic code in the library draws through this class so that a run is
// reproducible from a single root seed. Sub-streams derived with derive() are
// statistically independent and do not advance the parent, which lets parallel
// workers (edge evaluations, episodes) produce results identical to a serial
// run.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n). n must be positive.
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

  // Standard normal via Box-Muller. One value per call; the mate is discarded
  // so the draw count stays predictable.
  double normal() {
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Independent sub-stream identified by a label. Deterministic in
  // (root seed, label); independent of how much the parent has been consumed.
  Rng derive(std::uint64_t label) const {
    return Rng(splitmix64(seed_ ^ (0x9E3779B97F4A7C15ULL * (label + 1))));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

// Fixed stream labels so independent subsystems never share a stream.
namespace stream {
inline constexpr std::uint64_t kGraphNodes = 0x01;
inline constexpr std::uint64_t kEdgeEvalBase = 0x1000000;  // + edge id
inline constexpr std::uint64_t kEpisodeExec = 0x02;
inline constexpr std::uint64_t kEpisodeSearch = 0x03;
inline constexpr std::uint64_t kEnvGen = 0x04;
}  // namespace stream

}  // namespace bvl
