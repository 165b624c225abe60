#pragma once

#include <cstdint>
#include <random>

namespace gchmm {

using Rng = std::mt19937_64;

// Independent sub-stream tags. Values are part of the reproducibility contract:
// never renumber, only append.
enum class Stream : std::uint64_t {
  families = 1,
  network = 2,
  parameters = 3,
  epidemic = 4,
  tests = 5,
  chain = 6,
  dataset = 7,
  split = 8,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based seed derivation: the sub-seed for (stream, index) depends only
// on the root seed and those two counters, so appending replicates never
// perturbs existing streams.
inline constexpr std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(root);
  h = splitmix64(h ^ (static_cast<std::uint64_t>(stream) * 0xd6e8feb86659fd93ULL));
  return splitmix64(h ^ (index * 0xa0761d6478bd642fULL + 0x2d358dccaa6c78a5ULL));
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Inverse-CDF Bernoulli draw: 1 when d < p for d uniform on [0,1).
inline int sample_bernoulli(double p, Rng& rng) { return uniform01(rng) < p ? 1 : 0; }

inline double sample_beta(double a, double b, Rng& rng) {
  const double x = std::gamma_distribution<double>(a, 1.0)(rng);
  const double y = std::gamma_distribution<double>(b, 1.0)(rng);
  return x / (x + y);
}

}  // namespace gchmm
